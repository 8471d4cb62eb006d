// Copyright 2026 The latent-lens Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Quantized monophonic melodies and their 130-symbol token form.
//
// A melody lives on a 4/4 grid of sixteenth-note steps (16 per bar). Each
// step carries one token: NoteOn(pitch) for codes 0..127, RestStart (128)
// or Hold (129). Hold continues whatever the previous step started, so a
// sequence never begins with Hold and notes end implicitly at the next
// NoteOn or RestStart.

#ifndef LATENT_LENS_MELODY_HPP_
#define LATENT_LENS_MELODY_HPP_

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace latent_lens {

struct GridSpec {
  static constexpr int kStepsPerQuarter = 4;
  static constexpr int kQuartersPerBar = 4;
  static constexpr int kStepsPerBar = kStepsPerQuarter * kQuartersPerBar;

  static constexpr int steps_for_bars(int bars) { return kStepsPerBar * bars; }
};

inline constexpr int kVocabSize = 130;
inline constexpr int kRestStartCode = 128;
inline constexpr int kHoldCode = 129;

class Pitch {
 public:
  static constexpr int kMin = 0;
  static constexpr int kMax = 127;

  // Throws DomainError outside 0..127.
  explicit Pitch(int value);

  int value() const { return value_; }
  auto operator<=>(const Pitch&) const = default;

 private:
  int value_;
};

class Token {
 public:
  enum class Kind : std::uint8_t { kNoteOn, kRestStart, kHold };

  static Token NoteOn(Pitch pitch) { return Token(static_cast<std::uint8_t>(pitch.value())); }
  static Token RestStart() { return Token(kRestStartCode); }
  static Token Hold() { return Token(kHoldCode); }
  // Throws DomainError outside 0..129.
  static Token FromCode(int code);

  int code() const { return code_; }
  Kind kind() const {
    if (code_ < kRestStartCode) return Kind::kNoteOn;
    return code_ == kRestStartCode ? Kind::kRestStart : Kind::kHold;
  }
  bool is_note_on() const { return kind() == Kind::kNoteOn; }
  // Only meaningful for NoteOn tokens.
  Pitch pitch() const { return Pitch(code_); }

  bool operator==(const Token&) const = default;

 private:
  explicit Token(std::uint8_t code) : code_(code) {}
  std::uint8_t code_;
};

class TokenSequence {
 public:
  // Validates length == 16 * bars and that the first token is not Hold.
  TokenSequence(std::vector<Token> tokens, int bars);
  static TokenSequence FromCodes(const std::vector<int>& codes, int bars);

  const std::vector<Token>& tokens() const { return tokens_; }
  int bars() const { return bars_; }
  std::size_t size() const { return tokens_.size(); }
  const Token& operator[](std::size_t i) const { return tokens_[i]; }
  std::vector<int> codes() const;

  bool operator==(const TokenSequence&) const = default;

 private:
  std::vector<Token> tokens_;
  int bars_;
};

struct NoteSpan {
  Pitch pitch{60};
  int onset_step = 0;
  int duration_steps = 1;

  int end_step() const { return onset_step + duration_steps; }
  bool operator==(const NoteSpan&) const = default;
};

struct Melody {
  std::vector<NoteSpan> spans;
  int bars = 2;
  double tempo_qpm = 120.0;

  int total_steps() const { return GridSpec::steps_for_bars(bars); }
  bool operator==(const Melody&) const = default;
};

// Throws StructuralInputError when spans overlap, are unsorted, fall outside
// the grid, or have non-positive duration; DomainError for a bad tempo.
void validate(const Melody& melody);

TokenSequence tokenize(const Melody& melody);
Melody detokenize(const TokenSequence& tokens, double tempo_qpm);

// Wall-clock length of the sequence: bars * 4 quarters at the given tempo.
double duration_seconds(const TokenSequence& seq, double tempo_qpm);

// One line of the JSONL corpus format shared by every tool:
// {"bars": n, "tempo_qpm": x, "tokens": [ints]}
struct CorpusRecord {
  TokenSequence tokens;
  double tempo_qpm;

  Melody melody() const { return detokenize(tokens, tempo_qpm); }
};

std::string to_jsonl(const CorpusRecord& record);
CorpusRecord from_jsonl(std::string_view line);

std::vector<CorpusRecord> read_corpus(std::istream& in);
std::vector<CorpusRecord> read_corpus(const std::filesystem::path& path);
void write_corpus(std::ostream& out, const std::vector<CorpusRecord>& records);
void write_corpus(const std::filesystem::path& path, const std::vector<CorpusRecord>& records);

std::vector<CorpusRecord> to_records(const std::vector<Melody>& melodies);

}  // namespace latent_lens

#endif  // LATENT_LENS_MELODY_HPP_
