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

#include "latent_lens/melody.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"
#include "latent_lens/error.hpp"

namespace latent_lens {

Pitch::Pitch(int value) : value_(value) {
  if (value < kMin || value > kMax) {
    throw DomainError("pitch " + std::to_string(value) + " outside 0..127");
  }
}

Token Token::FromCode(int code) {
  if (code < 0 || code >= kVocabSize) {
    throw DomainError("token code " + std::to_string(code) + " outside 0..129");
  }
  return Token(static_cast<std::uint8_t>(code));
}

TokenSequence::TokenSequence(std::vector<Token> tokens, int bars)
    : tokens_(std::move(tokens)), bars_(bars) {
  if (bars < 1) throw StructuralInputError("bars must be >= 1");
  const auto expected = static_cast<std::size_t>(GridSpec::steps_for_bars(bars));
  if (tokens_.size() != expected) {
    throw StructuralInputError("token sequence has " + std::to_string(tokens_.size()) +
                               " steps, expected " + std::to_string(expected));
  }
  if (tokens_.front().kind() == Token::Kind::kHold) {
    throw StructuralInputError("token sequence starts with Hold");
  }
}

TokenSequence TokenSequence::FromCodes(const std::vector<int>& codes, int bars) {
  std::vector<Token> tokens;
  tokens.reserve(codes.size());
  for (int c : codes) tokens.push_back(Token::FromCode(c));
  return TokenSequence(std::move(tokens), bars);
}

std::vector<int> TokenSequence::codes() const {
  std::vector<int> out;
  out.reserve(tokens_.size());
  for (const auto& t : tokens_) out.push_back(t.code());
  return out;
}

void validate(const Melody& melody) {
  if (melody.bars < 1) throw StructuralInputError("bars must be >= 1");
  if (!(melody.tempo_qpm > 0.0) || !std::isfinite(melody.tempo_qpm)) {
    throw DomainError("tempo_qpm must be positive and finite");
  }
  const int total = melody.total_steps();
  int prev_end = 0;
  for (std::size_t i = 0; i < melody.spans.size(); ++i) {
    const auto& s = melody.spans[i];
    if (s.onset_step < 0 || s.duration_steps < 1 || s.end_step() > total) {
      throw StructuralInputError("span " + std::to_string(i) + " outside the " +
                                 std::to_string(total) + "-step grid");
    }
    if (s.onset_step < prev_end) {
      throw StructuralInputError("span " + std::to_string(i) +
                                 " overlaps or precedes the previous span");
    }
    prev_end = s.end_step();
  }
}

TokenSequence tokenize(const Melody& melody) {
  validate(melody);
  const int total = melody.total_steps();
  std::vector<Token> tokens(static_cast<std::size_t>(total), Token::Hold());
  int cursor = 0;
  for (const auto& s : melody.spans) {
    if (s.onset_step > cursor) tokens[cursor] = Token::RestStart();
    tokens[s.onset_step] = Token::NoteOn(s.pitch);
    cursor = s.end_step();
  }
  if (cursor < total) tokens[cursor] = Token::RestStart();
  return TokenSequence(std::move(tokens), melody.bars);
}

Melody detokenize(const TokenSequence& seq, double tempo_qpm) {
  if (!(tempo_qpm > 0.0)) throw DomainError("tempo_qpm must be positive");
  if (seq[0].kind() == Token::Kind::kHold) {
    throw StructuralInputError("token sequence starts with Hold");
  }
  Melody m;
  m.bars = seq.bars();
  m.tempo_qpm = tempo_qpm;
  bool sounding = false;
  for (std::size_t t = 0; t < seq.size(); ++t) {
    const Token tok = seq[t];
    switch (tok.kind()) {
      case Token::Kind::kNoteOn:
        m.spans.push_back({tok.pitch(), static_cast<int>(t), 1});
        sounding = true;
        break;
      case Token::Kind::kRestStart:
        sounding = false;
        break;
      case Token::Kind::kHold:
        if (sounding) ++m.spans.back().duration_steps;
        break;
    }
  }
  return m;
}

double duration_seconds(const TokenSequence& seq, double tempo_qpm) {
  if (!(tempo_qpm > 0.0)) throw DomainError("tempo_qpm must be positive");
  return seq.bars() * GridSpec::kQuartersPerBar * 60.0 / tempo_qpm;
}

std::string to_jsonl(const CorpusRecord& record) {
  nlohmann::json j;
  j["bars"] = record.tokens.bars();
  j["tempo_qpm"] = record.tempo_qpm;
  j["tokens"] = record.tokens.codes();
  return j.dump();
}

CorpusRecord from_jsonl(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
    const int bars = j.at("bars").get<int>();
    const double tempo = j.at("tempo_qpm").get<double>();
    if (!(tempo > 0.0)) throw DomainError("tempo_qpm must be positive");
    auto codes = j.at("tokens").get<std::vector<int>>();
    return CorpusRecord{TokenSequence::FromCodes(codes, bars), tempo};
  } catch (const nlohmann::json::exception& e) {
    throw StructuralInputError(std::string("malformed corpus line: ") + e.what());
  }
}

std::vector<CorpusRecord> read_corpus(std::istream& in) {
  std::vector<CorpusRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(from_jsonl(line));
    } catch (const Error& e) {
      throw StructuralInputError("corpus line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<CorpusRecord> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw StructuralInputError("cannot open corpus " + path.string());
  return read_corpus(in);
}

void write_corpus(std::ostream& out, const std::vector<CorpusRecord>& records) {
  for (const auto& r : records) out << to_jsonl(r) << '\n';
}

void write_corpus(const std::filesystem::path& path, const std::vector<CorpusRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw StructuralInputError("cannot write corpus " + path.string());
  write_corpus(out, records);
}

std::vector<CorpusRecord> to_records(const std::vector<Melody>& melodies) {
  std::vector<CorpusRecord> out;
  out.reserve(melodies.size());
  for (const auto& m : melodies) out.push_back({tokenize(m), m.tempo_qpm});
  return out;
}

}  // namespace latent_lens
