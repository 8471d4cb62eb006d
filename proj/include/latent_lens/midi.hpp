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

// Standard MIDI File reading/writing and monophonic melody extraction.

#ifndef LATENT_LENS_MIDI_HPP_
#define LATENT_LENS_MIDI_HPP_

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "latent_lens/melody.hpp"

namespace latent_lens {

struct NoteOnEvent {
  int channel;
  int pitch;
  int velocity;
  bool operator==(const NoteOnEvent&) const = default;
};

struct NoteOffEvent {
  int channel;
  int pitch;
  bool operator==(const NoteOffEvent&) const = default;
};

struct TempoChangeEvent {
  std::uint32_t microseconds_per_quarter;
  bool operator==(const TempoChangeEvent&) const = default;
};

struct TimeSignatureEvent {
  int numerator;
  int denominator;
  bool operator==(const TimeSignatureEvent&) const = default;
};

// Anything else: other channel messages, sysex, unknown meta events.
// status is the status byte (0xFF for meta, 0xF0/0xF7 for sysex); meta_type
// is only set for meta events.
struct OtherEvent {
  std::uint8_t status = 0;
  std::uint8_t meta_type = 0;
  std::vector<std::uint8_t> data;
  bool operator==(const OtherEvent&) const = default;
};

using MidiEventKind =
    std::variant<NoteOnEvent, NoteOffEvent, TempoChangeEvent, TimeSignatureEvent, OtherEvent>;

struct MidiEvent {
  std::uint64_t tick = 0;  // absolute
  MidiEventKind kind;
  bool operator==(const MidiEvent&) const = default;
};

struct MidiFile {
  int format = 0;
  int ticks_per_quarter = 480;
  std::vector<std::vector<MidiEvent>> tracks;
};

// Decodes SMF format 0/1. NoteOn with velocity 0 is reported as NoteOff.
// Throws ParseError with the failing byte offset.
MidiFile parse_midi(std::span<const std::uint8_t> bytes);

struct ExtractionConfig {
  int bars = 2;
  int max_melodies_per_file = 5;
  int min_notes = 3;
  bool require_four_four = true;

  // Throws ConfigError.
  void validate() const;
};

// Each track (percussion channel excluded) is reduced to one monophonic line,
// quantized to sixteenth-note steps and cut into consecutive windows of
// cfg.bars bars. The first windows with at least cfg.min_notes onsets are
// returned, at most cfg.max_melodies_per_file per file.
std::vector<Melody> extract_melodies(const MidiFile& file, const ExtractionConfig& cfg);

// Format 0, 480 ticks per quarter, tempo and 4/4 meta events, channel 0.
std::vector<std::uint8_t> write_midi(const Melody& melody);

inline constexpr int kWriteTicksPerQuarter = 480;

}  // namespace latent_lens

#endif  // LATENT_LENS_MIDI_HPP_
