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

#include "latent_lens/midi.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "latent_lens/error.hpp"

namespace latent_lens {
namespace {

constexpr int kPercussionChannel = 9;
constexpr std::uint8_t kMetaEndOfTrack = 0x2F;
constexpr std::uint8_t kMetaTempo = 0x51;
constexpr std::uint8_t kMetaTimeSignature = 0x58;

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  void require(std::size_t n, const char* what) const {
    if (remaining() < n) throw ParseError(std::string("truncated ") + what, pos_);
  }
  std::uint8_t u8(const char* what) {
    require(1, what);
    return bytes_[pos_++];
  }
  std::uint8_t peek(const char* what) const {
    require(1, what);
    return bytes_[pos_];
  }
  std::uint32_t u16(const char* what) {
    require(2, what);
    std::uint32_t v = (std::uint32_t{bytes_[pos_]} << 8) | bytes_[pos_ + 1];
    pos_ += 2;
    return v;
  }
  std::uint32_t u32(const char* what) {
    require(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | bytes_[pos_ + i];
    pos_ += 4;
    return v;
  }
  std::uint32_t vlq(const char* what) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      const std::uint8_t b = u8(what);
      v = (v << 7) | (b & 0x7F);
      if (!(b & 0x80)) return v;
    }
    throw ParseError(std::string("variable-length quantity longer than 4 bytes in ") + what,
                     pos_ - 1);
  }
  std::vector<std::uint8_t> bytes(std::size_t n, const char* what) {
    require(n, what);
    std::vector<std::uint8_t> out(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                  bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return out;
  }
  bool tag(const char* four) {
    require(4, "chunk id");
    const bool match = std::equal(four, four + 4, bytes_.begin() + static_cast<std::ptrdiff_t>(pos_));
    pos_ += 4;
    return match;
  }
  ByteReader sub(std::size_t n, const char* what) {
    require(n, what);
    ByteReader r(bytes_.first(pos_ + n));
    r.pos_ = pos_;
    pos_ += n;
    return r;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

int channel_data_bytes(std::uint8_t status) {
  switch (status & 0xF0) {
    case 0xC0:
    case 0xD0:
      return 1;
    default:
      return 2;
  }
}

std::vector<MidiEvent> parse_track(ByteReader r) {
  std::vector<MidiEvent> events;
  std::uint64_t tick = 0;
  std::uint8_t running = 0;
  while (r.remaining() > 0) {
    tick += r.vlq("delta time");
    const std::size_t event_offset = r.offset();
    std::uint8_t status = r.peek("event");
    if (status & 0x80) {
      r.u8("event");
    } else {
      if (running == 0) throw ParseError("data byte without running status", event_offset);
      status = running;
    }

    if (status == 0xFF) {
      running = 0;
      const std::uint8_t type = r.u8("meta type");
      const std::uint32_t len = r.vlq("meta length");
      auto data = r.bytes(len, "meta event");
      if (type == kMetaTempo && len == 3) {
        const std::uint32_t us = (std::uint32_t{data[0]} << 16) | (std::uint32_t{data[1]} << 8) | data[2];
        events.push_back({tick, TempoChangeEvent{us}});
      } else if (type == kMetaTimeSignature && len >= 2) {
        events.push_back({tick, TimeSignatureEvent{data[0], 1 << data[1]}});
      } else {
        events.push_back({tick, OtherEvent{0xFF, type, std::move(data)}});
        if (type == kMetaEndOfTrack) break;
      }
    } else if (status == 0xF0 || status == 0xF7) {
      running = 0;
      const std::uint32_t len = r.vlq("sysex length");
      events.push_back({tick, OtherEvent{status, 0, r.bytes(len, "sysex event")}});
    } else if (status >= 0xF0) {
      throw ParseError("unsupported system message in track", event_offset);
    } else {
      running = status;
      const int channel = status & 0x0F;
      std::uint8_t d0 = r.u8("channel message");
      std::uint8_t d1 = channel_data_bytes(status) == 2 ? r.u8("channel message") : 0;
      if ((d0 | d1) & 0x80) throw ParseError("status byte inside channel message", r.offset() - 1);
      switch (status & 0xF0) {
        case 0x90:
          if (d1 > 0) {
            events.push_back({tick, NoteOnEvent{channel, d0, d1}});
            break;
          }
          [[fallthrough]];
        case 0x80:
          events.push_back({tick, NoteOffEvent{channel, d0}});
          break;
        default: {
          std::vector<std::uint8_t> data{d0};
          if (channel_data_bytes(status) == 2) data.push_back(d1);
          events.push_back({tick, OtherEvent{status, 0, std::move(data)}});
        }
      }
    }
  }
  return events;
}

struct RawNote {
  std::uint64_t onset;
  std::uint64_t end;
  int pitch;
};

struct StepNote {
  int onset;
  int end;
  int pitch;
};

std::uint64_t track_end_tick(const std::vector<MidiEvent>& events) {
  return events.empty() ? 0 : events.back().tick;
}

std::vector<RawNote> collect_notes(const std::vector<MidiEvent>& events) {
  std::vector<RawNote> notes;
  std::map<std::pair<int, int>, std::uint64_t> sounding;
  for (const auto& ev : events) {
    if (const auto* on = std::get_if<NoteOnEvent>(&ev.kind)) {
      if (on->channel == kPercussionChannel) continue;
      const auto key = std::make_pair(on->channel, on->pitch);
      if (auto it = sounding.find(key); it != sounding.end()) {
        notes.push_back({it->second, ev.tick, on->pitch});
      }
      sounding[key] = ev.tick;
    } else if (const auto* off = std::get_if<NoteOffEvent>(&ev.kind)) {
      if (off->channel == kPercussionChannel) continue;
      auto it = sounding.find({off->channel, off->pitch});
      if (it == sounding.end()) continue;
      notes.push_back({it->second, ev.tick, off->pitch});
      sounding.erase(it);
    }
  }
  const std::uint64_t end = track_end_tick(events);
  for (const auto& [key, onset] : sounding) notes.push_back({onset, end, key.second});
  return notes;
}

int quantize(std::uint64_t tick, int tpq) {
  return static_cast<int>(std::lround(static_cast<double>(tick) * GridSpec::kStepsPerQuarter / tpq));
}

// Quantizes then resolves overlaps: a note is cut short by any later onset;
// among notes sharing an onset the highest pitch is kept.
std::vector<StepNote> monophonic_line(std::vector<RawNote> notes, int tpq) {
  const double half_step_ticks = tpq / (2.0 * GridSpec::kStepsPerQuarter);
  std::vector<StepNote> q;
  for (const auto& n : notes) {
    if (static_cast<double>(n.end - n.onset) < half_step_ticks) continue;
    const int on = quantize(n.onset, tpq);
    const int end = std::max(quantize(n.end, tpq), on + 1);
    q.push_back({on, end, n.pitch});
  }
  std::stable_sort(q.begin(), q.end(), [](const StepNote& a, const StepNote& b) {
    return a.onset != b.onset ? a.onset < b.onset : a.pitch < b.pitch;
  });
  std::vector<StepNote> line;
  for (const auto& n : q) {
    while (!line.empty() && line.back().onset == n.onset) line.pop_back();
    if (!line.empty() && line.back().end > n.onset) line.back().end = n.onset;
    line.push_back(n);
  }
  return line;
}

bool has_four_four(const MidiFile& file) {
  bool seen = false;
  for (const auto& track : file.tracks) {
    for (const auto& ev : track) {
      if (const auto* ts = std::get_if<TimeSignatureEvent>(&ev.kind)) {
        if (ts->numerator != 4 || ts->denominator != 4) return false;
        seen = true;
      }
    }
  }
  return seen;
}

class TempoMap {
 public:
  explicit TempoMap(const MidiFile& file) {
    for (const auto& track : file.tracks) {
      for (const auto& ev : track) {
        if (const auto* t = std::get_if<TempoChangeEvent>(&ev.kind)) {
          changes_.emplace_back(ev.tick, t->microseconds_per_quarter);
        }
      }
    }
    std::stable_sort(changes_.begin(), changes_.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
  }

  double qpm_at(std::uint64_t tick) const {
    std::uint32_t us = 500000;
    for (const auto& [t, v] : changes_) {
      if (t > tick) break;
      us = v;
    }
    return us == 0 ? 120.0 : 60.0e6 / us;
  }

 private:
  std::vector<std::pair<std::uint64_t, std::uint32_t>> changes_;
};

void put_u16(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

void put_vlq(std::vector<std::uint8_t>& out, std::uint32_t v) {
  std::uint8_t buf[5];
  int n = 0;
  buf[n++] = v & 0x7F;
  while (v >>= 7) buf[n++] = static_cast<std::uint8_t>(0x80 | (v & 0x7F));
  while (n > 0) out.push_back(buf[--n]);
}

}  // namespace

MidiFile parse_midi(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (!r.tag("MThd")) throw ParseError("missing MThd header", 0);
  const std::uint32_t header_len = r.u32("header length");
  if (header_len < 6) throw ParseError("header chunk shorter than 6 bytes", 4);
  ByteReader header = r.sub(header_len, "header chunk");
  MidiFile file;
  const std::size_t format_offset = header.offset();
  file.format = static_cast<int>(header.u16("format"));
  const std::uint32_t ntracks = header.u16("track count");
  const std::size_t division_offset = header.offset();
  const std::uint32_t division = header.u16("division");
  if (file.format == 2) throw ParseError("SMF format 2 is not supported", format_offset);
  if (file.format > 2) throw ParseError("unknown SMF format", format_offset);
  if (division & 0x8000) throw ParseError("SMPTE time division is not supported", division_offset);
  if (division == 0) throw ParseError("ticks per quarter must be positive", division_offset);
  if (ntracks == 0) throw ParseError("file declares no tracks", format_offset + 2);
  file.ticks_per_quarter = static_cast<int>(division);

  while (file.tracks.size() < ntracks) {
    const std::size_t chunk_offset = r.offset();
    if (r.remaining() == 0) {
      throw ParseError("file ends before all " + std::to_string(ntracks) + " tracks", chunk_offset);
    }
    const bool is_track = r.tag("MTrk");
    const std::uint32_t len = r.u32("chunk length");
    ByteReader body = r.sub(len, is_track ? "MTrk chunk" : "chunk");
    if (is_track) file.tracks.push_back(parse_track(body));
  }
  return file;
}

void ExtractionConfig::validate() const {
  if (bars != 2 && bars != 16) throw ConfigError("bars must be 2 or 16");
  if (max_melodies_per_file < 1) throw ConfigError("max_melodies_per_file must be >= 1");
  if (min_notes < 0) throw ConfigError("min_notes must be >= 0");
}

std::vector<Melody> extract_melodies(const MidiFile& file, const ExtractionConfig& cfg) {
  cfg.validate();
  std::vector<Melody> out;
  if (cfg.require_four_four && !has_four_four(file)) return out;
  const TempoMap tempo(file);
  const int tpq = file.ticks_per_quarter;
  const int window = GridSpec::steps_for_bars(cfg.bars);

  for (const auto& track : file.tracks) {
    const auto line = monophonic_line(collect_notes(track), tpq);
    int last_step = quantize(track_end_tick(track), tpq);
    if (!line.empty()) last_step = std::max(last_step, line.back().end);
    const int n_windows = (last_step + window - 1) / window;

    auto it = line.begin();
    for (int w = 0; w < n_windows; ++w) {
      const int start = w * window;
      const int stop = start + window;
      Melody m;
      m.bars = cfg.bars;
      m.tempo_qpm = tempo.qpm_at(static_cast<std::uint64_t>(start) * tpq / GridSpec::kStepsPerQuarter);
      while (it != line.end() && it->onset < start) ++it;
      for (auto jt = it; jt != line.end() && jt->onset < stop; ++jt) {
        m.spans.push_back({Pitch(jt->pitch), jt->onset - start, std::min(jt->end, stop) - jt->onset});
      }
      if (static_cast<int>(m.spans.size()) < cfg.min_notes) continue;
      out.push_back(std::move(m));
      if (static_cast<int>(out.size()) >= cfg.max_melodies_per_file) return out;
    }
  }
  return out;
}

std::vector<std::uint8_t> write_midi(const Melody& melody) {
  validate(melody);
  constexpr std::uint32_t kTicksPerStep = kWriteTicksPerQuarter / GridSpec::kStepsPerQuarter;
  std::vector<std::uint8_t> track;
  const auto us = static_cast<std::uint32_t>(std::lround(60.0e6 / melody.tempo_qpm));
  put_vlq(track, 0);
  track.insert(track.end(), {0xFF, kMetaTempo, 0x03, static_cast<std::uint8_t>(us >> 16),
                             static_cast<std::uint8_t>(us >> 8), static_cast<std::uint8_t>(us)});
  put_vlq(track, 0);
  track.insert(track.end(), {0xFF, kMetaTimeSignature, 0x04, 0x04, 0x02, 0x18, 0x08});

  std::uint32_t now = 0;
  for (const auto& s : melody.spans) {
    const std::uint32_t on = static_cast<std::uint32_t>(s.onset_step) * kTicksPerStep;
    const std::uint32_t off = static_cast<std::uint32_t>(s.end_step()) * kTicksPerStep;
    const auto pitch = static_cast<std::uint8_t>(s.pitch.value());
    put_vlq(track, on - now);
    track.insert(track.end(), {0x90, pitch, 100});
    put_vlq(track, off - on);
    track.insert(track.end(), {0x80, pitch, 0});
    now = off;
  }
  const std::uint32_t end = static_cast<std::uint32_t>(melody.total_steps()) * kTicksPerStep;
  put_vlq(track, end - now);
  track.insert(track.end(), {0xFF, kMetaEndOfTrack, 0x00});

  std::vector<std::uint8_t> out{'M', 'T', 'h', 'd'};
  put_u32(out, 6);
  put_u16(out, 0);
  put_u16(out, 1);
  put_u16(out, kWriteTicksPerQuarter);
  out.insert(out.end(), {'M', 'T', 'r', 'k'});
  put_u32(out, static_cast<std::uint32_t>(track.size()));
  out.insert(out.end(), track.begin(), track.end());
  return out;
}

}  // namespace latent_lens
