#include "p2m/dataset/midi.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <iterator>
#include <map>
#include <tuple>

namespace p2m::dataset {

double MidiSong::end_time() const {
  double t = 0.0;
  for (const auto& n : notes) t = std::max(t, n.end);
  return t;
}

namespace {

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, const std::string& origin) : bytes_(bytes), origin_(origin) {}

  [[nodiscard]] std::size_t pos() const { return pos_; }
  [[nodiscard]] bool done() const { return pos_ >= bytes_.size(); }
  void seek(std::size_t p) { pos_ = p; }

  [[noreturn]] void fail(const std::string& what) const { throw MidiParseError(origin_, pos_, what); }

  std::uint8_t u8() {
    if (pos_ >= bytes_.size()) fail("unexpected end of data");
    return bytes_[pos_++];
  }
  std::uint8_t peek() const {
    if (pos_ >= bytes_.size()) fail("unexpected end of data");
    return bytes_[pos_];
  }
  std::uint32_t be(int n) {
    std::uint32_t v = 0;
    for (int i = 0; i < n; ++i) v = (v << 8) | u8();
    return v;
  }
  std::uint32_t vlq() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      const std::uint8_t b = u8();
      v = (v << 7) | (b & 0x7f);
      if (!(b & 0x80)) return v;
    }
    fail("variable-length quantity longer than 4 bytes");
  }
  void skip(std::size_t n) {
    if (n > bytes_.size() - pos_) fail("length runs past end of data");
    pos_ += n;
  }
  bool tag(const char* t) {
    if (bytes_.size() - pos_ < 4) return false;
    return std::equal(t, t + 4, bytes_.begin() + static_cast<std::ptrdiff_t>(pos_));
  }

 private:
  std::span<const std::uint8_t> bytes_;
  const std::string& origin_;
  std::size_t pos_ = 0;
};

struct RawNote {
  int channel, key, velocity;
  std::uint64_t on_tick, off_tick;
};

struct TempoEvent {
  std::uint64_t tick;
  std::uint32_t usec_per_quarter;
};

}  // namespace

MidiSong parse_midi(std::span<const std::uint8_t> bytes, const std::string& origin) {
  Reader r(bytes, origin);
  if (!r.tag("MThd")) r.fail("missing MThd header");
  r.skip(4);
  const std::uint32_t header_len = r.be(4);
  if (header_len < 6) r.fail("MThd chunk too short");
  const std::size_t header_start = r.pos();
  const std::uint32_t format = r.be(2);
  const std::uint32_t ntracks = r.be(2);
  const std::uint32_t division = r.be(2);
  r.seek(header_start + header_len);
  if (format > 2) r.fail("unsupported SMF format " + std::to_string(format));
  if (division == 0) r.fail("time division is zero");

  std::vector<RawNote> raw;
  std::vector<TempoEvent> tempos;
  for (std::uint32_t t = 0; t < ntracks; ++t) {
    // Skip unknown chunks between tracks.
    while (!r.done() && !r.tag("MTrk")) {
      r.skip(4);
      r.skip(r.be(4));
    }
    if (r.done()) r.fail("expected " + std::to_string(ntracks) + " tracks, found " + std::to_string(t));
    r.skip(4);
    const std::uint32_t len = r.be(4);
    const std::size_t end = r.pos() + len;
    if (end > bytes.size()) r.fail("track chunk runs past end of file");

    std::uint64_t tick = 0;
    std::uint8_t status = 0;
    std::map<std::pair<int, int>, std::deque<std::pair<std::uint64_t, int>>> open;
    while (r.pos() < end) {
      tick += r.vlq();
      std::uint8_t b = r.peek();
      if (b & 0x80) {
        r.u8();
        status = b;
      } else if (status == 0) {
        r.fail("data byte without running status");
      }
      if (status == 0xFF) {
        const std::uint8_t type = r.u8();
        const std::uint32_t mlen = r.vlq();
        if (type == 0x51) {
          if (mlen != 3) r.fail("tempo meta event must have length 3");
          tempos.push_back({tick, r.be(3)});
        } else if (type == 0x2F) {
          r.skip(mlen);
          break;
        } else {
          r.skip(mlen);
        }
        status = 0;
      } else if (status == 0xF0 || status == 0xF7) {
        r.skip(r.vlq());
        status = 0;
      } else {
        const int kind = status & 0xF0;
        const int channel = status & 0x0F;
        if (kind == 0x80 || kind == 0x90) {
          const int key = r.u8();
          const int vel = r.u8();
          if (key > 127 || vel > 127) r.fail("note data byte out of range");
          auto& q = open[{channel, key}];
          if (kind == 0x90 && vel > 0) {
            q.emplace_back(tick, vel);
          } else if (!q.empty()) {
            raw.push_back({channel, key, q.front().second, q.front().first, tick});
            q.pop_front();
          }
        } else if (kind == 0xA0 || kind == 0xB0 || kind == 0xE0) {
          r.skip(2);
        } else if (kind == 0xC0 || kind == 0xD0) {
          r.skip(1);
        } else {
          r.fail("unsupported status byte");
        }
      }
    }
    // Notes still sounding at end of track stop there.
    for (auto& [ck, q] : open) {
      for (auto& [on, vel] : q) raw.push_back({ck.first, ck.second, vel, on, tick});
    }
    r.seek(end);
  }

  std::sort(tempos.begin(), tempos.end(), [](const auto& a, const auto& b) { return a.tick < b.tick; });
  auto to_seconds = [&](std::uint64_t tick) {
    if (division & 0x8000) {
      const int fps = -static_cast<std::int8_t>((division >> 8) & 0xFF);
      const int per_frame = static_cast<int>(division & 0xFF);
      return static_cast<double>(tick) / (fps * per_frame);
    }
    const double tpq = static_cast<double>(division);
    double seconds = 0.0;
    std::uint64_t last_tick = 0;
    double usec = 500000.0;
    for (const auto& te : tempos) {
      if (te.tick >= tick) break;
      seconds += static_cast<double>(te.tick - last_tick) * usec / (tpq * 1e6);
      last_tick = te.tick;
      usec = te.usec_per_quarter;
    }
    return seconds + static_cast<double>(tick - last_tick) * usec / (tpq * 1e6);
  };

  MidiSong song;
  song.notes.reserve(raw.size());
  for (const auto& n : raw) {
    song.notes.push_back({n.channel, n.key, n.velocity, to_seconds(n.on_tick), to_seconds(n.off_tick)});
  }
  std::sort(song.notes.begin(), song.notes.end(), [](const MidiNote& a, const MidiNote& b) {
    return std::tie(a.start, a.key, a.channel, a.end) < std::tie(b.start, b.key, b.channel, b.end);
  });
  return song;
}

MidiSong read_midi(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open MIDI file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_midi(bytes, path.string());
}

std::vector<std::uint8_t> write_midi(const std::vector<MidiNote>& notes, int tpq, int usec_per_quarter) {
  struct Ev {
    std::uint64_t tick;
    int order;  // note-offs before note-ons at the same tick
    std::uint8_t status, d1, d2;
  };
  const double ticks_per_second = tpq * 1e6 / usec_per_quarter;
  std::vector<Ev> evs;
  for (const auto& n : notes) {
    const auto on = static_cast<std::uint64_t>(std::llround(n.start * ticks_per_second));
    const auto off = static_cast<std::uint64_t>(std::llround(n.end * ticks_per_second));
    evs.push_back({on, 1, static_cast<std::uint8_t>(0x90 | (n.channel & 0xF)), static_cast<std::uint8_t>(n.key),
                   static_cast<std::uint8_t>(n.velocity)});
    evs.push_back({off, 0, static_cast<std::uint8_t>(0x80 | (n.channel & 0xF)), static_cast<std::uint8_t>(n.key), 0});
  }
  std::stable_sort(evs.begin(), evs.end(),
                   [](const Ev& a, const Ev& b) { return std::tie(a.tick, a.order) < std::tie(b.tick, b.order); });

  std::vector<std::uint8_t> track;
  auto vlq = [&](std::uint64_t v) {
    std::uint8_t buf[5];
    int n = 0;
    buf[n++] = static_cast<std::uint8_t>(v & 0x7f);
    while (v >>= 7) buf[n++] = static_cast<std::uint8_t>(0x80 | (v & 0x7f));
    while (n) track.push_back(buf[--n]);
  };
  vlq(0);
  track.insert(track.end(), {0xFF, 0x51, 0x03, static_cast<std::uint8_t>(usec_per_quarter >> 16),
                             static_cast<std::uint8_t>(usec_per_quarter >> 8),
                             static_cast<std::uint8_t>(usec_per_quarter)});
  std::uint64_t last = 0;
  for (const auto& e : evs) {
    vlq(e.tick - last);
    last = e.tick;
    track.insert(track.end(), {e.status, e.d1, e.d2});
  }
  vlq(0);
  track.insert(track.end(), {0xFF, 0x2F, 0x00});

  std::vector<std::uint8_t> out = {'M', 'T', 'h', 'd', 0, 0, 0, 6, 0, 0, 0, 1,
                                   static_cast<std::uint8_t>(tpq >> 8), static_cast<std::uint8_t>(tpq)};
  out.insert(out.end(), {'M', 'T', 'r', 'k'});
  const auto len = static_cast<std::uint32_t>(track.size());
  out.insert(out.end(), {static_cast<std::uint8_t>(len >> 24), static_cast<std::uint8_t>(len >> 16),
                         static_cast<std::uint8_t>(len >> 8), static_cast<std::uint8_t>(len)});
  out.insert(out.end(), track.begin(), track.end());
  return out;
}

}  // namespace p2m::dataset
