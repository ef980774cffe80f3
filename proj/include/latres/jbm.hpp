#pragma once

// Fixed-delay jitter buffer. Frame n plays at 10*n + playout_delay_ms; a
// packet helps frame n only if it arrived by then. Times are kept on a
// 0.1 ms grid and an arrival exactly at the playout instant is timely.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "latres/bitstream.hpp"

namespace latres {

enum class OutcomeKind : std::uint8_t { kReceived, kFecRecovered, kConcealed, kZeroFilled };

std::string_view to_string(OutcomeKind k);

struct FrameOutcome {
  std::uint64_t frame_n = 0;
  OutcomeKind kind = OutcomeKind::kConcealed;
  std::optional<std::uint32_t> source_seq;
  StageIndices primary{};       // valid when kind == kReceived
  CodeIndex distilled_index = 0;  // valid when kind == kFecRecovered
};

struct BufferStats {
  std::size_t received = 0;
  std::size_t fec_recovered = 0;
  std::size_t concealed = 0;
  std::size_t late_drops = 0;

  std::size_t frames() const { return received + fec_recovered + concealed; }
  bool operator==(const BufferStats&) const = default;
};

class JitterBuffer {
 public:
  explicit JitterBuffer(double playout_delay_ms = 100.0);

  double playout_delay_ms() const { return static_cast<double>(delay_ticks_) / 10.0; }
  double playout_time_ms(std::uint64_t frame_n) const;
  // Same 0.1 ms comparison that push() and pull() apply.
  bool arrived_by(double arrival_ms, std::uint64_t frame_n) const;

  // Stores the packet unless every frame it carries has already played or
  // its arrival is past the playout time of its last frame; such packets are
  // counted as late drops. A duplicate seq keeps the earliest arrival.
  void push(const Packet& packet, double arrival_ms);

  // Frames must be pulled in order starting from 0.
  FrameOutcome pull(std::uint64_t frame_n);

  const BufferStats& stats() const { return stats_; }
  std::size_t buffered() const { return buffer_.size(); }
  std::uint64_t next_frame() const { return next_frame_; }

 private:
  struct Entry {
    Packet packet;
    std::int64_t arrival_ticks;
  };

  std::int64_t playout_ticks(std::uint64_t frame_n) const;

  std::int64_t delay_ticks_;
  std::map<std::uint32_t, Entry> buffer_;
  std::uint64_t next_frame_ = 0;
  BufferStats stats_;
};

// Playout delay needed for redundancy sent k frames late to be useful given
// an expected one-way network delay.
bool fec_engages(unsigned k, double playout_delay_ms, double network_delay_ms);

// "frame_n,kind,source_seq" with an empty source_seq when there is none.
void write_outcome_csv(std::ostream& out, std::span<const FrameOutcome> outcomes);

}  // namespace latres
