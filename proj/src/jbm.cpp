#include "latres/jbm.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

namespace latres {

namespace {

std::int64_t to_ticks(double ms) { return std::llround(ms * 10.0); }

}  // namespace

std::string_view to_string(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::kReceived:
      return "received";
    case OutcomeKind::kFecRecovered:
      return "fec_recovered";
    case OutcomeKind::kConcealed:
      return "concealed";
    case OutcomeKind::kZeroFilled:
      return "zero_filled";
  }
  return "concealed";
}

JitterBuffer::JitterBuffer(double playout_delay_ms) : delay_ticks_(to_ticks(playout_delay_ms)) {
  if (!(playout_delay_ms >= 0.0)) throw std::invalid_argument("playout delay must be >= 0");
}

std::int64_t JitterBuffer::playout_ticks(std::uint64_t frame_n) const {
  return static_cast<std::int64_t>(frame_n) * to_ticks(kFrameMs) + delay_ticks_;
}

double JitterBuffer::playout_time_ms(std::uint64_t frame_n) const {
  return static_cast<double>(playout_ticks(frame_n)) / 10.0;
}

bool JitterBuffer::arrived_by(double arrival_ms, std::uint64_t frame_n) const {
  return to_ticks(arrival_ms) <= playout_ticks(frame_n);
}

void JitterBuffer::push(const Packet& packet, double arrival_ms) {
  const std::uint64_t last_frame = packet.first_frame() + kFramesPerPacket - 1;
  const std::int64_t arrival = to_ticks(arrival_ms);
  if (last_frame < next_frame_ || arrival > playout_ticks(last_frame)) {
    ++stats_.late_drops;
    return;
  }
  auto [it, inserted] = buffer_.try_emplace(packet.seq, Entry{packet, arrival});
  if (!inserted && arrival < it->second.arrival_ticks) it->second = Entry{packet, arrival};
}

FrameOutcome JitterBuffer::pull(std::uint64_t frame_n) {
  if (frame_n != next_frame_) {
    throw std::logic_error("frames must be pulled in order: expected " +
                           std::to_string(next_frame_) + ", got " + std::to_string(frame_n));
  }
  const std::int64_t deadline = playout_ticks(frame_n);
  FrameOutcome out;
  out.frame_n = frame_n;

  const auto primary_seq = static_cast<std::uint32_t>(frame_n / kFramesPerPacket);
  if (auto it = buffer_.find(primary_seq);
      it != buffer_.end() && it->second.arrival_ticks <= deadline) {
    out.kind = OutcomeKind::kReceived;
    out.source_seq = primary_seq;
    out.primary = it->second.packet.primary[frame_n % kFramesPerPacket];
  } else {
    out.kind = OutcomeKind::kConcealed;
    // Any timely buffered packet whose redundancy covers this frame. The
    // offset comes from each packet's own header.
    for (const auto& [seq, entry] : buffer_) {
      const Packet& p = entry.packet;
      if (!p.redundancy_present || entry.arrival_ticks > deadline) continue;
      const std::uint64_t first = p.redundant_first_frame();
      if (frame_n == first || frame_n == first + 1) {
        out.kind = OutcomeKind::kFecRecovered;
        out.source_seq = seq;
        out.distilled_index = p.redundant[frame_n - first];
        break;
      }
    }
  }
  switch (out.kind) {
    case OutcomeKind::kReceived:
      ++stats_.received;
      break;
    case OutcomeKind::kFecRecovered:
      ++stats_.fec_recovered;
      break;
    default:
      ++stats_.concealed;
      break;
  }

  ++next_frame_;
  // Drop packets whose own frames have all played; their redundancy only
  // ever refers to earlier frames.
  while (!buffer_.empty() &&
         buffer_.begin()->second.packet.first_frame() + kFramesPerPacket <= next_frame_) {
    buffer_.erase(buffer_.begin());
  }
  return out;
}

bool fec_engages(unsigned k, double playout_delay_ms, double network_delay_ms) {
  return playout_delay_ms >= kFrameMs * k + network_delay_ms;
}

void write_outcome_csv(std::ostream& out, std::span<const FrameOutcome> outcomes) {
  out << "frame_n,kind,source_seq\n";
  for (const auto& o : outcomes) {
    out << o.frame_n << ',' << to_string(o.kind) << ',';
    if (o.source_seq) out << *o.source_seq;
    out << '\n';
  }
}

}  // namespace latres
