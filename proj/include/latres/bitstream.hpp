#pragma once

// Packet payload: two consecutive frames of primary residual-VQ indices plus,
// optionally, the distilled indices of the two frames k frames earlier.
//
// Wire layout (multi-byte fields big-endian):
//   byte 0      magic 0xC5
//   bytes 1-2   seq (u16)
//   byte 3      k, the FEC offset in frames; 0 means no redundancy
//   bytes 4-11  primary: frame 2*seq stages 1-4, frame 2*seq+1 stages 1-4
//   bytes 12-13 redundant distilled indices of frames 2*seq-k, 2*seq-k+1
//               (present iff k != 0)
//
// A stream therefore holds at most 65536 packets (about 21 minutes).

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "latres/common.hpp"

namespace latres {

inline constexpr std::uint8_t kPacketMagic = 0xC5;
inline constexpr std::size_t kHeaderBytes = 4;
inline constexpr std::uint32_t kMaxPacketSeq = 0xffff;
inline constexpr std::size_t kPrimaryBytes = kFramesPerPacket * kMaxStages;
inline constexpr std::size_t kRedundantBytes = kFramesPerPacket;
inline constexpr std::size_t kPacketBytesNoFec = kHeaderBytes + kPrimaryBytes;       // 12
inline constexpr std::size_t kPacketBytesFec = kPacketBytesNoFec + kRedundantBytes;  // 14
inline constexpr unsigned kDefaultFecOffset = 6;

using StageIndices = std::array<CodeIndex, kMaxStages>;

struct FrameIndices {
  StageIndices stage_indices{};
  CodeIndex distilled_index = 0;
};

struct Packet {
  std::uint32_t seq = 0;
  std::uint8_t fec_offset_k = 0;
  std::array<StageIndices, kFramesPerPacket> primary{};
  std::array<CodeIndex, kFramesPerPacket> redundant{};
  bool redundancy_present = false;

  std::uint64_t first_frame() const { return 2ull * seq; }
  // First of the two frames whose distilled indices ride in this packet.
  std::uint64_t redundant_first_frame() const { return first_frame() - fec_offset_k; }

  bool operator==(const Packet&) const = default;
};

// Throws std::invalid_argument unless: seq fits in 16 bits, k is even, redundancy_present iff
// k != 0, redundant frames do not predate the stream, and redundant slots
// are zero when absent.
void validate_packet(const Packet& p);

std::vector<std::uint8_t> pack_packet(const Packet& p);
// Throws ParseError (with byte offset) on bad magic, truncation, or a
// length inconsistent with k.
Packet unpack_packet(std::span<const std::uint8_t> bytes);

// Packet m carries frames 2m, 2m+1 and the distilled indices of frames
// 2m-k, 2m-k+1 when those exist. k must be even; the frame count must be even.
std::vector<Packet> attach_redundancy(std::span<const FrameIndices> frames, unsigned k);

// One-line text form, e.g.
//   seq=3 k=6 primary=0a0b0c0d:01020304 redundant=7f80 frames=0,1
//   seq=0 k=0 primary=00000000:00000000 redundant=none (no redundancy)
std::string dump_packet(const Packet& p);
Packet parse_packet_dump(std::string_view line);

// Packet stream file: "LPKS", then per packet a little-endian u16 length
// followed by the payload bytes.
void write_packet_stream(std::ostream& out, std::span<const Packet> packets);
std::vector<Packet> read_packet_stream(std::istream& in);

// Nominal payload rates, header excluded.
struct Bitrate {
  std::uint32_t primary_bps = 0;
  std::uint32_t redundant_bps = 0;
  std::uint32_t total_bps = 0;
};

constexpr Bitrate payload_bitrate(std::size_t stages, bool fec) {
  constexpr std::uint32_t frames_per_second = 100;
  Bitrate r;
  r.primary_bps = static_cast<std::uint32_t>(8 * stages) * frames_per_second;
  r.redundant_bps = fec ? 8 * frames_per_second : 0;
  r.total_bps = r.primary_bps + r.redundant_bps;
  return r;
}

// Measured from packed payload sizes over the stream duration.
struct MeasuredBitrate {
  double primary_bps = 0.0;
  double redundant_bps = 0.0;
};
MeasuredBitrate measure_bitrate(std::span<const Packet> packets);

}  // namespace latres
