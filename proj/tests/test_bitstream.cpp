#include "latres/bitstream.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "latres/rng.hpp"

namespace latres {
namespace {

Packet random_packet(Rng& rng) {
  Packet p;
  p.seq = static_cast<std::uint32_t>(rng.below(kMaxPacketSeq + 1));
  for (auto& f : p.primary) {
    for (auto& i : f) i = static_cast<CodeIndex>(rng.below(256));
  }
  if (rng.bernoulli(0.5)) {
    p.fec_offset_k = static_cast<std::uint8_t>(2 + 2 * rng.below(127));
    p.seq = std::max<std::uint32_t>(p.seq, p.fec_offset_k / 2);
    p.redundancy_present = true;
    p.redundant = {static_cast<CodeIndex>(rng.below(256)), static_cast<CodeIndex>(rng.below(256))};
  }
  return p;
}

std::vector<FrameIndices> numbered_frames(std::size_t n) {
  std::vector<FrameIndices> frames(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t s = 0; s < kMaxStages; ++s) {
      frames[i].stage_indices[s] = static_cast<CodeIndex>(i * 4 + s);
    }
    frames[i].distilled_index = static_cast<CodeIndex>(100 + i);
  }
  return frames;
}

TEST(PacketTest, LayoutIsBigEndianWithMagic) {
  Packet p;
  p.seq = 0x0304;
  p.fec_offset_k = 6;
  p.redundancy_present = true;
  p.primary = {StageIndices{0xa0, 0xa1, 0xa2, 0xa3}, StageIndices{0xb0, 0xb1, 0xb2, 0xb3}};
  p.redundant = {0x7f, 0x80};
  const std::vector<std::uint8_t> want = {0xC5, 0x03, 0x04, 0x06, 0xa0, 0xa1, 0xa2,
                                          0xa3, 0xb0, 0xb1, 0xb2, 0xb3, 0x7f, 0x80};
  EXPECT_EQ(pack_packet(p), want);
}

TEST(PacketTest, SizesAre12And14) {
  const std::vector<std::uint8_t> zeros = {0xC5, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
  EXPECT_EQ(pack_packet(Packet{}), zeros);
  Packet p;
  p.seq = 10;
  EXPECT_EQ(pack_packet(p).size(), 12u);
  p.fec_offset_k = 6;
  p.redundancy_present = true;
  EXPECT_EQ(pack_packet(p).size(), 14u);
}

TEST(PacketTest, FuzzRoundTrip) {
  Rng rng(1);
  for (int i = 0; i < 5000; ++i) {
    const Packet p = random_packet(rng);
    const auto bytes = pack_packet(p);
    EXPECT_EQ(bytes.size(), p.redundancy_present ? 14u : 12u);
    EXPECT_EQ(unpack_packet(bytes), p);
    EXPECT_EQ(pack_packet(unpack_packet(bytes)), bytes);
  }
}

TEST(PacketTest, ValidationRejectsInconsistentPackets) {
  Packet wide;
  wide.seq = kMaxPacketSeq + 1;
  EXPECT_THROW(pack_packet(wide), std::invalid_argument);
  Packet p;
  p.seq = 10;
  p.fec_offset_k = 3;
  p.redundancy_present = true;
  EXPECT_THROW(pack_packet(p), std::invalid_argument);
  p.fec_offset_k = 0;
  EXPECT_THROW(pack_packet(p), std::invalid_argument);
  p.redundancy_present = false;
  p.redundant[0] = 1;
  EXPECT_THROW(pack_packet(p), std::invalid_argument);
  Packet early;
  early.seq = 1;
  early.fec_offset_k = 6;
  early.redundancy_present = true;
  EXPECT_THROW(pack_packet(early), std::invalid_argument);
}

TEST(PacketTest, UnpackErrorsCarryOffsets) {
  Packet p;
  p.seq = 9;
  p.fec_offset_k = 6;
  p.redundancy_present = true;
  auto bytes = pack_packet(p);

  auto bad_magic = bytes;
  bad_magic[0] = 0x00;
  try {
    unpack_packet(bad_magic);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.where(), 0u);
  }

  auto truncated = bytes;
  truncated.resize(13);
  try {
    unpack_packet(truncated);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos);
  }

  auto k_mismatch = bytes;
  k_mismatch.resize(12);  // k=6 but no redundant bytes
  try {
    unpack_packet(k_mismatch);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.where(), 3u);
  }
}

TEST(AttachRedundancyTest, CoversFramesExactlyKLater) {
  const auto frames = numbered_frames(40);
  const auto packets = attach_redundancy(frames, 6);
  ASSERT_EQ(packets.size(), 20u);
  std::vector<int> carried(frames.size(), 0);
  for (const Packet& p : packets) {
    EXPECT_EQ(p.primary[0], frames[2 * p.seq].stage_indices);
    EXPECT_EQ(p.primary[1], frames[2 * p.seq + 1].stage_indices);
    if (p.first_frame() < 6) {
      EXPECT_FALSE(p.redundancy_present);
      EXPECT_EQ(p.fec_offset_k, 0);
      continue;
    }
    ASSERT_TRUE(p.redundancy_present);
    EXPECT_EQ(p.fec_offset_k, 6);
    const auto f = p.redundant_first_frame();
    EXPECT_EQ(f, p.first_frame() - 6);
    EXPECT_EQ(p.redundant[0], frames[f].distilled_index);
    EXPECT_EQ(p.redundant[1], frames[f + 1].distilled_index);
    ++carried[f];
    ++carried[f + 1];
  }
  for (std::size_t i = 0; i < frames.size(); ++i) EXPECT_LE(carried[i], 1);
}

TEST(AttachRedundancyTest, KZeroMeansNoRedundancy) {
  for (const Packet& p : attach_redundancy(numbered_frames(10), 0)) {
    EXPECT_FALSE(p.redundancy_present);
    EXPECT_EQ(pack_packet(p).size(), 12u);
  }
}

TEST(AttachRedundancyTest, RejectsOddKAndOddFrameCount) {
  EXPECT_THROW(attach_redundancy(numbered_frames(10), 5), std::invalid_argument);
  EXPECT_THROW(attach_redundancy(numbered_frames(9), 6), std::invalid_argument);
}

TEST(DumpTest, FormatAndRoundTrip) {
  const auto packets = attach_redundancy(numbered_frames(10), 6);
  EXPECT_EQ(dump_packet(packets[0]),
            "seq=0 k=0 primary=00010203:04050607 redundant=none (no redundancy)");
  EXPECT_EQ(dump_packet(packets[3]),
            "seq=3 k=6 primary=18191a1b:1c1d1e1f redundant=6465 frames=0,1");
  Rng rng(2);
  for (int i = 0; i < 500; ++i) {
    const Packet p = random_packet(rng);
    EXPECT_EQ(parse_packet_dump(dump_packet(p)), p);
  }
}

TEST(DumpTest, MalformedDumpThrows) {
  EXPECT_THROW(parse_packet_dump("seq=1 k=0"), ParseError);
  EXPECT_THROW(parse_packet_dump("seq=1 k=0 primary=zz010203:04050607 redundant=none"), ParseError);
}

TEST(PacketStreamTest, RoundTripAndCorruptionOffset) {
  const auto packets = attach_redundancy(numbered_frames(20), 6);
  std::stringstream ss;
  write_packet_stream(ss, packets);
  const std::string bytes = ss.str();
  std::stringstream in(bytes);
  EXPECT_EQ(read_packet_stream(in), packets);

  // Corrupt the magic of the third packet: 4 (file magic) + 2 * (2 + 12) + 2.
  std::string bad = bytes;
  const std::size_t where = 4 + 2 * (2 + 12) + 2;
  bad[where] = 0x00;
  std::stringstream in_bad(bad);
  try {
    read_packet_stream(in_bad);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.where(), where);
  }

  std::stringstream cut(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(read_packet_stream(cut), ParseError);
  std::stringstream not_a_stream("JUNK");
  EXPECT_THROW(read_packet_stream(not_a_stream), ParseError);
}

TEST(BitrateTest, NominalRates) {
  static_assert(payload_bitrate(4, false).primary_bps == 3200);
  static_assert(payload_bitrate(1, false).primary_bps == 800);
  static_assert(payload_bitrate(4, true).redundant_bps == 800);
  static_assert(payload_bitrate(4, true).total_bps == 4000);
  const auto packets = attach_redundancy(numbered_frames(2000), 6);
  const MeasuredBitrate m = measure_bitrate(packets);
  EXPECT_DOUBLE_EQ(m.primary_bps, 3200.0);
  // Only the first 3 packets lack redundancy.
  EXPECT_NEAR(m.redundant_bps, 800.0 * 997.0 / 1000.0, 1e-9);
}

}  // namespace
}  // namespace latres
