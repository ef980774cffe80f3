#include "latres/bitstream.hpp"

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>

#include "binio.hpp"

namespace latres {

namespace {

void put_hex(std::string& out, CodeIndex v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  out.push_back(kDigits[v >> 4]);
  out.push_back(kDigits[v & 0xf]);
}

int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

// Parses 2*n hex digits starting at `text[pos]`.
void parse_hex_bytes(std::string_view text, std::size_t pos, std::span<CodeIndex> out) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (pos + 2 * i + 1 >= text.size()) throw ParseError("packet dump: truncated hex", pos);
    const int hi = hex_digit(text[pos + 2 * i]);
    const int lo = hex_digit(text[pos + 2 * i + 1]);
    if (hi < 0 || lo < 0) throw ParseError("packet dump: bad hex digit", pos + 2 * i);
    out[i] = static_cast<CodeIndex>(hi * 16 + lo);
  }
}

std::string_view field(std::string_view line, std::string_view key, std::size_t& pos) {
  const std::size_t at = line.find(key);
  if (at == std::string_view::npos) {
    throw ParseError("packet dump: missing field '" + std::string(key) + "'", 0);
  }
  pos = at + key.size();
  const std::size_t end = line.find(' ', pos);
  return line.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
}

template <typename T>
T parse_number(std::string_view s, std::size_t pos) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError("packet dump: bad number '" + std::string(s) + "'", pos);
  }
  return v;
}

}  // namespace

void validate_packet(const Packet& p) {
  if (p.seq > kMaxPacketSeq) throw std::invalid_argument("packet seq exceeds 16 bits");
  if (p.fec_offset_k % 2 != 0) throw std::invalid_argument("FEC offset k must be even");
  if (p.redundancy_present != (p.fec_offset_k != 0)) {
    throw std::invalid_argument("redundancy must be present exactly when k != 0");
  }
  if (p.redundancy_present && p.fec_offset_k > p.first_frame()) {
    throw std::invalid_argument("redundant frames predate the stream");
  }
  if (!p.redundancy_present && (p.redundant[0] != 0 || p.redundant[1] != 0)) {
    throw std::invalid_argument("redundant slots must be zero when redundancy is absent");
  }
}

std::vector<std::uint8_t> pack_packet(const Packet& p) {
  validate_packet(p);
  std::vector<std::uint8_t> out;
  out.reserve(kPacketBytesFec);
  out.push_back(kPacketMagic);
  out.push_back(static_cast<std::uint8_t>(p.seq >> 8));
  out.push_back(static_cast<std::uint8_t>(p.seq));
  out.push_back(p.fec_offset_k);
  for (const auto& frame : p.primary) out.insert(out.end(), frame.begin(), frame.end());
  if (p.redundancy_present) out.insert(out.end(), p.redundant.begin(), p.redundant.end());
  return out;
}

Packet unpack_packet(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw ParseError("packet: empty payload", 0);
  if (bytes[0] != kPacketMagic) throw ParseError("packet: bad magic byte at offset 0", 0);
  if (bytes.size() < kPacketBytesNoFec) {
    throw ParseError("packet: truncated payload of " + std::to_string(bytes.size()) + " bytes",
                     bytes.size());
  }
  if (bytes.size() != kPacketBytesNoFec && bytes.size() != kPacketBytesFec) {
    throw ParseError("packet: truncated payload of " + std::to_string(bytes.size()) + " bytes",
                     bytes.size());
  }
  Packet p;
  p.seq = (static_cast<std::uint32_t>(bytes[1]) << 8) | static_cast<std::uint32_t>(bytes[2]);
  p.fec_offset_k = bytes[3];
  p.redundancy_present = p.fec_offset_k != 0;
  if (p.redundancy_present != (bytes.size() == kPacketBytesFec)) {
    throw ParseError("packet: k=" + std::to_string(p.fec_offset_k) +
                         " inconsistent with payload length " + std::to_string(bytes.size()),
                     3);
  }
  if (p.fec_offset_k % 2 != 0) throw ParseError("packet: odd FEC offset", 3);
  if (p.redundancy_present && p.fec_offset_k > p.first_frame()) {
    throw ParseError("packet: redundancy predates the stream", 3);
  }
  std::size_t pos = kHeaderBytes;
  for (auto& frame : p.primary) {
    for (auto& idx : frame) idx = bytes[pos++];
  }
  if (p.redundancy_present) {
    p.redundant[0] = bytes[pos];
    p.redundant[1] = bytes[pos + 1];
  }
  return p;
}

std::vector<Packet> attach_redundancy(std::span<const FrameIndices> frames, unsigned k) {
  if (k % 2 != 0) throw std::invalid_argument("FEC offset k must be even");
  if (k > 254) throw std::invalid_argument("FEC offset k must fit in a byte");
  if (frames.size() % kFramesPerPacket != 0) {
    throw std::invalid_argument("frame count must be a multiple of 2");
  }
  if (frames.size() / kFramesPerPacket > std::size_t{kMaxPacketSeq} + 1) {
    throw std::invalid_argument("stream too long for 16-bit packet sequence numbers");
  }
  std::vector<Packet> packets(frames.size() / kFramesPerPacket);
  for (std::size_t m = 0; m < packets.size(); ++m) {
    Packet& p = packets[m];
    p.seq = static_cast<std::uint32_t>(m);
    p.primary[0] = frames[2 * m].stage_indices;
    p.primary[1] = frames[2 * m + 1].stage_indices;
    if (k != 0 && 2 * m >= k) {
      p.fec_offset_k = static_cast<std::uint8_t>(k);
      p.redundancy_present = true;
      p.redundant[0] = frames[2 * m - k].distilled_index;
      p.redundant[1] = frames[2 * m - k + 1].distilled_index;
    }
  }
  return packets;
}

std::string dump_packet(const Packet& p) {
  std::string out = "seq=" + std::to_string(p.seq) + " k=" + std::to_string(p.fec_offset_k) +
                    " primary=";
  for (std::size_t f = 0; f < kFramesPerPacket; ++f) {
    if (f) out.push_back(':');
    for (CodeIndex idx : p.primary[f]) put_hex(out, idx);
  }
  out += " redundant=";
  if (p.redundancy_present) {
    put_hex(out, p.redundant[0]);
    put_hex(out, p.redundant[1]);
    out += " frames=" + std::to_string(p.redundant_first_frame()) + "," +
           std::to_string(p.redundant_first_frame() + 1);
  } else {
    out += "none (no redundancy)";
  }
  return out;
}

Packet parse_packet_dump(std::string_view line) {
  Packet p;
  std::size_t pos = 0;
  auto seq = field(line, "seq=", pos);
  p.seq = parse_number<std::uint32_t>(seq, pos);
  auto k = field(line, "k=", pos);
  p.fec_offset_k = parse_number<std::uint8_t>(k, pos);
  auto primary = field(line, "primary=", pos);
  if (primary.size() != 17 || primary[8] != ':') {
    throw ParseError("packet dump: malformed primary field", pos);
  }
  parse_hex_bytes(line, pos, p.primary[0]);
  parse_hex_bytes(line, pos + 9, p.primary[1]);
  auto redundant = field(line, "redundant=", pos);
  if (redundant == "none") {
    p.redundancy_present = false;
  } else {
    p.redundancy_present = true;
    if (redundant.size() != 4) throw ParseError("packet dump: malformed redundant field", pos);
    parse_hex_bytes(line, pos, p.redundant);
  }
  try {
    validate_packet(p);
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("packet dump: ") + e.what(), 0);
  }
  return p;
}

void write_packet_stream(std::ostream& out, std::span<const Packet> packets) {
  binio::write_magic(out, "LPKS");
  for (const Packet& p : packets) {
    const auto bytes = pack_packet(p);
    const char len[2] = {static_cast<char>(bytes.size() & 0xff),
                         static_cast<char>(bytes.size() >> 8)};
    out.write(len, 2);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
  }
  if (!out) throw std::runtime_error("packet stream write failed");
}

std::vector<Packet> read_packet_stream(std::istream& in) {
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() != 4 || std::string_view(magic, 4) != "LPKS") {
    throw ParseError("packet stream: bad file magic at offset 0", 0);
  }
  std::vector<Packet> packets;
  std::size_t offset = 4;
  while (true) {
    unsigned char len[2];
    in.read(reinterpret_cast<char*>(len), 2);
    if (in.gcount() == 0) break;
    if (in.gcount() != 2) throw ParseError("packet stream: truncated length field", offset);
    const std::size_t n = len[0] | (len[1] << 8);
    std::vector<std::uint8_t> bytes(n);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) {
      throw ParseError("packet stream: truncated packet", offset + 2 + static_cast<std::size_t>(in.gcount()));
    }
    try {
      packets.push_back(unpack_packet(bytes));
    } catch (const ParseError& e) {
      throw ParseError(std::string(e.what()) + " (file offset " +
                           std::to_string(offset + 2 + e.where()) + ")",
                       offset + 2 + e.where());
    }
    offset += 2 + n;
  }
  return packets;
}

MeasuredBitrate measure_bitrate(std::span<const Packet> packets) {
  MeasuredBitrate r;
  if (packets.empty()) return r;
  double primary_bits = 0.0, redundant_bits = 0.0;
  for (const Packet& p : packets) {
    const std::size_t bytes = pack_packet(p).size();
    primary_bits += 8.0 * kPrimaryBytes;
    redundant_bits += 8.0 * static_cast<double>(bytes - kHeaderBytes - kPrimaryBytes);
  }
  const double seconds = static_cast<double>(packets.size()) * kPacketMs / 1000.0;
  r.primary_bps = primary_bits / seconds;
  r.redundant_bps = redundant_bits / seconds;
  return r;
}

}  // namespace latres
