#include "latres/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "binio.hpp"

namespace latres {

namespace {

void write_u16(std::ostream& out, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
  out.write(b, 2);
}

std::uint16_t read_u16(std::istream& in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  if (!in) throw std::runtime_error("unexpected end of WAV file");
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::string read_tag(std::istream& in) {
  std::string tag(4, '\0');
  in.read(tag.data(), 4);
  if (!in) throw std::runtime_error("unexpected end of WAV file");
  return tag;
}

}  // namespace

void write_wav(const std::filesystem::path& path, std::span<const double> samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  binio::write_magic(out, "RIFF");
  binio::write_u32(out, 36 + data_bytes);
  binio::write_magic(out, "WAVE");
  binio::write_magic(out, "fmt ");
  binio::write_u32(out, 16);
  write_u16(out, 1);  // PCM
  write_u16(out, 1);  // mono
  binio::write_u32(out, kSampleRateHz);
  binio::write_u32(out, kSampleRateHz * 2);
  write_u16(out, 2);
  write_u16(out, 16);
  binio::write_magic(out, "data");
  binio::write_u32(out, data_bytes);
  for (double x : samples) {
    const double clipped = std::clamp(x, -1.0, 1.0);
    const auto q = static_cast<std::int16_t>(std::lround(std::clamp(clipped * 32768.0, -32768.0, 32767.0)));
    write_u16(out, static_cast<std::uint16_t>(q));
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Vec read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  if (read_tag(in) != "RIFF") throw std::runtime_error(path.string() + ": not a RIFF file");
  binio::read_u32(in);
  if (read_tag(in) != "WAVE") throw std::runtime_error(path.string() + ": not a WAVE file");
  bool have_fmt = false;
  while (true) {
    const std::string tag = read_tag(in);
    const std::uint32_t size = binio::read_u32(in);
    if (tag == "fmt ") {
      const std::uint16_t format = read_u16(in);
      const std::uint16_t channels = read_u16(in);
      const std::uint32_t rate = binio::read_u32(in);
      binio::read_u32(in);
      read_u16(in);
      const std::uint16_t bits = read_u16(in);
      if (format != 1 || channels != 1 || rate != kSampleRateHz || bits != 16) {
        throw std::runtime_error(path.string() + ": expected mono 16 kHz 16-bit PCM");
      }
      in.ignore(size - 16);
      have_fmt = true;
    } else if (tag == "data") {
      if (!have_fmt) throw std::runtime_error(path.string() + ": data chunk before fmt");
      Vec samples(size / 2);
      for (double& x : samples) {
        x = static_cast<double>(static_cast<std::int16_t>(read_u16(in))) / 32768.0;
      }
      return samples;
    } else {
      in.ignore(size + (size & 1));
    }
  }
}

}  // namespace latres
