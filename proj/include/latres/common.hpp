#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace latres {

using CodeIndex = std::uint8_t;
using Vec = std::vector<double>;

inline constexpr std::size_t kCodebookSize = 256;
inline constexpr std::size_t kMaxStages = 4;
inline constexpr int kSampleRateHz = 16000;
inline constexpr std::size_t kFrameSamples = 160;  // 10 ms @ 16 kHz.
inline constexpr double kFrameMs = 10.0;
inline constexpr std::size_t kFramesPerPacket = 2;
inline constexpr double kPacketMs = kFrameMs * kFramesPerPacket;

enum class VoicingClass : std::uint8_t { kSilence = 0, kVoiced = 1, kUnvoiced = 2 };

std::string_view to_string(VoicingClass c);
VoicingClass parse_voicing_class(std::string_view s);

// Raised for malformed external input (files, traces, packets). `where` is a
// byte offset or a 1-based line number depending on the source.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t where)
      : std::runtime_error(what), where_(where) {}
  std::size_t where() const { return where_; }

 private:
  std::size_t where_;
};

// Row-major set of equally sized real vectors (latents, code-vectors).
class VectorSet {
 public:
  VectorSet() = default;
  explicit VectorSet(std::size_t dim) : dim_(dim) {}
  VectorSet(std::size_t dim, Vec values);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : values_.size() / dim_; }
  bool empty() const { return values_.empty(); }

  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  std::span<double> row(std::size_t i) { return {values_.data() + i * dim_, dim_}; }

  void push_back(std::span<const double> v);
  void reserve(std::size_t rows) { values_.reserve(rows * dim_); }

  std::span<const double> values() const { return values_; }

 private:
  std::size_t dim_ = 0;
  Vec values_;
};

double squared_distance(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);

}  // namespace latres
