#include "latres/common.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "latres/rng.hpp"

namespace latres {

std::string_view to_string(VoicingClass c) {
  switch (c) {
    case VoicingClass::kSilence:
      return "silence";
    case VoicingClass::kVoiced:
      return "voiced";
    case VoicingClass::kUnvoiced:
      return "unvoiced";
  }
  return "silence";
}

VoicingClass parse_voicing_class(std::string_view s) {
  if (s == "silence") return VoicingClass::kSilence;
  if (s == "voiced") return VoicingClass::kVoiced;
  if (s == "unvoiced") return VoicingClass::kUnvoiced;
  throw std::invalid_argument("unknown voicing class '" + std::string(s) + "'");
}

VectorSet::VectorSet(std::size_t dim, Vec values) : dim_(dim), values_(std::move(values)) {
  if (dim_ == 0 || values_.size() % dim_ != 0) {
    throw std::invalid_argument("VectorSet: value count is not a multiple of dim");
  }
}

void VectorSet::push_back(std::span<const double> v) {
  if (v.size() != dim_) throw std::invalid_argument("VectorSet: dimension mismatch");
  values_.insert(values_.end(), v.begin(), v.end());
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

double squared_norm(std::span<const double> a) {
  double acc = 0.0;
  for (double x : a) acc += x * x;
  return acc;
}

std::uint64_t Rng::below(std::uint64_t n) {
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

}  // namespace latres
