#pragma once

// Deterministic linear frame codec used in place of a neural encoder/decoder:
// a truncated orthonormal cosine (DCT-II) projection of each 10 ms frame,
// with a per-coefficient scale.

#include <iosfwd>
#include <span>

#include "latres/common.hpp"

namespace latres {

class AnalysisTransform {
 public:
  // Unit scales.
  explicit AnalysisTransform(std::size_t dim);
  AnalysisTransform(std::size_t dim, Vec scale);

  std::size_t dim() const { return dim_; }
  std::span<const double> basis_row(std::size_t j) const {
    return {basis_.data() + j * kFrameSamples, kFrameSamples};
  }
  std::span<const double> scale() const { return scale_; }

  Vec encode(std::span<const double> frame) const;
  Vec decode(std::span<const double> latent) const;

 private:
  std::size_t dim_;
  Vec basis_;  // dim x kFrameSamples
  Vec scale_;
};

// Chooses scales so that every latent coefficient has unit variance over
// the given frames (coefficients with zero variance keep scale 1).
AnalysisTransform fit_transform(std::size_t dim, std::span<const double> signal);

Vec encode_frame(std::span<const double> frame, const AnalysisTransform& t);
Vec decode_frame(std::span<const double> latent, const AnalysisTransform& t);

// Number of 10 ms frames covering `sample_count` samples (last one zero padded).
std::size_t frame_count(std::size_t sample_count);
// Frame n of `signal`, zero padded past the end.
Vec frame_at(std::span<const double> signal, std::size_t n);

VectorSet encode_signal(std::span<const double> signal, const AnalysisTransform& t);
Vec decode_latents(const VectorSet& latents, const AnalysisTransform& t);

// "LTRF", u32 dim, u32 frame samples (160), dim x f64 scales. Little-endian.
void write_transform(std::ostream& out, const AnalysisTransform& t);
AnalysisTransform read_transform(std::istream& in);

}  // namespace latres
