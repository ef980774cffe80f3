#include "latres/toycodec.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "binio.hpp"

namespace latres {

namespace {

void check_frame(std::span<const double> frame) {
  if (frame.size() != kFrameSamples) {
    throw std::invalid_argument("frame must hold 160 samples, got " +
                                std::to_string(frame.size()));
  }
  for (double x : frame) {
    if (!std::isfinite(x)) throw std::invalid_argument("frame contains non-finite samples");
  }
}

}  // namespace

AnalysisTransform::AnalysisTransform(std::size_t dim) : AnalysisTransform(dim, Vec(dim, 1.0)) {}

AnalysisTransform::AnalysisTransform(std::size_t dim, Vec scale)
    : dim_(dim), basis_(dim * kFrameSamples), scale_(std::move(scale)) {
  if (dim == 0 || dim > kFrameSamples) {
    throw std::invalid_argument("latent dimension must be in 1..160");
  }
  if (scale_.size() != dim) throw std::invalid_argument("scale vector length must equal dim");
  for (double s : scale_) {
    if (!(std::isfinite(s) && s > 0.0)) throw std::invalid_argument("scales must be positive");
  }
  const double n = static_cast<double>(kFrameSamples);
  for (std::size_t k = 0; k < dim; ++k) {
    const double norm = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (std::size_t i = 0; i < kFrameSamples; ++i) {
      basis_[k * kFrameSamples + i] =
          norm * std::cos(std::numbers::pi * (static_cast<double>(i) + 0.5) *
                          static_cast<double>(k) / n);
    }
  }
}

Vec AnalysisTransform::encode(std::span<const double> frame) const {
  check_frame(frame);
  Vec latent(dim_);
  for (std::size_t k = 0; k < dim_; ++k) {
    const auto b = basis_row(k);
    double acc = 0.0;
    for (std::size_t i = 0; i < kFrameSamples; ++i) acc += b[i] * frame[i];
    latent[k] = scale_[k] * acc;
  }
  return latent;
}

Vec AnalysisTransform::decode(std::span<const double> latent) const {
  if (latent.size() != dim_) throw std::invalid_argument("latent dimension mismatch");
  Vec frame(kFrameSamples, 0.0);
  for (std::size_t k = 0; k < dim_; ++k) {
    if (!std::isfinite(latent[k])) throw std::invalid_argument("latent is not finite");
    const double c = latent[k] / scale_[k];
    const auto b = basis_row(k);
    for (std::size_t i = 0; i < kFrameSamples; ++i) frame[i] += c * b[i];
  }
  return frame;
}

AnalysisTransform fit_transform(std::size_t dim, std::span<const double> signal) {
  const AnalysisTransform unit(dim);
  const std::size_t frames = frame_count(signal.size());
  Vec mean(dim, 0.0), sq(dim, 0.0);
  for (std::size_t n = 0; n < frames; ++n) {
    const Vec z = unit.encode(frame_at(signal, n));
    for (std::size_t k = 0; k < dim; ++k) {
      mean[k] += z[k];
      sq[k] += z[k] * z[k];
    }
  }
  Vec scale(dim, 1.0);
  if (frames > 1) {
    const double count = static_cast<double>(frames);
    for (std::size_t k = 0; k < dim; ++k) {
      const double m = mean[k] / count;
      const double var = sq[k] / count - m * m;
      if (var > 1e-18) scale[k] = 1.0 / std::sqrt(var);
    }
  }
  return AnalysisTransform(dim, std::move(scale));
}

Vec encode_frame(std::span<const double> frame, const AnalysisTransform& t) {
  return t.encode(frame);
}

Vec decode_frame(std::span<const double> latent, const AnalysisTransform& t) {
  return t.decode(latent);
}

std::size_t frame_count(std::size_t sample_count) {
  return (sample_count + kFrameSamples - 1) / kFrameSamples;
}

Vec frame_at(std::span<const double> signal, std::size_t n) {
  Vec frame(kFrameSamples, 0.0);
  const std::size_t start = n * kFrameSamples;
  for (std::size_t i = 0; i < kFrameSamples && start + i < signal.size(); ++i) {
    frame[i] = signal[start + i];
  }
  return frame;
}

VectorSet encode_signal(std::span<const double> signal, const AnalysisTransform& t) {
  VectorSet latents(t.dim());
  const std::size_t frames = frame_count(signal.size());
  latents.reserve(frames);
  for (std::size_t n = 0; n < frames; ++n) latents.push_back(t.encode(frame_at(signal, n)));
  return latents;
}

Vec decode_latents(const VectorSet& latents, const AnalysisTransform& t) {
  Vec out;
  out.reserve(latents.size() * kFrameSamples);
  for (std::size_t n = 0; n < latents.size(); ++n) {
    const Vec frame = t.decode(latents.row(n));
    out.insert(out.end(), frame.begin(), frame.end());
  }
  return out;
}

void write_transform(std::ostream& out, const AnalysisTransform& t) {
  binio::write_magic(out, "LTRF");
  binio::write_u32(out, static_cast<std::uint32_t>(t.dim()));
  binio::write_u32(out, static_cast<std::uint32_t>(kFrameSamples));
  for (double s : t.scale()) binio::write_f64(out, s);
  if (!out) throw std::runtime_error("transform write failed");
}

AnalysisTransform read_transform(std::istream& in) {
  binio::expect_magic(in, "LTRF");
  const std::uint32_t dim = binio::read_u32(in);
  const std::uint32_t samples = binio::read_u32(in);
  if (samples != kFrameSamples || dim == 0 || dim > kFrameSamples) {
    throw std::runtime_error("transform file header out of range");
  }
  Vec scale(dim);
  for (double& s : scale) s = binio::read_f64(in);
  return AnalysisTransform(dim, std::move(scale));
}

}  // namespace latres
