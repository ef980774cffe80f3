#include "latres/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "latres/conceal.hpp"
#include "latres/rng.hpp"

namespace latres {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Raised-cosine fade in/out over `ramp` samples at both ends.
double envelope(std::size_t i, std::size_t len, std::size_t ramp) {
  const std::size_t from_end = len - 1 - i;
  const std::size_t edge = std::min(i, from_end);
  if (edge >= ramp) return 1.0;
  return 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(edge) / static_cast<double>(ramp));
}

void append_voiced(Vec& out, std::size_t frames, const CorpusParams& p, Rng& rng) {
  const std::size_t len = frames * kFrameSamples;
  const double f_start = rng.uniform(p.f0_min_hz, p.f0_max_hz);
  const double f_end = f_start * (1.0 + rng.uniform(-p.max_pitch_drift, p.max_pitch_drift));
  const double amp = rng.uniform(0.3, 0.6);
  const double tilt = rng.uniform(p.tilt_min, p.tilt_max);
  std::vector<double> weight;
  for (int h = 1; h * std::max(f_start, f_end) < 0.45 * kSampleRateHz; ++h) {
    weight.push_back(1.0 / std::pow(static_cast<double>(h), tilt));
  }
  double norm = 0.0;
  for (double w : weight) norm += 0.5 * w * w;
  norm = std::sqrt(norm);
  std::vector<double> phase(weight.size());
  for (double& ph : phase) ph = rng.uniform(0.0, p.phase_spread * kTwoPi);
  double base_phase = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    const double f0 = f_start + (f_end - f_start) * static_cast<double>(i) / static_cast<double>(len);
    base_phase += kTwoPi * f0 / kSampleRateHz;
    double s = 0.0;
    for (std::size_t h = 0; h < weight.size(); ++h) {
      s += weight[h] * std::sin(static_cast<double>(h + 1) * base_phase + phase[h]);
    }
    out.push_back(amp / 3.0 * s / norm * envelope(i, len, 320));
  }
}

void append_unvoiced(Vec& out, std::size_t frames, Rng& rng) {
  const std::size_t len = frames * kFrameSamples;
  const double rms = rng.uniform(0.03, 0.08);
  double prev = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    const double x = rng.normal();
    // First difference tilts the spectrum upward, as in fricatives.
    out.push_back(rms * (x - 0.5 * prev) / std::sqrt(1.25) * envelope(i, len, 80));
    prev = x;
  }
}

void append_silence(Vec& out, std::size_t frames, Rng& rng) {
  const std::size_t len = frames * kFrameSamples;
  for (std::size_t i = 0; i < len; ++i) out.push_back(5e-4 * rng.normal());
}

}  // namespace

Corpus generate_corpus(const CorpusParams& p) {
  const double fractions[3] = {p.silence_fraction, p.voiced_fraction, p.unvoiced_fraction};
  double total_fraction = 0.0;
  for (double f : fractions) {
    if (f < 0.0) throw std::invalid_argument("class fractions must be non-negative");
    total_fraction += f;
  }
  if (std::abs(total_fraction - 1.0) > 1e-9) {
    throw std::invalid_argument("class fractions must sum to 1");
  }
  if (!(p.seconds > 0.0)) throw std::invalid_argument("corpus duration must be positive");
  if (!(p.f0_min_hz > 0.0 && p.f0_max_hz >= p.f0_min_hz)) {
    throw std::invalid_argument("bad f0 range");
  }

  Rng rng(p.seed);
  const auto total_frames = static_cast<std::size_t>(std::llround(p.seconds * 1000.0 / kFrameMs));
  Corpus c;
  c.samples.reserve(total_frames * kFrameSamples);
  std::size_t counts[3] = {0, 0, 0};
  while (c.segment_class.size() < total_frames) {
    // Pick the class furthest below its target share, occasionally a random
    // one, so proportions track the targets without a fixed pattern.
    const double done = static_cast<double>(c.segment_class.size());
    std::size_t cls = 0;
    double best = -1e300;
    for (std::size_t k = 0; k < 3; ++k) {
      if (fractions[k] <= 0.0) continue;
      const double deficit = fractions[k] * (done + 30.0) - static_cast<double>(counts[k]);
      if (deficit > best) {
        best = deficit;
        cls = k;
      }
    }
    if (rng.bernoulli(0.25)) {
      const double u = rng.uniform();
      cls = u < fractions[0] ? 0 : (u < fractions[0] + fractions[1] ? 1 : 2);
    }
    std::size_t frames = 0;
    switch (static_cast<VoicingClass>(cls)) {
      case VoicingClass::kSilence:
        frames = 10 + rng.below(31);
        break;
      case VoicingClass::kVoiced:
        frames = 15 + rng.below(36);
        break;
      case VoicingClass::kUnvoiced:
        frames = 5 + rng.below(16);
        break;
    }
    frames = std::min(frames, total_frames - c.segment_class.size());
    switch (static_cast<VoicingClass>(cls)) {
      case VoicingClass::kSilence:
        append_silence(c.samples, frames, rng);
        break;
      case VoicingClass::kVoiced:
        append_voiced(c.samples, frames, p, rng);
        break;
      case VoicingClass::kUnvoiced:
        append_unvoiced(c.samples, frames, rng);
        break;
    }
    counts[cls] += frames;
    c.segment_class.insert(c.segment_class.end(), frames, static_cast<VoicingClass>(cls));
  }
  for (double& x : c.samples) x = std::clamp(x, -1.0, 1.0);
  c.labels.reserve(total_frames);
  for (std::size_t n = 0; n < total_frames; ++n) {
    c.labels.push_back(label_frame(
        std::span<const double>(c.samples).subspan(n * kFrameSamples, kFrameSamples)));
  }
  return c;
}

}  // namespace latres
