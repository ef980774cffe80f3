#include "latres/toycodec.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "latres/rng.hpp"

namespace latres {
namespace {

Vec random_frame(Rng& rng) {
  Vec f(kFrameSamples);
  for (double& x : f) x = rng.uniform(-1.0, 1.0);
  return f;
}

TEST(AnalysisTransformTest, BasisIsOrthonormal) {
  const AnalysisTransform t(16);
  for (std::size_t a = 0; a < 16; ++a) {
    for (std::size_t b = 0; b < 16; ++b) {
      double dot = 0.0;
      for (std::size_t i = 0; i < kFrameSamples; ++i) dot += t.basis_row(a)[i] * t.basis_row(b)[i];
      EXPECT_NEAR(dot, a == b ? 1.0 : 0.0, 1e-9);
    }
  }
}

TEST(AnalysisTransformTest, ZeroFrameGivesZeroLatent) {
  const AnalysisTransform t(16, Vec(16, 2.5));
  EXPECT_EQ(squared_norm(t.encode(Vec(kFrameSamples, 0.0))), 0.0);
  EXPECT_EQ(squared_norm(t.decode(Vec(16, 0.0))), 0.0);
}

TEST(AnalysisTransformTest, BasisRowEncodesToScaledUnitVector) {
  Vec scale(16);
  for (std::size_t j = 0; j < 16; ++j) scale[j] = 0.5 + static_cast<double>(j);
  const AnalysisTransform t(16, scale);
  for (std::size_t j = 0; j < 16; ++j) {
    const Vec z = t.encode(t.basis_row(j));
    for (std::size_t k = 0; k < 16; ++k) EXPECT_NEAR(z[k], k == j ? scale[j] : 0.0, 1e-9);
  }
}

TEST(AnalysisTransformTest, EncodeDecodeEncodeIsIdentity) {
  Rng rng(1);
  const AnalysisTransform t(16, Vec(16, 3.0));
  for (int i = 0; i < 100; ++i) {
    const Vec z = t.encode(random_frame(rng));
    const Vec z2 = t.encode(t.decode(z));
    for (std::size_t k = 0; k < 16; ++k) EXPECT_NEAR(z[k], z2[k], 1e-9);
  }
}

TEST(AnalysisTransformTest, InSpanSignalsReconstruct) {
  Rng rng(2);
  const AnalysisTransform t(16, Vec(16, 0.7));
  for (int i = 0; i < 20; ++i) {
    Vec x(kFrameSamples, 0.0);
    for (std::size_t j = 0; j < 16; ++j) {
      const double c = rng.normal();
      for (std::size_t n = 0; n < kFrameSamples; ++n) x[n] += c * t.basis_row(j)[n];
    }
    const Vec y = t.decode(t.encode(x));
    EXPECT_LT(std::sqrt(squared_distance(x, y) / kFrameSamples), 1e-6);
  }
}

TEST(AnalysisTransformTest, NoiseLosesExactlyOutOfSpanEnergy) {
  Rng rng(3);
  const AnalysisTransform t(16);
  for (int i = 0; i < 20; ++i) {
    Vec x(kFrameSamples);
    for (double& v : x) v = rng.normal();
    // Out-of-span energy computed independently from the full 160-point basis.
    const AnalysisTransform full(kFrameSamples);
    double out_of_span = 0.0;
    const Vec c = full.encode(x);
    for (std::size_t k = 16; k < kFrameSamples; ++k) out_of_span += c[k] * c[k];
    const Vec y = t.decode(t.encode(x));
    EXPECT_NEAR(squared_distance(x, y), out_of_span, 1e-9);
  }
}

TEST(AnalysisTransformTest, LinearityAndEnergyBound) {
  Rng rng(4);
  const AnalysisTransform t(16, Vec(16, 1.7));
  for (int i = 0; i < 50; ++i) {
    const Vec x = random_frame(rng);
    const Vec y = random_frame(rng);
    const double a = rng.normal(), b = rng.normal();
    Vec mix(kFrameSamples);
    for (std::size_t n = 0; n < kFrameSamples; ++n) mix[n] = a * x[n] + b * y[n];
    const Vec zx = t.encode(x), zy = t.encode(y), zm = t.encode(mix);
    for (std::size_t k = 0; k < 16; ++k) EXPECT_NEAR(zm[k], a * zx[k] + b * zy[k], 1e-9);
    EXPECT_LE(squared_norm(t.decode(zx)), squared_norm(x) + 1e-9);
  }
}

TEST(AnalysisTransformTest, InvalidInputs) {
  const AnalysisTransform t(16);
  EXPECT_THROW(t.encode(Vec(159, 0.0)), std::invalid_argument);
  Vec bad(kFrameSamples, 0.0);
  bad[3] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(t.encode(bad), std::invalid_argument);
  EXPECT_THROW(t.decode(Vec(15, 0.0)), std::invalid_argument);
  EXPECT_THROW(AnalysisTransform(0), std::invalid_argument);
  EXPECT_THROW(AnalysisTransform(4, Vec{1, 1, 0, 1}), std::invalid_argument);
}

TEST(FitTransformTest, LatentsHaveUnitVariance) {
  Rng rng(5);
  Vec signal(kFrameSamples * 2000);
  double prev = 0.0;
  for (double& x : signal) {
    prev = 0.9 * prev + 0.1 * rng.normal();
    x = prev;
  }
  const AnalysisTransform t = fit_transform(16, signal);
  const VectorSet z = encode_signal(signal, t);
  for (std::size_t k = 0; k < 16; ++k) {
    double m = 0.0, s = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) m += z.row(i)[k];
    m /= static_cast<double>(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) s += (z.row(i)[k] - m) * (z.row(i)[k] - m);
    EXPECT_NEAR(s / static_cast<double>(z.size()), 1.0, 1e-9);
  }
}

TEST(FramingTest, PadsLastFrame) {
  EXPECT_EQ(frame_count(0), 0u);
  EXPECT_EQ(frame_count(160), 1u);
  EXPECT_EQ(frame_count(161), 2u);
  Vec s(170, 1.0);
  const Vec f = frame_at(s, 1);
  EXPECT_EQ(f[9], 1.0);
  EXPECT_EQ(f[10], 0.0);
}

TEST(TransformFileTest, RoundTrip) {
  const AnalysisTransform t(8, Vec{1, 2, 3, 4, 5, 6, 7, 8.125});
  std::stringstream ss;
  write_transform(ss, t);
  const AnalysisTransform back = read_transform(ss);
  ASSERT_EQ(back.dim(), 8u);
  for (std::size_t k = 0; k < 8; ++k) EXPECT_EQ(back.scale()[k], t.scale()[k]);
}

}  // namespace
}  // namespace latres
