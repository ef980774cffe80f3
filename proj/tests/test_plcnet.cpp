#include "latres/plcnet.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "latres/rng.hpp"

namespace latres {
namespace {

Vec random_window(Rng& rng, std::size_t dim) {
  Vec w(kHistoryFrames * dim);
  for (double& x : w) x = rng.normal();
  return w;
}

Codebook random_codebook(Rng& rng, std::size_t dim) {
  Vec rows(kCodebookSize * dim);
  for (double& x : rows) x = rng.normal();
  return Codebook(dim, std::move(rows));
}

double loss_at(const PlcModel& m, std::span<const double> window, std::size_t target) {
  return nll_loss(forward_trace(m, window).probs, target);
}

TEST(PlcModelTest, LayoutSizes) {
  const PlcModel m(16, 256);
  EXPECT_EQ(m.conv_w().size(), 256u * 16 * 7);
  EXPECT_EQ(m.conv_b().size(), 256u);
  EXPECT_EQ(m.pw1_w().size(), 256u * 256);
  EXPECT_EQ(m.pw2_w().size(), 256u * 256);
  EXPECT_EQ(m.fc_w().size(), 256u * 256);
  EXPECT_EQ(m.fc_b().size(), 256u);
  EXPECT_THROW(PlcModel(0, 4), std::invalid_argument);
}

TEST(PlcModelTest, ZeroWeightsGiveUniformOutput) {
  const PlcModel m(4, 8);
  Rng rng(1);
  const ForwardTrace t = forward_trace(m, random_window(rng, 4));
  for (double p : t.probs) EXPECT_DOUBLE_EQ(p, 1.0 / 256.0);
  EXPECT_NEAR(nll_loss(t.probs, 17), std::log(256.0), 1e-12);
}

TEST(PlcModelTest, ProbabilitiesNormalized) {
  Rng rng(2);
  const PlcModel m = PlcModel::initialized(4, 16, 3);
  for (int i = 0; i < 20; ++i) {
    const ForwardTrace t = forward_trace(m, random_window(rng, 4));
    double s = 0.0;
    for (double p : t.probs) {
      EXPECT_GT(p, 0.0);
      s += p;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(PlcModelTest, ForwardMatchesHandComputation) {
  // D=1, H=1: every layer is a scalar, so the network can be written out.
  PlcModel m(1, 1);
  for (std::size_t t = 0; t < 7; ++t) m.conv_w()[t] = 0.1 * static_cast<double>(t + 1);
  m.conv_b()[0] = -0.2;
  m.pw1_w()[0] = -1.5;
  m.pw1_b()[0] = 0.1;
  m.pw2_w()[0] = 2.0;
  m.pw2_b()[0] = 0.0;
  for (std::size_t k = 0; k < 256; ++k) m.fc_w()[k] = 0.01 * static_cast<double>(k);
  m.fc_b()[3] = 0.5;
  const Vec w = {1, -1, 2, 0.5, 0, 1, -2};
  const auto leaky = [](double x) { return x > 0 ? x : 0.01 * x; };
  double z1 = -0.2;
  for (std::size_t t = 0; t < 7; ++t) z1 += 0.1 * static_cast<double>(t + 1) * w[t];
  const double a3 = leaky(2.0 * leaky(-1.5 * leaky(z1) + 0.1));
  Vec logits(256);
  double mx = -INFINITY;
  for (std::size_t k = 0; k < 256; ++k) {
    logits[k] = 0.01 * static_cast<double>(k) * a3 + (k == 3 ? 0.5 : 0.0);
    mx = std::max(mx, logits[k]);
  }
  double z = 0.0;
  for (double l : logits) z += std::exp(l - mx);
  const ForwardTrace t = forward_trace(m, w);
  for (std::size_t k = 0; k < 256; ++k) {
    EXPECT_NEAR(t.probs[k], std::exp(logits[k] - mx) / z, 1e-14);
  }
}

TEST(PlcGradientTest, CentralDifferences) {
  Rng rng(4);
  const std::size_t dim = 4, hidden = 8;
  PlcModel m = PlcModel::initialized(dim, hidden, 5);
  // Non-zero biases exercise every path.
  for (std::size_t b : {1u, 3u, 5u, 7u}) {
    for (double& x : m.block(b)) x = 0.1 * rng.normal();
  }
  const Vec w = random_window(rng, dim);
  const std::size_t target = 42;
  PlcModel g(dim, hidden);
  backward(m, forward_trace(m, w), target, g);
  const double h = 1e-6;
  std::size_t checked = 0;
  for (std::size_t i = 0; i < m.parameters().size(); ++i) {
    const double orig = m.parameters()[i];
    m.parameters()[i] = orig + h;
    const double up = loss_at(m, w, target);
    m.parameters()[i] = orig - h;
    const double down = loss_at(m, w, target);
    m.parameters()[i] = orig;
    const double numeric = (up - down) / (2 * h);
    const double analytic = g.parameters()[i];
    const double diff = std::abs(numeric - analytic);
    EXPECT_TRUE(diff <= 1e-4 * std::max(std::abs(numeric), std::abs(analytic)) || diff < 1e-8)
        << "param " << i << " analytic " << analytic << " numeric " << numeric;
    ++checked;
  }
  EXPECT_EQ(checked, complexity_report(dim, hidden).param_count);
}

TEST(PlcGradientTest, FcBiasGradientIsProbsMinusOneHot) {
  Rng rng(6);
  const PlcModel m = PlcModel::initialized(4, 8, 7);
  const Vec w = random_window(rng, 4);
  const ForwardTrace t = forward_trace(m, w);
  PlcModel g(4, 8);
  backward(m, t, 9, g);
  for (std::size_t k = 0; k < 256; ++k) {
    EXPECT_NEAR(g.fc_b()[k], t.probs[k] - (k == 9 ? 1.0 : 0.0), 1e-15);
  }
  // backward accumulates.
  backward(m, t, 9, g);
  EXPECT_NEAR(g.fc_b()[9], 2.0 * (t.probs[9] - 1.0), 1e-15);
}

TEST(AdamTest, FirstStepMovesByLearningRate) {
  PlcModel m(1, 1);
  PlcModel g(1, 1);
  for (std::size_t i = 0; i < g.parameters().size(); ++i) {
    g.parameters()[i] = (i % 2 ? -1.0 : 1.0) * (0.5 + static_cast<double>(i));
  }
  AdamState st(m, 0.01);
  adam_step(m, g, st);
  for (std::size_t i = 0; i < m.parameters().size(); ++i) {
    const double gi = g.parameters()[i];
    EXPECT_NEAR(m.parameters()[i], -0.01 * gi / (std::abs(gi) + 1e-8), 1e-12);
  }
  // Second step with the same gradient: bias-corrected moments equal g, g^2.
  const Vec before(m.parameters().begin(), m.parameters().end());
  adam_step(m, g, st);
  for (std::size_t i = 0; i < m.parameters().size(); ++i) {
    const double gi = g.parameters()[i];
    EXPECT_NEAR(m.parameters()[i] - before[i], -0.01 * gi / (std::abs(gi) + 1e-8), 1e-12);
  }
  PlcModel bad(1, 1);
  bad.parameters()[0] = NAN;
  EXPECT_THROW(adam_step(m, bad, st), NonFiniteGradient);
}

TEST(HistoryWindowTest, OldestFirstAndFill) {
  const Vec fill = {9, 9};
  HistoryWindow w(2, fill);
  EXPECT_TRUE(w.full());
  for (int i = 0; i < 3; ++i) w.push(Vec{double(i), double(-i)});
  EXPECT_EQ(w.frame(0)[0], 9.0);
  EXPECT_EQ(w.frame(3)[0], 9.0);
  EXPECT_EQ(w.frame(4)[0], 0.0);
  EXPECT_EQ(w.frame(5)[0], 1.0);
  EXPECT_EQ(w.frame(6)[1], -2.0);
  EXPECT_EQ(w.flat().size(), 14u);
}

TEST(TrainingTest, LearnsDeterministicCycle) {
  Rng rng(8);
  const Codebook cb = random_codebook(rng, 4);
  std::vector<CodeIndex> stream(4000);
  for (std::size_t i = 0; i < stream.size(); ++i) stream[i] = static_cast<CodeIndex>((i * 37) % 256);
  const auto seqs = split_sequences(stream, 200);
  PlcModel m = PlcModel::initialized(4, 64, 1);
  PlcTrainOptions opt;
  opt.iterations = 3000;
  opt.batch_size = 64;
  opt.lr = 3e-3;
  opt.seed = 2;
  const auto curve = train_teacher_forcing(m, cb, seqs, opt);
  EXPECT_LT(curve.back().mean_nll, curve.front().mean_nll);
  std::size_t hits = 0, total = 0;
  for (std::size_t p = 7; p < 1000; ++p) {
    HistoryWindow w(4);
    for (std::size_t t = p - 7; t < p; ++t) w.push(cb.row(stream[t]));
    hits += predict_index(m, w) == stream[p];
    ++total;
  }
  EXPECT_GT(static_cast<double>(hits) / static_cast<double>(total), 0.9);
}

TEST(TrainingTest, IidTargetsStayNearUniformLoss) {
  Rng rng(9);
  const Codebook cb = random_codebook(rng, 4);
  std::vector<CodeIndex> stream(20000);
  for (auto& s : stream) s = static_cast<CodeIndex>(rng.below(256));
  PlcModel m = PlcModel::initialized(4, 16, 1);
  PlcTrainOptions opt;
  opt.iterations = 600;
  opt.batch_size = 128;
  opt.lr = 1e-3;
  const auto curve = train_teacher_forcing(m, cb, split_sequences(stream, 200), opt);
  // Nothing is predictable: held-out NLL cannot beat ln 256 by much.
  std::vector<CodeIndex> held(3000);
  for (auto& s : held) s = static_cast<CodeIndex>(rng.below(256));
  double nll = 0.0;
  std::size_t n = 0;
  for (std::size_t p = 7; p < held.size(); ++p) {
    Vec w;
    for (std::size_t t = p - 7; t < p; ++t) w.insert(w.end(), cb.row(held[t]).begin(), cb.row(held[t]).end());
    nll += loss_at(m, w, held[p]);
    ++n;
  }
  EXPECT_NEAR(nll / static_cast<double>(n), std::log(256.0), 0.1);
  EXPECT_FALSE(curve.empty());
}

TEST(TrainingTest, DeterministicForSeed) {
  Rng rng(10);
  const Codebook cb = random_codebook(rng, 4);
  std::vector<CodeIndex> stream(500);
  for (auto& s : stream) s = static_cast<CodeIndex>(rng.below(256));
  const auto seqs = split_sequences(stream, 100);
  PlcTrainOptions opt;
  opt.iterations = 20;
  opt.batch_size = 16;
  PlcModel a = PlcModel::initialized(4, 8, 1), b = PlcModel::initialized(4, 8, 1);
  train_teacher_forcing(a, cb, seqs, opt);
  train_teacher_forcing(b, cb, seqs, opt);
  EXPECT_TRUE(std::equal(a.parameters().begin(), a.parameters().end(), b.parameters().begin()));
}

TEST(TrainingTest, SplitSequences) {
  std::vector<CodeIndex> s(205);
  const auto out = split_sequences(s, 100);
  ASSERT_EQ(out.size(), 2u);  // tail of 5 frames is dropped
  EXPECT_EQ(split_sequences(std::vector<CodeIndex>(208), 100).back().size(), 8u);
  EXPECT_THROW(split_sequences(s, 7), std::invalid_argument);
}

TEST(ComplexityTest, MatchesEnumerationAndScaling) {
  for (std::size_t dim : {4u, 16u}) {
    for (std::size_t hidden : {8u, 64u, 256u}) {
      const PlcModel m(dim, hidden);
      const ComplexityReport r = complexity_report(m);
      EXPECT_EQ(r.param_count, m.parameters().size());
      EXPECT_DOUBLE_EQ(r.flops_per_second, 100.0 * r.flops_per_frame);
      // Two pointwise H x H layers dominate the H^2 term: 2 FLOPs * 2 layers.
      const ComplexityReport r2 = complexity_report(dim, 2 * hidden);
      const double d = r2.flops_per_frame - r.flops_per_frame;
      const double linear = 2.0 * static_cast<double>(dim * 7 + 256) * static_cast<double>(hidden);
      EXPECT_DOUBLE_EQ(d - linear, 2.0 * 2.0 * 3.0 * static_cast<double>(hidden * hidden));
    }
  }
  EXPECT_EQ(complexity_report(16, 256).param_count, 226304u);
}

TEST(ModelFileTest, RoundTripAtFloatPrecision) {
  const PlcModel m = PlcModel::initialized(4, 8, 3);
  std::stringstream ss;
  write_model(ss, m);
  EXPECT_EQ(ss.str().size(), 12u + 4u * m.parameters().size());
  const PlcModel back = read_model(ss);
  ASSERT_TRUE(back.same_shape(m));
  for (std::size_t i = 0; i < m.parameters().size(); ++i) {
    EXPECT_EQ(back.parameters()[i], static_cast<double>(static_cast<float>(m.parameters()[i])));
  }
  std::stringstream junk("PLCX");
  EXPECT_ANY_THROW(read_model(junk));
}

}  // namespace
}  // namespace latres
