#include "latres/kernels.hpp"

#include <gtest/gtest.h>

#include "latres/rng.hpp"

namespace latres {
namespace {

VectorSet random_set(Rng& rng, std::size_t n, std::size_t dim) {
  VectorSet s(dim);
  Vec v(dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& x : v) x = rng.normal();
    s.push_back(v);
  }
  return s;
}

Codebook random_codebook(Rng& rng, std::size_t dim) {
  Vec rows(kCodebookSize * dim);
  for (double& x : rows) x = rng.normal();
  return Codebook(dim, std::move(rows));
}

TEST(KernelsTest, AssignNearestSerialAndOmpAgree) {
  Rng rng(1);
  const Codebook cb = random_codebook(rng, 16);
  const VectorSet data = random_set(rng, 5000, 16);
  std::vector<CodeIndex> a(data.size()), b(data.size());
  kernels::serial::assign_nearest(cb, data, a);
  kernels::omp::assign_nearest(cb, data, b);
  EXPECT_EQ(a, b);
  for (std::size_t i = 0; i < data.size(); i += 97) EXPECT_EQ(a[i], nearest_index(data.row(i), cb));
}

TEST(KernelsTest, QuantizationErrorIsBitIdentical) {
  Rng rng(2);
  const Codebook cb = random_codebook(rng, 8);
  for (std::size_t n : {1u, 15u, 16u, 17u, 1000u, 4099u}) {
    const VectorSet data = random_set(rng, n, 8);
    const double s = kernels::serial::quantization_error(cb, data);
    const double o = kernels::omp::quantization_error(cb, data);
    EXPECT_EQ(s, o) << n;
    double oracle = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      oracle += squared_distance(data.row(i), cb.row(nearest_index(data.row(i), cb)));
    }
    EXPECT_NEAR(s, oracle, 1e-9 * (1.0 + oracle));
  }
}

TEST(KernelsTest, BatchGradientsAreBitIdenticalAndMatchPerExampleSum) {
  Rng rng(3);
  const std::size_t dim = 4, hidden = 12;
  const PlcModel model = PlcModel::initialized(dim, hidden, 9);
  const VectorSet windows = random_set(rng, 37, kHistoryFrames * dim);
  std::vector<CodeIndex> targets(windows.size());
  for (auto& t : targets) t = static_cast<CodeIndex>(rng.below(256));

  const kernels::BatchLoss s = kernels::serial::batch_loss_and_grad(model, windows, targets);
  const kernels::BatchLoss o = kernels::omp::batch_loss_and_grad(model, windows, targets);
  EXPECT_EQ(s.loss_sum, o.loss_sum);
  ASSERT_EQ(s.grads.parameters().size(), o.grads.parameters().size());
  for (std::size_t i = 0; i < s.grads.parameters().size(); ++i) {
    ASSERT_EQ(s.grads.parameters()[i], o.grads.parameters()[i]) << i;
  }

  PlcModel oracle(dim, hidden);
  double loss = 0.0;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const ForwardTrace tr = forward_trace(model, windows.row(i));
    loss += nll_loss(tr.probs, targets[i]);
    backward(model, tr, targets[i], oracle);
  }
  EXPECT_NEAR(s.loss_sum, loss, 1e-9);
  for (std::size_t i = 0; i < oracle.parameters().size(); ++i) {
    EXPECT_NEAR(s.grads.parameters()[i], oracle.parameters()[i], 1e-10);
  }
}

}  // namespace
}  // namespace latres
