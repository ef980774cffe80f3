#include "latres/kernels.hpp"

#include <stdexcept>

namespace latres::kernels {

namespace {

void check_batch(const PlcModel& model, const VectorSet& windows,
                 std::span<const CodeIndex> targets) {
  if (windows.dim() != model.dim() * kHistoryFrames) {
    throw std::invalid_argument("batch windows have the wrong width");
  }
  if (windows.size() != targets.size()) {
    throw std::invalid_argument("batch window/target count mismatch");
  }
}

std::size_t chunk_begin(std::size_t c, std::size_t n) { return c * n / kReductionChunks; }

double chunk_error(const Codebook& codebook, const VectorSet& data, std::size_t c) {
  double acc = 0.0;
  for (std::size_t i = chunk_begin(c, data.size()); i < chunk_begin(c + 1, data.size()); ++i) {
    const auto x = data.row(i);
    acc += squared_distance(x, codebook.row(nearest_index(x, codebook)));
  }
  return acc;
}

double chunk_loss_and_grad(const PlcModel& model, const VectorSet& windows,
                           std::span<const CodeIndex> targets, std::size_t c, PlcModel& grads) {
  double loss = 0.0;
  for (std::size_t i = chunk_begin(c, windows.size()); i < chunk_begin(c + 1, windows.size()); ++i) {
    const ForwardTrace trace = forward_trace(model, windows.row(i));
    loss += nll_loss(trace.probs, targets[i]);
    backward(model, trace, targets[i], grads);
  }
  return loss;
}

// Chunk results are combined in chunk order by both versions.
BatchLoss combine(std::vector<PlcModel>& chunk_grads, const double* chunk_loss) {
  BatchLoss out{chunk_loss[0], std::move(chunk_grads[0])};
  auto total = out.grads.parameters();
  for (std::size_t c = 1; c < kReductionChunks; ++c) {
    out.loss_sum += chunk_loss[c];
    const auto g = chunk_grads[c].parameters();
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += g[i];
  }
  return out;
}

}  // namespace

namespace serial {

void assign_nearest(const Codebook& codebook, const VectorSet& data, std::span<CodeIndex> out) {
  if (out.size() != data.size()) throw std::invalid_argument("assign_nearest: output size");
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = nearest_index(data.row(i), codebook);
}

double quantization_error(const Codebook& codebook, const VectorSet& data) {
  double total = 0.0;
  for (std::size_t c = 0; c < kReductionChunks; ++c) total += chunk_error(codebook, data, c);
  return total;
}

BatchLoss batch_loss_and_grad(const PlcModel& model, const VectorSet& windows,
                              std::span<const CodeIndex> targets) {
  check_batch(model, windows, targets);
  std::vector<PlcModel> chunk_grads(kReductionChunks, PlcModel(model.dim(), model.hidden()));
  double chunk_loss[kReductionChunks] = {};
  for (std::size_t c = 0; c < kReductionChunks; ++c) {
    chunk_loss[c] = chunk_loss_and_grad(model, windows, targets, c, chunk_grads[c]);
  }
  return combine(chunk_grads, chunk_loss);
}

}  // namespace serial

namespace omp {

void assign_nearest(const Codebook& codebook, const VectorSet& data, std::span<CodeIndex> out) {
  if (out.size() != data.size()) throw std::invalid_argument("assign_nearest: output size");
  const auto n = static_cast<std::ptrdiff_t>(data.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    out[k] = nearest_index(data.row(k), codebook);
  }
}

double quantization_error(const Codebook& codebook, const VectorSet& data) {
  double partial[kReductionChunks] = {};
#pragma omp parallel for schedule(static)
  for (std::size_t c = 0; c < kReductionChunks; ++c) partial[c] = chunk_error(codebook, data, c);
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

BatchLoss batch_loss_and_grad(const PlcModel& model, const VectorSet& windows,
                              std::span<const CodeIndex> targets) {
  check_batch(model, windows, targets);
  std::vector<PlcModel> chunk_grads(kReductionChunks, PlcModel(model.dim(), model.hidden()));
  double chunk_loss[kReductionChunks] = {};
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t c = 0; c < kReductionChunks; ++c) {
    chunk_loss[c] = chunk_loss_and_grad(model, windows, targets, c, chunk_grads[c]);
  }
  return combine(chunk_grads, chunk_loss);
}

}  // namespace omp

}  // namespace latres::kernels
