#pragma once

// Data-parallel inner loops. Each kernel has a serial reference and an OpenMP
// version; tests hold the two against each other and the benchmark target
// times them.

#include <span>

#include "latres/common.hpp"
#include "latres/plcnet.hpp"
#include "latres/vq.hpp"

namespace latres::kernels {

// Chunk count for reductions. Fixed so that the summation order, and
// therefore every bit of the result, does not depend on the thread count.
inline constexpr std::size_t kReductionChunks = 16;

struct BatchLoss {
  double loss_sum = 0.0;  // summed NLL over the batch
  PlcModel grads;         // summed gradients, same layout as the model
};

namespace serial {

void assign_nearest(const Codebook& codebook, const VectorSet& data,
                    std::span<CodeIndex> out);

// Sum of squared quantization errors.
double quantization_error(const Codebook& codebook, const VectorSet& data);

// windows: one row of kHistoryFrames * dim values per example.
BatchLoss batch_loss_and_grad(const PlcModel& model, const VectorSet& windows,
                              std::span<const CodeIndex> targets);

}  // namespace serial

namespace omp {

void assign_nearest(const Codebook& codebook, const VectorSet& data,
                    std::span<CodeIndex> out);

double quantization_error(const Codebook& codebook, const VectorSet& data);

BatchLoss batch_loss_and_grad(const PlcModel& model, const VectorSet& windows,
                              std::span<const CodeIndex> targets);

}  // namespace omp

}  // namespace latres::kernels
