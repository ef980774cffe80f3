#pragma once

// Causal convolutional codebook-index predictor.
//
// Input is the window of the last seven distilled code-vectors (oldest
// first). A kernel-7 temporal convolution collapses the window to H
// channels, two pointwise convolutions follow, each convolution followed by
// LeakyReLU, and a dense layer produces 256 logits fed to a softmax.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "latres/common.hpp"
#include "latres/vq.hpp"

namespace latres {

inline constexpr std::size_t kHistoryFrames = 7;
inline constexpr double kLeakySlope = 0.01;

// Parameters (or gradients, which share the layout) in one flat buffer:
//   conv_w [H][D][7], conv_b [H], pw1_w [H][H], pw1_b [H],
//   pw2_w [H][H], pw2_b [H], fc_w [256][H], fc_b [256].
class PlcModel {
 public:
  PlcModel() = default;
  // All-zero parameters. Throws if dim or hidden is zero.
  PlcModel(std::size_t dim, std::size_t hidden);

  // Uniform fan-in initialization, U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for
  // weights, zero biases.
  static PlcModel initialized(std::size_t dim, std::size_t hidden, std::uint64_t seed);

  std::size_t dim() const { return dim_; }
  std::size_t hidden() const { return hidden_; }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  std::span<double> conv_w() { return block(0); }
  std::span<double> conv_b() { return block(1); }
  std::span<double> pw1_w() { return block(2); }
  std::span<double> pw1_b() { return block(3); }
  std::span<double> pw2_w() { return block(4); }
  std::span<double> pw2_b() { return block(5); }
  std::span<double> fc_w() { return block(6); }
  std::span<double> fc_b() { return block(7); }
  std::span<const double> conv_w() const { return block(0); }
  std::span<const double> conv_b() const { return block(1); }
  std::span<const double> pw1_w() const { return block(2); }
  std::span<const double> pw1_b() const { return block(3); }
  std::span<const double> pw2_w() const { return block(4); }
  std::span<const double> pw2_b() const { return block(5); }
  std::span<const double> fc_w() const { return block(6); }
  std::span<const double> fc_b() const { return block(7); }

  static constexpr std::size_t kNumBlocks = 8;
  std::span<const double> block(std::size_t b) const {
    return {params_.data() + offsets_[b], offsets_[b + 1] - offsets_[b]};
  }
  std::span<double> block(std::size_t b) {
    return {params_.data() + offsets_[b], offsets_[b + 1] - offsets_[b]};
  }

  bool same_shape(const PlcModel& other) const {
    return dim_ == other.dim_ && hidden_ == other.hidden_;
  }

 private:
  std::size_t dim_ = 0;
  std::size_t hidden_ = 0;
  std::vector<std::size_t> offsets_;
  Vec params_;
};

// Last seven code-vectors, oldest first. Pushing drops the oldest.
class HistoryWindow {
 public:
  explicit HistoryWindow(std::size_t dim);
  // Starts full with `fill` repeated in every slot.
  HistoryWindow(std::size_t dim, std::span<const double> fill);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return count_; }
  bool full() const { return count_ == kHistoryFrames; }

  void push(std::span<const double> codevector);
  std::span<const double> frame(std::size_t i) const { return {values_.data() + i * dim_, dim_}; }
  // kHistoryFrames * dim values, oldest frame first.
  std::span<const double> flat() const { return values_; }

 private:
  std::size_t dim_;
  std::size_t count_ = 0;
  Vec values_;
};

// Intermediate activations kept for the backward pass.
struct ForwardTrace {
  Vec input;               // 7 * D
  Vec z1, a1, z2, a2, z3, a3;  // H each
  Vec logits, probs;       // 256 each
};

ForwardTrace forward_trace(const PlcModel& model, std::span<const double> window);
Vec forward(const PlcModel& model, const HistoryWindow& window);

double nll_loss(std::span<const double> probs, std::size_t target);

// Adds d(nll)/d(param) for this example into `grads`.
void backward(const PlcModel& model, const ForwardTrace& trace, std::size_t target,
              PlcModel& grads);

CodeIndex argmax_index(std::span<const double> probs);
CodeIndex predict_index(const PlcModel& model, const HistoryWindow& window);

struct AdamState {
  explicit AdamState(const PlcModel& model, double lr = 1e-4, double beta1 = 0.9,
                     double beta2 = 0.999, double eps = 1e-8);

  double lr;
  double beta1;
  double beta2;
  double eps;
  std::uint64_t step = 0;
  Vec m;
  Vec v;
};

class NonFiniteGradient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void adam_step(PlcModel& model, const PlcModel& grads, AdamState& state);

struct PlcTrainOptions {
  std::size_t iterations = 20000;
  std::size_t batch_size = 128;
  double lr = 1e-4;
  std::uint64_t seed = 1;
  std::size_t log_every = 100;
};

struct LossPoint {
  std::size_t iteration;
  double mean_nll;
};

// Teacher forcing: every window holds ground-truth code-vectors
// codebook.row(seq[p-7]) .. codebook.row(seq[p-1]) and the target is seq[p].
// Sequences must be at least kHistoryFrames + 1 long.
std::vector<LossPoint> train_teacher_forcing(PlcModel& model, const Codebook& codebook,
                                             const std::vector<std::vector<CodeIndex>>& sequences,
                                             const PlcTrainOptions& options);

// Cuts a long index stream into consecutive pieces of `length` frames,
// dropping a tail shorter than kHistoryFrames + 1.
std::vector<std::vector<CodeIndex>> split_sequences(std::span<const CodeIndex> stream,
                                                    std::size_t length);

struct ComplexityReport {
  std::size_t param_count = 0;
  std::size_t macs_per_frame = 0;
  double flops_per_frame = 0.0;    // 2 FLOPs per multiply-add
  double flops_per_second = 0.0;   // at 100 frames/s
};

ComplexityReport complexity_report(std::size_t dim, std::size_t hidden);
ComplexityReport complexity_report(const PlcModel& model);

// Binary model file, little-endian: "PLCN", u32 dim, u32 hidden, then the
// eight parameter blocks in layout order as f32.
void write_model(std::ostream& out, const PlcModel& model);
PlcModel read_model(std::istream& in);

void write_loss_curve_csv(std::ostream& out, std::span<const LossPoint> curve);

}  // namespace latres
