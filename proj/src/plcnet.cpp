#include "latres/plcnet.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "binio.hpp"
#include "latres/kernels.hpp"
#include "latres/rng.hpp"

namespace latres {

namespace {

constexpr std::string_view kModelMagic = "PLCN";

double leaky(double z) { return z > 0.0 ? z : kLeakySlope * z; }
double leaky_grad(double z) { return z > 0.0 ? 1.0 : kLeakySlope; }

// y = W x + b, W is rows x cols row-major.
void affine(std::span<const double> w, std::span<const double> b, std::span<const double> x,
            Vec& y) {
  const std::size_t rows = b.size();
  const std::size_t cols = x.size();
  y.resize(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* wr = w.data() + r * cols;
    double acc = b[r];
    for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
    y[r] = acc;
  }
}

// Accumulates the weight/bias gradient of y = W x + b given dy, and returns
// dx = W^T dy.
Vec affine_backward(std::span<const double> w, std::span<const double> x,
                    std::span<const double> dy, std::span<double> dw, std::span<double> db) {
  const std::size_t rows = dy.size();
  const std::size_t cols = x.size();
  Vec dx(cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double g = dy[r];
    db[r] += g;
    const double* wr = w.data() + r * cols;
    double* dwr = dw.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) {
      dwr[c] += g * x[c];
      dx[c] += wr[c] * g;
    }
  }
  return dx;
}

}  // namespace

PlcModel::PlcModel(std::size_t dim, std::size_t hidden) : dim_(dim), hidden_(hidden) {
  if (dim == 0) throw std::invalid_argument("PLC model input dimension must be positive");
  if (hidden == 0) throw std::invalid_argument("PLC model hidden width must be positive");
  const std::size_t sizes[kNumBlocks] = {hidden * dim * kHistoryFrames,
                                         hidden,
                                         hidden * hidden,
                                         hidden,
                                         hidden * hidden,
                                         hidden,
                                         kCodebookSize * hidden,
                                         kCodebookSize};
  offsets_.assign(kNumBlocks + 1, 0);
  for (std::size_t b = 0; b < kNumBlocks; ++b) offsets_[b + 1] = offsets_[b] + sizes[b];
  params_.assign(offsets_.back(), 0.0);
}

PlcModel PlcModel::initialized(std::size_t dim, std::size_t hidden, std::uint64_t seed) {
  PlcModel model(dim, hidden);
  Rng rng(seed);
  const double fan_in[4] = {static_cast<double>(dim * kHistoryFrames),
                            static_cast<double>(hidden), static_cast<double>(hidden),
                            static_cast<double>(hidden)};
  for (std::size_t layer = 0; layer < 4; ++layer) {
    const double bound = 1.0 / std::sqrt(fan_in[layer]);
    for (double& w : model.block(2 * layer)) w = rng.uniform(-bound, bound);
  }
  return model;
}

HistoryWindow::HistoryWindow(std::size_t dim) : dim_(dim), values_(kHistoryFrames * dim, 0.0) {}

HistoryWindow::HistoryWindow(std::size_t dim, std::span<const double> fill)
    : HistoryWindow(dim) {
  for (std::size_t i = 0; i < kHistoryFrames; ++i) push(fill);
}

void HistoryWindow::push(std::span<const double> codevector) {
  if (codevector.size() != dim_) throw std::invalid_argument("history: dimension mismatch");
  std::copy(values_.begin() + static_cast<std::ptrdiff_t>(dim_), values_.end(), values_.begin());
  std::copy(codevector.begin(), codevector.end(),
            values_.end() - static_cast<std::ptrdiff_t>(dim_));
  count_ = std::min(count_ + 1, kHistoryFrames);
}

ForwardTrace forward_trace(const PlcModel& model, std::span<const double> window) {
  const std::size_t dim = model.dim();
  const std::size_t hidden = model.hidden();
  if (window.size() != dim * kHistoryFrames) {
    throw std::invalid_argument("PLC forward: window must hold 7 frames of dimension " +
                                std::to_string(dim));
  }
  ForwardTrace t;
  t.input.assign(window.begin(), window.end());

  // Temporal convolution, kernel 7, one output step: channel h sums
  // w[h][d][tau] * x[tau][d] over the whole window.
  const auto cw = model.conv_w();
  const auto cb = model.conv_b();
  t.z1.resize(hidden);
  for (std::size_t h = 0; h < hidden; ++h) {
    double acc = cb[h];
    const double* wh = cw.data() + h * dim * kHistoryFrames;
    for (std::size_t d = 0; d < dim; ++d) {
      for (std::size_t tau = 0; tau < kHistoryFrames; ++tau) {
        acc += wh[d * kHistoryFrames + tau] * window[tau * dim + d];
      }
    }
    t.z1[h] = acc;
  }
  t.a1.resize(hidden);
  std::transform(t.z1.begin(), t.z1.end(), t.a1.begin(), leaky);

  affine(model.pw1_w(), model.pw1_b(), t.a1, t.z2);
  t.a2.resize(hidden);
  std::transform(t.z2.begin(), t.z2.end(), t.a2.begin(), leaky);

  affine(model.pw2_w(), model.pw2_b(), t.a2, t.z3);
  t.a3.resize(hidden);
  std::transform(t.z3.begin(), t.z3.end(), t.a3.begin(), leaky);

  affine(model.fc_w(), model.fc_b(), t.a3, t.logits);
  const double max_logit = *std::max_element(t.logits.begin(), t.logits.end());
  t.probs.resize(kCodebookSize);
  double total = 0.0;
  for (std::size_t k = 0; k < kCodebookSize; ++k) {
    t.probs[k] = std::exp(t.logits[k] - max_logit);
    total += t.probs[k];
  }
  for (double& p : t.probs) p /= total;
  return t;
}

Vec forward(const PlcModel& model, const HistoryWindow& window) {
  if (!window.full()) throw std::invalid_argument("PLC forward: history window is not full");
  return forward_trace(model, window.flat()).probs;
}

double nll_loss(std::span<const double> probs, std::size_t target) {
  if (target >= probs.size()) throw std::out_of_range("nll_loss: target out of range");
  return -std::log(std::max(probs[target], 1e-12));
}

void backward(const PlcModel& model, const ForwardTrace& trace, std::size_t target,
              PlcModel& grads) {
  if (!model.same_shape(grads)) throw std::invalid_argument("backward: gradient shape mismatch");
  if (target >= kCodebookSize) throw std::out_of_range("backward: target out of range");
  const std::size_t dim = model.dim();
  const std::size_t hidden = model.hidden();

  Vec dlogits = trace.probs;
  dlogits[target] -= 1.0;

  Vec da3 = affine_backward(model.fc_w(), trace.a3, dlogits, grads.fc_w(), grads.fc_b());
  for (std::size_t h = 0; h < hidden; ++h) da3[h] *= leaky_grad(trace.z3[h]);
  Vec da2 = affine_backward(model.pw2_w(), trace.a2, da3, grads.pw2_w(), grads.pw2_b());
  for (std::size_t h = 0; h < hidden; ++h) da2[h] *= leaky_grad(trace.z2[h]);
  Vec da1 = affine_backward(model.pw1_w(), trace.a1, da2, grads.pw1_w(), grads.pw1_b());
  for (std::size_t h = 0; h < hidden; ++h) da1[h] *= leaky_grad(trace.z1[h]);

  auto gw = grads.conv_w();
  auto gb = grads.conv_b();
  for (std::size_t h = 0; h < hidden; ++h) {
    const double g = da1[h];
    gb[h] += g;
    double* gwh = gw.data() + h * dim * kHistoryFrames;
    for (std::size_t d = 0; d < dim; ++d) {
      for (std::size_t tau = 0; tau < kHistoryFrames; ++tau) {
        gwh[d * kHistoryFrames + tau] += g * trace.input[tau * dim + d];
      }
    }
  }
}

CodeIndex argmax_index(std::span<const double> probs) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < probs.size(); ++k) {
    if (probs[k] > probs[best]) best = k;
  }
  return static_cast<CodeIndex>(best);
}

CodeIndex predict_index(const PlcModel& model, const HistoryWindow& window) {
  return argmax_index(forward(model, window));
}

AdamState::AdamState(const PlcModel& model, double lr_, double beta1_, double beta2_,
                     double eps_)
    : lr(lr_),
      beta1(beta1_),
      beta2(beta2_),
      eps(eps_),
      m(model.parameters().size(), 0.0),
      v(model.parameters().size(), 0.0) {}

void adam_step(PlcModel& model, const PlcModel& grads, AdamState& state) {
  auto params = model.parameters();
  const auto g = grads.parameters();
  if (g.size() != params.size() || state.m.size() != params.size()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g[i])) {
      throw NonFiniteGradient("non-finite gradient at parameter " + std::to_string(i));
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g[i] * g[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

std::vector<LossPoint> train_teacher_forcing(PlcModel& model, const Codebook& codebook,
                                             const std::vector<std::vector<CodeIndex>>& sequences,
                                             const PlcTrainOptions& options) {
  if (sequences.empty()) throw std::invalid_argument("train_teacher_forcing: empty corpus");
  if (codebook.dim() != model.dim()) {
    throw std::invalid_argument("train_teacher_forcing: codebook/model dimension mismatch");
  }
  if (options.batch_size == 0) throw std::invalid_argument("batch size must be positive");
  // prefix[i] = number of training windows in sequences[0..i).
  std::vector<std::size_t> prefix{0};
  for (const auto& seq : sequences) {
    if (seq.size() < kHistoryFrames + 1) {
      throw std::invalid_argument("training sequences must be at least 8 frames long");
    }
    prefix.push_back(prefix.back() + seq.size() - kHistoryFrames);
  }

  const std::size_t dim = model.dim();
  AdamState adam(model, options.lr);
  Rng rng(options.seed);
  std::vector<LossPoint> curve;
  std::vector<CodeIndex> targets(options.batch_size);
  for (std::size_t it = 1; it <= options.iterations; ++it) {
    VectorSet windows(dim * kHistoryFrames);
    windows.reserve(options.batch_size);
    Vec window(dim * kHistoryFrames);
    for (std::size_t b = 0; b < options.batch_size; ++b) {
      const std::size_t pick = rng.below(prefix.back());
      const auto s = static_cast<std::size_t>(
          std::upper_bound(prefix.begin(), prefix.end(), pick) - prefix.begin() - 1);
      const std::size_t pos = pick - prefix[s] + kHistoryFrames;
      const auto& seq = sequences[s];
      for (std::size_t tau = 0; tau < kHistoryFrames; ++tau) {
        const auto row = codebook.row(seq[pos - kHistoryFrames + tau]);
        std::copy(row.begin(), row.end(), window.begin() + static_cast<std::ptrdiff_t>(tau * dim));
      }
      windows.push_back(window);
      targets[b] = seq[pos];
    }
    kernels::BatchLoss batch = kernels::omp::batch_loss_and_grad(model, windows, targets);
    const double scale = 1.0 / static_cast<double>(options.batch_size);
    for (double& g : batch.grads.parameters()) g *= scale;
    const double mean_nll = batch.loss_sum * scale;
    if (!std::isfinite(mean_nll)) throw NonFiniteGradient("non-finite training loss");
    adam_step(model, batch.grads, adam);
    if (it % options.log_every == 0 || it == 1 || it == options.iterations) {
      curve.push_back({it, mean_nll});
    }
  }
  return curve;
}

std::vector<std::vector<CodeIndex>> split_sequences(std::span<const CodeIndex> stream,
                                                    std::size_t length) {
  if (length < kHistoryFrames + 1) throw std::invalid_argument("sequence length below 8 frames");
  std::vector<std::vector<CodeIndex>> out;
  for (std::size_t start = 0; start < stream.size(); start += length) {
    const std::size_t stop = std::min(stream.size(), start + length);
    if (stop - start < kHistoryFrames + 1) break;
    out.emplace_back(stream.begin() + static_cast<std::ptrdiff_t>(start),
                     stream.begin() + static_cast<std::ptrdiff_t>(stop));
  }
  return out;
}

ComplexityReport complexity_report(std::size_t dim, std::size_t hidden) {
  if (dim == 0 || hidden == 0) throw std::invalid_argument("degenerate PLC model shape");
  ComplexityReport r;
  r.param_count = dim * hidden * kHistoryFrames + hidden + 2 * (hidden * hidden + hidden) +
                  hidden * kCodebookSize + kCodebookSize;
  r.macs_per_frame =
      dim * hidden * kHistoryFrames + 2 * hidden * hidden + hidden * kCodebookSize;
  r.flops_per_frame = 2.0 * static_cast<double>(r.macs_per_frame);
  r.flops_per_second = r.flops_per_frame * (1000.0 / kFrameMs);
  return r;
}

ComplexityReport complexity_report(const PlcModel& model) {
  return complexity_report(model.dim(), model.hidden());
}

void write_model(std::ostream& out, const PlcModel& model) {
  binio::write_magic(out, kModelMagic);
  binio::write_u32(out, static_cast<std::uint32_t>(model.dim()));
  binio::write_u32(out, static_cast<std::uint32_t>(model.hidden()));
  for (double v : model.parameters()) binio::write_f32(out, v);
  if (!out) throw std::runtime_error("model write failed");
}

PlcModel read_model(std::istream& in) {
  binio::expect_magic(in, kModelMagic);
  const std::uint32_t dim = binio::read_u32(in);
  const std::uint32_t hidden = binio::read_u32(in);
  if (dim == 0 || dim > 4096 || hidden == 0 || hidden > 8192) {
    throw std::runtime_error("model file header out of range");
  }
  PlcModel model(dim, hidden);
  for (double& v : model.parameters()) v = binio::read_f32(in);
  return model;
}

void write_loss_curve_csv(std::ostream& out, std::span<const LossPoint> curve) {
  out << "iteration,mean_nll\n";
  char buf[64];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g\n", p.iteration, p.mean_nll);
    out << buf;
  }
}

}  // namespace latres
