#include "latres/vq.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "binio.hpp"
#include "latres/kernels.hpp"

namespace latres {

namespace {

constexpr std::string_view kRvqMagic = "LVQ1";
constexpr std::string_view kDistilledMagic = "LVQD";

void check_dim(std::size_t got, std::size_t want) {
  if (got != want) {
    throw std::invalid_argument("dimension mismatch: got " + std::to_string(got) +
                                ", expected " + std::to_string(want));
  }
}

void write_stages(std::ostream& out, std::string_view magic,
                  std::span<const Codebook* const> stages) {
  binio::write_magic(out, magic);
  binio::write_u32(out, static_cast<std::uint32_t>(stages.size()));
  binio::write_u32(out, static_cast<std::uint32_t>(stages.front()->dim()));
  binio::write_u32(out, static_cast<std::uint32_t>(kCodebookSize));
  for (const Codebook* cb : stages) {
    for (double v : cb->values()) binio::write_f32(out, v);
  }
  if (!out) throw std::runtime_error("codebook write failed");
}

std::vector<Codebook> read_stages(std::istream& in, std::string_view magic) {
  binio::expect_magic(in, magic);
  const std::uint32_t n_stages = binio::read_u32(in);
  const std::uint32_t dim = binio::read_u32(in);
  const std::uint32_t entries = binio::read_u32(in);
  if (entries != kCodebookSize) {
    throw std::runtime_error("codebook file has " + std::to_string(entries) +
                             " entries per stage, expected 256");
  }
  if (n_stages == 0 || n_stages > kMaxStages || dim == 0 || dim > 4096) {
    throw std::runtime_error("codebook file header out of range");
  }
  std::vector<Codebook> stages;
  for (std::uint32_t s = 0; s < n_stages; ++s) {
    Vec rows(kCodebookSize * dim);
    for (double& v : rows) v = binio::read_f32(in);
    stages.emplace_back(dim, std::move(rows));
  }
  return stages;
}

}  // namespace

Codebook::Codebook(std::size_t dim) : dim_(dim), rows_(kCodebookSize * dim, 0.0) {
  if (dim == 0) throw std::invalid_argument("codebook dimension must be positive");
}

Codebook::Codebook(std::size_t dim, Vec rows) : dim_(dim), rows_(std::move(rows)) {
  if (dim == 0) throw std::invalid_argument("codebook dimension must be positive");
  if (rows_.size() != kCodebookSize * dim) {
    throw std::invalid_argument("codebook must have exactly 256 rows");
  }
  if (!all_finite()) throw std::invalid_argument("codebook contains non-finite values");
}

bool Codebook::all_finite() const {
  return std::all_of(rows_.begin(), rows_.end(), [](double v) { return std::isfinite(v); });
}

CodeIndex nearest_index(std::span<const double> latent, const Codebook& codebook) {
  check_dim(latent.size(), codebook.dim());
  std::size_t best = 0;
  double best_d = squared_distance(latent, codebook.row(0));
  for (std::size_t i = 1; i < kCodebookSize; ++i) {
    const double d = squared_distance(latent, codebook.row(i));
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return static_cast<CodeIndex>(best);
}

StageMatch quantize_stage(std::span<const double> latent, const Codebook& codebook) {
  const CodeIndex idx = nearest_index(latent, codebook);
  const auto row = codebook.row(idx);
  return {idx, Vec(row.begin(), row.end())};
}

ResidualVq::ResidualVq(std::vector<Codebook> stages) : stages_(std::move(stages)) {
  if (stages_.empty() || stages_.size() > kMaxStages) {
    throw std::invalid_argument("residual VQ needs 1..4 stages");
  }
  dim_ = stages_.front().dim();
  for (const auto& cb : stages_) check_dim(cb.dim(), dim_);
}

std::vector<CodeIndex> ResidualVq::encode(std::span<const double> latent,
                                          std::size_t n_stages) const {
  check_dim(latent.size(), dim_);
  if (n_stages < 1 || n_stages > stages_.size()) {
    throw std::out_of_range("n_stages out of range");
  }
  Vec residual(latent.begin(), latent.end());
  std::vector<CodeIndex> indices;
  indices.reserve(n_stages);
  for (std::size_t s = 0; s < n_stages; ++s) {
    const CodeIndex idx = nearest_index(residual, stages_[s]);
    const auto row = stages_[s].row(idx);
    for (std::size_t d = 0; d < dim_; ++d) residual[d] -= row[d];
    indices.push_back(idx);
  }
  return indices;
}

Vec ResidualVq::decode(std::span<const CodeIndex> indices) const {
  if (indices.empty() || indices.size() > stages_.size()) {
    throw std::out_of_range("index count does not match stage count");
  }
  Vec out(dim_, 0.0);
  for (std::size_t s = 0; s < indices.size(); ++s) {
    const auto row = stages_[s].row(indices[s]);
    for (std::size_t d = 0; d < dim_; ++d) out[d] += row[d];
  }
  return out;
}

EmaState::EmaState(const Codebook& init, EmaParams p)
    : params(p),
      cluster_size(kCodebookSize, 1.0),
      cluster_sum(init.values().begin(), init.values().end()) {
  if (!(p.decay > 0.0 && p.decay < 1.0)) throw std::invalid_argument("EMA decay must be in (0,1)");
}

std::size_t ema_update(EmaState& state, Codebook& codebook, const VectorSet& batch,
                       std::span<const CodeIndex> assignments, Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("ema_update: empty batch");
  if (assignments.size() != batch.size()) {
    throw std::invalid_argument("ema_update: assignment count does not match batch");
  }
  const std::size_t dim = codebook.dim();
  check_dim(batch.dim(), dim);

  Vec counts(kCodebookSize, 0.0);
  Vec sums(kCodebookSize * dim, 0.0);
  for (std::size_t n = 0; n < batch.size(); ++n) {
    const std::size_t k = assignments[n];
    counts[k] += 1.0;
    const auto x = batch.row(n);
    for (std::size_t d = 0; d < dim; ++d) sums[k * dim + d] += x[d];
  }

  const double decay = state.params.decay;
  std::size_t reseeded = 0;
  for (std::size_t k = 0; k < kCodebookSize; ++k) {
    if (state.frozen[k]) continue;
    state.cluster_size[k] = decay * state.cluster_size[k] + (1.0 - decay) * counts[k];
    for (std::size_t d = 0; d < dim; ++d) {
      double& s = state.cluster_sum[k * dim + d];
      s = decay * s + (1.0 - decay) * sums[k * dim + d];
    }
    if (state.cluster_size[k] < state.params.dead_threshold) {
      const auto x = batch.row(rng.below(batch.size()));
      state.cluster_size[k] = 1.0;
      std::copy(x.begin(), x.end(), state.cluster_sum.begin() + static_cast<std::ptrdiff_t>(k * dim));
      ++reseeded;
    }
    const double norm = std::max(state.cluster_size[k], state.params.epsilon);
    auto row = codebook.row(k);
    for (std::size_t d = 0; d < dim; ++d) row[d] = state.cluster_sum[k * dim + d] / norm;
  }
  return reseeded;
}

Codebook sample_initial_codebook(const VectorSet& data, Rng& rng) {
  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto lex_less = [&](std::size_t a, std::size_t b) {
    const auto ra = data.row(a);
    const auto rb = data.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  };
  std::stable_sort(order.begin(), order.end(), lex_less);
  // Multiplicity of each distinct row, credited to its first occurrence
  // (stable_sort keeps that one at the head of its run).
  std::vector<std::size_t> weight(n, 0);
  for (std::size_t i = 0, first = 0; i < n; ++i) {
    if (i == 0 || lex_less(order[i - 1], order[i])) first = order[i];
    ++weight[first];
  }

  // Weighted reservoir (key u^(1/w), largest keys kept): without duplicates
  // every row has weight 1 and this is a plain uniform sample.
  using Keyed = std::pair<double, std::size_t>;
  std::vector<Keyed> heap;  // min-heap on key
  heap.reserve(kCodebookSize + 1);
  auto greater = [](const Keyed& x, const Keyed& y) { return x.first > y.first; };
  for (std::size_t i = 0; i < n; ++i) {
    if (weight[i] == 0) continue;
    const double key = std::log(1.0 - rng.uniform()) / static_cast<double>(weight[i]);
    if (heap.size() < kCodebookSize) {
      heap.emplace_back(key, i);
      std::push_heap(heap.begin(), heap.end(), greater);
    } else if (key > heap.front().first) {
      std::pop_heap(heap.begin(), heap.end(), greater);
      heap.back() = {key, i};
      std::push_heap(heap.begin(), heap.end(), greater);
    }
  }
  std::vector<std::size_t> reservoir;
  for (const auto& [key, i] : heap) reservoir.push_back(i);
  std::sort(reservoir.begin(), reservoir.end());
  if (reservoir.size() < kCodebookSize) {
    throw std::invalid_argument("need at least 256 distinct training vectors, got " +
                                std::to_string(reservoir.size()));
  }
  Vec rows;
  rows.reserve(kCodebookSize * data.dim());
  for (std::size_t i : reservoir) {
    const auto r = data.row(i);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  return Codebook(data.dim(), std::move(rows));
}

double codebook_distortion(const Codebook& codebook, const VectorSet& data) {
  if (data.empty()) return 0.0;
  return kernels::omp::quantization_error(codebook, data) / static_cast<double>(data.size());
}

Codebook train_codebook(const VectorSet& data, const VqTrainOptions& options, bool pin_zero_row,
                        std::vector<double>* curve) {
  if (options.batch_size == 0) throw std::invalid_argument("batch size must be positive");
  Rng rng(options.seed);
  Codebook codebook = sample_initial_codebook(data, rng);
  EmaState state(codebook, options.ema);
  if (pin_zero_row) {
    std::fill(codebook.row(0).begin(), codebook.row(0).end(), 0.0);
    std::fill(state.cluster_sum.begin(), state.cluster_sum.begin() + static_cast<std::ptrdiff_t>(data.dim()), 0.0);
    state.frozen[0] = true;
  }

  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<CodeIndex> assignments;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
    for (std::size_t start = 0; start < n; start += options.batch_size) {
      const std::size_t stop = std::min(n, start + options.batch_size);
      VectorSet batch(data.dim());
      batch.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) batch.push_back(data.row(order[i]));
      assignments.assign(batch.size(), 0);
      kernels::omp::assign_nearest(codebook, batch, assignments);
      ema_update(state, codebook, batch, assignments, rng);
    }
    if (curve) curve->push_back(codebook_distortion(codebook, data));
  }
  return codebook;
}

ResidualVq train_rvq(const VectorSet& latents, std::size_t n_stages,
                     const VqTrainOptions& options,
                     std::vector<std::vector<double>>* curves) {
  if (n_stages < 1 || n_stages > kMaxStages) throw std::out_of_range("n_stages out of range");
  std::vector<Codebook> stages;
  VectorSet residual = latents;
  std::vector<CodeIndex> assignments(latents.size());
  for (std::size_t s = 0; s < n_stages; ++s) {
    VqTrainOptions stage_options = options;
    stage_options.seed = options.seed + 7919 * s;
    std::vector<double> curve;
    Codebook cb = train_codebook(residual, stage_options, /*pin_zero_row=*/true, &curve);
    if (curves) curves->push_back(std::move(curve));
    kernels::omp::assign_nearest(cb, residual, assignments);
    for (std::size_t i = 0; i < residual.size(); ++i) {
      auto r = residual.row(i);
      const auto c = cb.row(assignments[i]);
      for (std::size_t d = 0; d < r.size(); ++d) r[d] -= c[d];
    }
    stages.push_back(std::move(cb));
  }
  return ResidualVq(std::move(stages));
}

VectorSet distillation_targets(const ResidualVq& rvq, const VectorSet& latents) {
  if (rvq.num_stages() < 2) throw std::invalid_argument("distillation needs at least 2 stages");
  check_dim(latents.dim(), rvq.dim());
  VectorSet targets(rvq.dim());
  targets.reserve(latents.size());
  for (std::size_t i = 0; i < latents.size(); ++i) {
    const auto idx = rvq.encode(latents.row(i), 2);
    targets.push_back(rvq.decode(idx));
  }
  return targets;
}

DistilledCodebook distill_codebook(const ResidualVq& rvq, const VectorSet& latents,
                                   const VqTrainOptions& options, std::vector<double>* curve) {
  const VectorSet targets = distillation_targets(rvq, latents);
  if (targets.size() < kCodebookSize) {
    throw std::invalid_argument("distillation corpus smaller than 256 targets");
  }
  return {train_codebook(targets, options, /*pin_zero_row=*/false, curve)};
}

void write_rvq(std::ostream& out, const ResidualVq& rvq) {
  std::vector<const Codebook*> stages;
  for (std::size_t s = 0; s < rvq.num_stages(); ++s) stages.push_back(&rvq.stage(s));
  write_stages(out, kRvqMagic, stages);
}

ResidualVq read_rvq(std::istream& in) { return ResidualVq(read_stages(in, kRvqMagic)); }

void write_distilled(std::ostream& out, const DistilledCodebook& distilled) {
  const Codebook* stage = &distilled.codebook;
  write_stages(out, kDistilledMagic, std::span<const Codebook* const>(&stage, 1));
}

DistilledCodebook read_distilled(std::istream& in) {
  auto stages = read_stages(in, kDistilledMagic);
  if (stages.size() != 1) throw std::runtime_error("distilled codebook file must have 1 stage");
  return {std::move(stages.front())};
}

}  // namespace latres
