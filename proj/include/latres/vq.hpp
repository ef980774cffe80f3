#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "latres/common.hpp"
#include "latres/rng.hpp"

namespace latres {

// 256 code-vectors of dimension D, stored row-major.
class Codebook {
 public:
  Codebook() = default;
  explicit Codebook(std::size_t dim);  // all-zero rows
  Codebook(std::size_t dim, Vec rows);

  std::size_t dim() const { return dim_; }
  std::span<const double> row(std::size_t i) const { return {rows_.data() + i * dim_, dim_}; }
  std::span<double> row(std::size_t i) { return {rows_.data() + i * dim_, dim_}; }
  std::span<const double> values() const { return rows_; }

  bool all_finite() const;

 private:
  std::size_t dim_ = 0;
  Vec rows_;
};

struct StageMatch {
  CodeIndex index = 0;
  Vec codevector;
};

// Nearest row by squared Euclidean distance, lowest index on ties.
CodeIndex nearest_index(std::span<const double> latent, const Codebook& codebook);
StageMatch quantize_stage(std::span<const double> latent, const Codebook& codebook);

class ResidualVq {
 public:
  ResidualVq() = default;
  explicit ResidualVq(std::vector<Codebook> stages);

  std::size_t dim() const { return dim_; }
  std::size_t num_stages() const { return stages_.size(); }
  const Codebook& stage(std::size_t s) const { return stages_.at(s); }

  // Stage s quantizes what the previous stages left over.
  std::vector<CodeIndex> encode(std::span<const double> latent, std::size_t n_stages) const;
  Vec decode(std::span<const CodeIndex> indices) const;

 private:
  std::size_t dim_ = 0;
  std::vector<Codebook> stages_;
};

struct EmaParams {
  double decay = 0.99;
  double epsilon = 1e-5;
  double dead_threshold = 0.01;
};

// Running statistics behind an EMA-trained codebook. Row i of the codebook is
// always cluster_sum[i] / max(cluster_size[i], epsilon).
struct EmaState {
  EmaState(const Codebook& init, EmaParams params);

  EmaParams params;
  Vec cluster_size;             // kCodebookSize
  Vec cluster_sum;              // kCodebookSize x dim
  std::array<bool, kCodebookSize> frozen{};  // rows excluded from updates
};

// `batch` holds assignments.size() rows of dimension codebook.dim().
// Returns the number of dead rows that were re-seeded.
std::size_t ema_update(EmaState& state, Codebook& codebook, const VectorSet& batch,
                       std::span<const CodeIndex> assignments, Rng& rng);

struct VqTrainOptions {
  std::size_t epochs = 20;
  std::size_t batch_size = 512;
  EmaParams ema;
  std::uint64_t seed = 1;
};

// Sample 256 pairwise-distinct rows of `data` by reservoir sampling over the
// distinct rows in order of first appearance. Throws if fewer exist.
Codebook sample_initial_codebook(const VectorSet& data, Rng& rng);

// Mean squared error (per vector, summed over dimensions) of quantizing
// `data` with `codebook`.
double codebook_distortion(const Codebook& codebook, const VectorSet& data);

// EMA codebook training. `curve`, when given, receives the full-data
// distortion after every epoch. With pin_zero_row, row 0 stays the zero
// vector so quantizing with this stage can never increase the error.
Codebook train_codebook(const VectorSet& data, const VqTrainOptions& options,
                        bool pin_zero_row, std::vector<double>* curve = nullptr);

// Greedy stage-by-stage training on successive residuals; every stage pins
// row 0 to zero. `curves`, when given, receives one distortion curve per stage.
ResidualVq train_rvq(const VectorSet& latents, std::size_t n_stages,
                     const VqTrainOptions& options,
                     std::vector<std::vector<double>>* curves = nullptr);

struct DistilledCodebook {
  Codebook codebook;
};

// Sum of the stage-1 and stage-2 code-vectors chosen for each latent.
VectorSet distillation_targets(const ResidualVq& rvq, const VectorSet& latents);

DistilledCodebook distill_codebook(const ResidualVq& rvq, const VectorSet& latents,
                                   const VqTrainOptions& options,
                                   std::vector<double>* curve = nullptr);

// Binary codebook container, little-endian:
//   magic[4] ("LVQ1" or "LVQD"), u32 stages, u32 dim, u32 entries (256),
//   then stage-major, row-major f32 values.
void write_rvq(std::ostream& out, const ResidualVq& rvq);
ResidualVq read_rvq(std::istream& in);
void write_distilled(std::ostream& out, const DistilledCodebook& distilled);
DistilledCodebook read_distilled(std::istream& in);

}  // namespace latres
