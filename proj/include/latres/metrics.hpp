#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "latres/common.hpp"
#include "latres/jbm.hpp"
#include "latres/plcnet.hpp"

namespace latres {

inline constexpr double kSnrCapDb = 99.0;

// 10*log10(sum ref^2 / sum (ref-test)^2), capped at 99 dB.
double snr_db(std::span<const double> reference, std::span<const double> test);

// SNR over frames whose outcome is not kReceived, each extended by one
// trailing frame. 99 dB when there are no such frames.
double concealed_region_snr_db(std::span<const double> reference, std::span<const double> test,
                               std::span<const FrameOutcome> outcomes);

struct PredictionMetrics {
  std::size_t count = 0;
  double top1_accuracy = 0.0;
  double mean_nll = 0.0;
};

// distributions[i] is the predictor output for the frame whose true index is
// truth[i]; predicted[i] is the index actually used.
PredictionMetrics prediction_metrics(std::span<const Vec> distributions,
                                     std::span<const CodeIndex> predicted,
                                     std::span<const CodeIndex> truth);

struct FecSection {
  unsigned k = 0;
  std::uint32_t redundant_bps = 0;
};

struct RunReport {
  std::string condition;
  double overall_snr_db = 0.0;
  double concealed_region_snr_db = 0.0;
  std::optional<PredictionMetrics> prediction;  // absent when nothing was predicted
  BufferStats outcome_counts;
  std::size_t frames = 0;
  std::optional<FecSection> fec;  // absent when k == 0
  ComplexityReport complexity;
  std::string config_fingerprint;
};

// Stable 64-bit FNV-1a, rendered as 16 hex digits.
std::string fingerprint(std::string_view canonical_text);

std::string report_to_json(const RunReport& report);

}  // namespace latres
