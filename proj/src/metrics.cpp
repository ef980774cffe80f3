#include "latres/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "json.hpp"

namespace latres {

double snr_db(std::span<const double> reference, std::span<const double> test) {
  if (reference.size() != test.size()) throw std::invalid_argument("snr_db: length mismatch");
  double signal = 0.0, noise = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    signal += reference[i] * reference[i];
    const double e = reference[i] - test[i];
    noise += e * e;
  }
  if (signal <= 0.0) throw std::invalid_argument("snr_db: zero-energy reference");
  if (noise <= 0.0) return kSnrCapDb;
  return std::min(kSnrCapDb, 10.0 * std::log10(signal / noise));
}

double concealed_region_snr_db(std::span<const double> reference, std::span<const double> test,
                               std::span<const FrameOutcome> outcomes) {
  if (reference.size() != test.size() || reference.size() < outcomes.size() * kFrameSamples) {
    throw std::invalid_argument("concealed_region_snr_db: length mismatch");
  }
  std::vector<bool> in_region(outcomes.size(), false);
  for (std::size_t n = 0; n < outcomes.size(); ++n) {
    if (outcomes[n].kind != OutcomeKind::kReceived) {
      in_region[n] = true;
      if (n + 1 < outcomes.size()) in_region[n + 1] = true;
    }
  }
  Vec ref, tst;
  for (std::size_t n = 0; n < outcomes.size(); ++n) {
    if (!in_region[n]) continue;
    ref.insert(ref.end(), reference.begin() + static_cast<std::ptrdiff_t>(n * kFrameSamples),
               reference.begin() + static_cast<std::ptrdiff_t>((n + 1) * kFrameSamples));
    tst.insert(tst.end(), test.begin() + static_cast<std::ptrdiff_t>(n * kFrameSamples),
               test.begin() + static_cast<std::ptrdiff_t>((n + 1) * kFrameSamples));
  }
  if (ref.empty() || squared_norm(ref) == 0.0) return kSnrCapDb;
  return snr_db(ref, tst);
}

PredictionMetrics prediction_metrics(std::span<const Vec> distributions,
                                     std::span<const CodeIndex> predicted,
                                     std::span<const CodeIndex> truth) {
  if (distributions.size() != truth.size() || predicted.size() != truth.size()) {
    throw std::invalid_argument("prediction_metrics: length mismatch");
  }
  PredictionMetrics m;
  m.count = truth.size();
  if (truth.empty()) return m;
  std::size_t hits = 0;
  double nll = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    hits += predicted[i] == truth[i] ? 1 : 0;
    nll += nll_loss(distributions[i], truth[i]);
  }
  m.top1_accuracy = static_cast<double>(hits) / static_cast<double>(truth.size());
  m.mean_nll = nll / static_cast<double>(truth.size());
  return m;
}

std::string fingerprint(std::string_view canonical_text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : canonical_text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string report_to_json(const RunReport& r) {
  nlohmann::ordered_json j;
  j["condition"] = r.condition;
  j["config_fingerprint"] = r.config_fingerprint;
  j["frames"] = r.frames;
  j["overall_snr_db"] = r.overall_snr_db;
  j["concealed_region_snr_db"] = r.concealed_region_snr_db;
  j["snr_reference"] = "clean-channel decode; perceptual metrics are not computed";
  j["outcome_counts"] = {{"received", r.outcome_counts.received},
                         {"fec_recovered", r.outcome_counts.fec_recovered},
                         {"concealed", r.outcome_counts.concealed},
                         {"late_drops", r.outcome_counts.late_drops}};
  if (r.prediction) {
    j["prediction"] = {{"count", r.prediction->count},
                       {"top1_accuracy", r.prediction->top1_accuracy},
                       {"mean_nll", r.prediction->mean_nll}};
  } else {
    j["prediction"] = nullptr;
  }
  if (r.fec) {
    j["fec"] = {{"k", r.fec->k}, {"redundant_bps", r.fec->redundant_bps}};
  }
  j["plc_complexity"] = {{"param_count", r.complexity.param_count},
                         {"macs_per_frame", r.complexity.macs_per_frame},
                         {"flops_per_frame", r.complexity.flops_per_frame},
                         {"mflops", r.complexity.flops_per_second / 1e6}};
  return j.dump(2) + "\n";
}

}  // namespace latres
