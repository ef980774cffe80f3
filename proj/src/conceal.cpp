#include "latres/conceal.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <string>

namespace latres {

VoicingClass label_frame(std::span<const double> samples) {
  if (samples.empty()) return VoicingClass::kSilence;
  const double rms = std::sqrt(squared_norm(samples) / static_cast<double>(samples.size()));
  if (rms < kSilenceRms) return VoicingClass::kSilence;
  return zero_crossing_rate(samples) < kVoicedMaxZcr ? VoicingClass::kVoiced
                                                     : VoicingClass::kUnvoiced;
}

double zero_crossing_rate(std::span<const double> samples) {
  if (samples.size() < 2) return 0.0;
  std::size_t crossings = 0;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if ((samples[i - 1] >= 0.0) != (samples[i] >= 0.0)) ++crossings;
  }
  return static_cast<double>(crossings) / static_cast<double>(samples.size() - 1);
}

IndexClassMap build_class_map(std::span<const CodeIndex> indices,
                              std::span<const VoicingClass> labels) {
  if (indices.empty()) throw std::invalid_argument("build_class_map: empty corpus");
  if (indices.size() != labels.size()) {
    throw std::invalid_argument("build_class_map: index/label count mismatch");
  }
  std::array<std::array<std::size_t, 3>, kCodebookSize> votes{};
  for (std::size_t i = 0; i < indices.size(); ++i) {
    ++votes[indices[i]][static_cast<std::size_t>(labels[i])];
  }
  IndexClassMap map;
  for (std::size_t k = 0; k < kCodebookSize; ++k) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < 3; ++c) {
      if (votes[k][c] > votes[k][best]) best = c;
    }
    map[k] = static_cast<VoicingClass>(best);
  }
  return map;
}

void write_class_map(std::ostream& out, const IndexClassMap& map) {
  for (std::size_t k = 0; k < kCodebookSize; ++k) out << k << ',' << to_string(map[k]) << '\n';
}

IndexClassMap read_class_map(std::istream& in) {
  IndexClassMap map{};
  std::array<bool, kCodebookSize> seen{};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw ParseError("class map line " + std::to_string(line_no) + ": expected index,label",
                       line_no);
    }
    std::size_t idx = 0;
    try {
      idx = std::stoul(line.substr(0, comma));
      if (idx >= kCodebookSize) throw std::out_of_range("index");
      map[idx] = parse_voicing_class(line.substr(comma + 1));
    } catch (const std::exception& e) {
      throw ParseError("class map line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
    seen[idx] = true;
  }
  for (std::size_t k = 0; k < kCodebookSize; ++k) {
    if (!seen[k]) throw ParseError("class map has no label for index " + std::to_string(k), 0);
  }
  return map;
}

Requantized requantize(std::span<const CodeIndex> stage_indices, const ResidualVq& rvq,
                       const Codebook& distilled) {
  if (stage_indices.size() < 2) throw std::invalid_argument("requantize needs 2 stage indices");
  const Vec sum = rvq.decode(stage_indices.first(2));
  auto match = quantize_stage(sum, distilled);
  return {match.index, std::move(match.codevector)};
}

CodeIndex silence_index(const Codebook& distilled) {
  const Vec zero(distilled.dim(), 0.0);
  return nearest_index(zero, distilled);
}

std::size_t burst_limit(const ConcealConfig& config, VoicingClass c) {
  switch (c) {
    case VoicingClass::kVoiced:
      return config.voiced_limit;
    case VoicingClass::kUnvoiced:
      return config.unvoiced_limit;
    case VoicingClass::kSilence:
      return config.silence_limit;
  }
  return config.silence_limit;
}

ConcealState::ConcealState(const Codebook& distilled)
    : history(distilled.dim(), distilled.row(silence_index(distilled))),
      silence(silence_index(distilled)) {
  const auto row = distilled.row(silence);
  last_output.assign(row.begin(), row.end());
}

std::string_view to_string(ConcealAction a) {
  switch (a) {
    case ConcealAction::kReceived:
      return "received";
    case ConcealAction::kFecRecovered:
      return "fec";
    case ConcealAction::kPredicted:
      return "predicted";
    case ConcealAction::kSilence:
      return "silence";
    case ConcealAction::kZeroFilled:
      return "zero_filled";
  }
  return "silence";
}

ConcealStep requantize_received(ConcealState& state, std::span<const CodeIndex> stage_indices,
                                const ResidualVq& rvq, const Codebook& distilled,
                                const IndexClassMap& class_map) {
  Requantized r = requantize(stage_indices, rvq, distilled);
  state.history.push(r.codevector);
  state.burst_len = 0;
  state.last_class = class_map[r.index];
  ConcealStep step;
  step.action = ConcealAction::kReceived;
  step.index = r.index;
  step.latent = rvq.decode(stage_indices);
  state.last_output = step.latent;
  return step;
}

ConcealStep apply_fec(ConcealState& state, std::size_t distilled_index,
                      const Codebook& distilled, const IndexClassMap& class_map) {
  if (distilled_index >= kCodebookSize) throw std::out_of_range("distilled index out of range");
  const auto row = distilled.row(distilled_index);
  state.history.push(row);
  state.burst_len = 0;
  state.last_class = class_map[distilled_index];
  ConcealStep step;
  step.action = ConcealAction::kFecRecovered;
  step.index = static_cast<CodeIndex>(distilled_index);
  step.latent.assign(row.begin(), row.end());
  state.last_output = step.latent;
  return step;
}

ConcealStep conceal_frame(ConcealState& state, const PlcModel* model, const Codebook& distilled,
                          const IndexClassMap* class_map, const ConcealConfig& config) {
  if (model == nullptr) throw std::invalid_argument("conceal_frame: no PLC model");
  if (class_map == nullptr) throw std::invalid_argument("conceal_frame: no class map");
  ConcealStep step;
  if (state.burst_len < burst_limit(config, state.last_class)) {
    step.probs = forward(*model, state.history);
    step.index = argmax_index(step.probs);
    step.action = ConcealAction::kPredicted;
    const auto row = distilled.row(step.index);
    step.latent.assign(row.begin(), row.end());
    state.history.push(row);
  } else {
    const auto silence_row = distilled.row(state.silence);
    step.action = ConcealAction::kSilence;
    step.index = state.silence;
    const bool first_after_limit = state.burst_len == burst_limit(config, state.last_class);
    if (config.fade_to_silence && first_after_limit) {
      step.latent.resize(silence_row.size());
      for (std::size_t d = 0; d < silence_row.size(); ++d) {
        step.latent[d] = 0.5 * (state.last_output[d] + silence_row[d]);
      }
    } else {
      step.latent.assign(silence_row.begin(), silence_row.end());
    }
    state.history.push(silence_row);
  }
  ++state.burst_len;
  step.burst_len = state.burst_len;
  state.last_output = step.latent;
  return step;
}

VectorSet zero_fill_baseline(std::span<const FrameOutcome> outcomes, const ResidualVq& rvq) {
  const Vec zero(rvq.dim(), 0.0);
  const auto silent_indices = rvq.encode(zero, rvq.num_stages());
  const Vec silent = rvq.decode(silent_indices);
  VectorSet latents(rvq.dim());
  latents.reserve(outcomes.size());
  for (const auto& o : outcomes) {
    if (o.kind == OutcomeKind::kReceived) {
      latents.push_back(rvq.decode(std::span<const CodeIndex>(o.primary).first(rvq.num_stages())));
    } else {
      latents.push_back(silent);
    }
  }
  return latents;
}

void write_conceal_log_csv(std::ostream& out, std::span<const ConcealEvent> events) {
  out << "frame_n,action,index,burst_len\n";
  for (const auto& e : events) {
    out << e.frame_n << ',' << to_string(e.action) << ',' << static_cast<int>(e.index) << ','
        << e.burst_len << '\n';
  }
}

}  // namespace latres
