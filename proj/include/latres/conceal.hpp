#pragma once

// Concealment in the distilled-code-vector domain: history upkeep,
// re-quantization of received frames, autoregressive prediction over bursts
// with voicing-dependent burst limits, FEC injection, and the zero-filled
// baseline.

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "latres/bitstream.hpp"
#include "latres/jbm.hpp"
#include "latres/plcnet.hpp"
#include "latres/vq.hpp"

namespace latres {

using IndexClassMap = std::array<VoicingClass, kCodebookSize>;

inline constexpr double kSilenceRms = 0.01;
inline constexpr double kVoicedMaxZcr = 0.15;

// Ground-truth frame label: silence below RMS 0.01, otherwise voiced when
// the zero-crossing rate is below 0.15 crossings per sample, else unvoiced.
VoicingClass label_frame(std::span<const double> samples);
double zero_crossing_rate(std::span<const double> samples);

// Majority vote of labels per distilled index; ties go to the lower class
// value, unseen indices are silence.
IndexClassMap build_class_map(std::span<const CodeIndex> indices,
                              std::span<const VoicingClass> labels);

void write_class_map(std::ostream& out, const IndexClassMap& map);
IndexClassMap read_class_map(std::istream& in);

struct Requantized {
  CodeIndex index = 0;
  Vec codevector;
};

// Nearest distilled code-vector to the sum of the stage-1 and stage-2
// code-vectors of a received frame.
Requantized requantize(std::span<const CodeIndex> stage_indices, const ResidualVq& rvq,
                       const Codebook& distilled);

// Distilled row nearest the zero latent.
CodeIndex silence_index(const Codebook& distilled);

struct ConcealConfig {
  std::size_t voiced_limit = 10;    // 100 ms
  std::size_t unvoiced_limit = 6;   // 60 ms
  std::size_t silence_limit = 6;
  bool fade_to_silence = false;     // one-frame linear fade after the limit
};

std::size_t burst_limit(const ConcealConfig& config, VoicingClass c);

struct ConcealState {
  explicit ConcealState(const Codebook& distilled);

  HistoryWindow history;
  std::size_t burst_len = 0;
  VoicingClass last_class = VoicingClass::kSilence;
  CodeIndex silence = 0;
  Vec last_output;
};

enum class ConcealAction : std::uint8_t { kReceived, kFecRecovered, kPredicted, kSilence, kZeroFilled };

std::string_view to_string(ConcealAction a);

struct ConcealStep {
  ConcealAction action = ConcealAction::kSilence;
  CodeIndex index = 0;       // distilled index (or stage-1 index for zero fill)
  std::size_t burst_len = 0; // burst length after this frame
  Vec latent;                // what goes to the decoder
  Vec probs;                 // predictor output, only for kPredicted
};

// Received frame: re-quantize into the history, reset the burst, remember
// the voicing class. The decoder gets the full residual-VQ reconstruction.
ConcealStep requantize_received(ConcealState& state, std::span<const CodeIndex> stage_indices,
                                const ResidualVq& rvq, const Codebook& distilled,
                                const IndexClassMap& class_map);

ConcealStep apply_fec(ConcealState& state, std::size_t distilled_index,
                      const Codebook& distilled, const IndexClassMap& class_map);

// Lost frame: predict while the burst is shorter than the limit for the
// last received class, then emit silence until the burst ends.
ConcealStep conceal_frame(ConcealState& state, const PlcModel* model, const Codebook& distilled,
                          const IndexClassMap* class_map, const ConcealConfig& config);

// Latent stream for the zero-filled baseline: frames that did not arrive
// decode the residual-VQ encoding of the zero latent.
VectorSet zero_fill_baseline(std::span<const FrameOutcome> outcomes, const ResidualVq& rvq);

struct ConcealEvent {
  std::uint64_t frame_n;
  ConcealAction action;
  CodeIndex index;
  std::size_t burst_len;
};

void write_conceal_log_csv(std::ostream& out, std::span<const ConcealEvent> events);

}  // namespace latres
