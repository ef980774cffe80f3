#pragma once

// End-to-end orchestration: corpus generation, training stages, and the
// encode -> packetize -> channel -> jitter buffer -> conceal -> decode
// simulation for the zero-fill, PLC-only and PLC+FEC conditions.

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "latres/bitstream.hpp"
#include "latres/channel.hpp"
#include "latres/conceal.hpp"
#include "latres/corpus.hpp"
#include "latres/jbm.hpp"
#include "latres/metrics.hpp"
#include "latres/plcnet.hpp"
#include "latres/toycodec.hpp"
#include "latres/vq.hpp"

namespace latres {

struct Config {
  std::uint64_t seed = 1;
  std::size_t dim = 16;
  std::size_t hidden = 256;
  std::size_t stages = 4;
  unsigned fec_k = kDefaultFecOffset;
  double playout_delay_ms = 100.0;

  std::string trace_file;  // empty: generate from `channel`
  std::string channel_preset = "profile10";
  GilbertElliottParams channel = channel_preset_params();
  std::size_t runs = 1;

  CorpusParams corpus;
  double test_seconds = 20.0;

  std::size_t vq_epochs = 10;
  std::size_t vq_batch = 512;
  double ema_decay = 0.99;
  std::size_t distill_epochs = 10;

  double plc_lr = 1e-4;
  std::size_t plc_batch = 128;
  std::size_t plc_iterations = 20000;
  std::size_t plc_sequence_frames = 200;

  ConcealConfig conceal;

  std::filesystem::path out_dir = "out";

  // One "key=value" line per field, fixed order, fixed float formatting.
  std::string canonical() const;
  std::string fingerprint() const;

  static GilbertElliottParams channel_preset_params() { return latres::channel_preset("profile10"); }
};

struct Models {
  AnalysisTransform transform{16};
  ResidualVq rvq;
  DistilledCodebook distilled;
  IndexClassMap class_map{};
  PlcModel plc;
};

// Distilled index of every frame of a latent stream, computed the same way
// the sender and the concealment history do.
std::vector<CodeIndex> distilled_stream(const Models& models, const VectorSet& latents);

enum class Condition { kZeroFill, kPlcOnly, kPlcFec };
std::string_view to_string(Condition c);

struct StreamSettings {
  unsigned fec_k = kDefaultFecOffset;
  double playout_delay_ms = 100.0;
  ConcealConfig conceal;
  std::string fingerprint;
};

struct ConditionRun {
  Condition condition = Condition::kZeroFill;
  RunReport report;
  std::vector<Packet> packets;
  std::vector<FrameOutcome> outcomes;
  std::vector<ConcealEvent> events;
  Vec decoded;
  Vec reference;  // clean-channel decode
};

ConditionRun run_condition(const Models& models, std::span<const double> signal,
                           const Trace& trace, Condition condition,
                           const StreamSettings& settings);

// Commands. Each reads its prerequisites from config.out_dir and writes its
// artifacts there; a missing prerequisite raises std::runtime_error naming
// the command that produces it.
struct GenDataResult {
  std::size_t corpus_frames = 0;
  std::size_t test_frames = 0;
  std::array<double, 3> class_fractions{};  // silence, voiced, unvoiced
};
GenDataResult cmd_gen_data(const Config& config);

struct TrainVqResult {
  std::vector<std::vector<double>> stage_curves;
  std::array<double, kMaxStages> stage_mse{};
};
TrainVqResult cmd_train_vq(const Config& config);

struct DistillResult {
  std::vector<double> curve;
  double distilled_mse = 0.0;
  double stage1_mse = 0.0;
};
DistillResult cmd_distill(const Config& config);

struct TrainPlcResult {
  std::vector<LossPoint> curve;
  ComplexityReport complexity;
};
TrainPlcResult cmd_train_plc(const Config& config);

struct SimulateResult {
  std::vector<RunReport> reports;                 // first run, one per condition
  std::array<double, 3> mean_overall_snr_db{};    // over all runs, per condition
};
SimulateResult cmd_simulate(const Config& config);

Models load_models(const Config& config);

// Artifact file names inside out_dir.
namespace artifacts {
inline constexpr const char* kCorpusWav = "corpus.wav";
inline constexpr const char* kCorpusLabels = "corpus_labels.csv";
inline constexpr const char* kTestWav = "test.wav";
inline constexpr const char* kTransform = "transform.bin";
inline constexpr const char* kRvq = "rvq.lvq";
inline constexpr const char* kVqCurve = "vq_curve.csv";
inline constexpr const char* kDistilled = "distilled.lvqd";
inline constexpr const char* kDistillCurve = "distill_curve.csv";
inline constexpr const char* kClassMap = "classmap.csv";
inline constexpr const char* kPlcModel = "plc.bin";
inline constexpr const char* kPlcCurve = "plc_loss.csv";
inline constexpr const char* kPackets = "packets.bin";
inline constexpr const char* kSummary = "summary.json";
}  // namespace artifacts

}  // namespace latres
