// latres: data generation, training and loss-simulation driver.
//
//   latres gen-data | train-vq | distill | train-plc | simulate
//   latres inspect-packet FILE [--seq N]
//
// Options may come before or after the subcommand, or from a key=value file
// given with --config. LATRES_OUT sets the default output directory.

#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "latres/pipeline.hpp"

namespace {

using namespace latres;

void print_report(const RunReport& r) {
  std::printf("%-10s snr=%7.3f dB  concealed-region=%7.3f dB  recv=%zu fec=%zu conc=%zu late=%zu",
              r.condition.c_str(), r.overall_snr_db, r.concealed_region_snr_db,
              r.outcome_counts.received, r.outcome_counts.fec_recovered,
              r.outcome_counts.concealed, r.outcome_counts.late_drops);
  if (r.prediction) {
    std::printf("  top1=%.3f nll=%.3f", r.prediction->top1_accuracy, r.prediction->mean_nll);
  }
  std::printf("\n");
}

int inspect(const std::string& file, std::optional<std::uint32_t> seq) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + file);
  const std::vector<Packet> packets = read_packet_stream(in);
  bool found = false;
  for (const Packet& p : packets) {
    if (seq && p.seq != *seq) continue;
    std::cout << dump_packet(p) << '\n';
    found = true;
  }
  if (seq && !found) throw std::runtime_error("seq " + std::to_string(*seq) + " not in " + file);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Config cfg;
  if (const char* env = std::getenv("LATRES_OUT")) cfg.out_dir = env;

  CLI::App app{"Latent-domain codec error-resilience simulator"};
  app.set_config("--config", "", "key=value config file");
  app.require_subcommand(1);
  app.fallthrough();

  std::string out_dir = cfg.out_dir.string();
  app.add_option("--out", out_dir, "Output directory (env LATRES_OUT)")->capture_default_str();
  app.add_option("--seed", cfg.seed, "Master seed")->capture_default_str();
  app.add_option("--dim", cfg.dim, "Latent dimension D")->capture_default_str();
  app.add_option("--hidden", cfg.hidden, "PLC hidden width H")->capture_default_str();
  app.add_option("--stages", cfg.stages, "Residual VQ stages S (1..4)")
      ->check(CLI::Range(1, 4))
      ->capture_default_str();
  app.add_option("--fec-k", cfg.fec_k, "FEC offset in frames (even, 0 disables)")
      ->capture_default_str();
  app.add_option("--playout-delay", cfg.playout_delay_ms, "Playout delay in ms")
      ->capture_default_str();
  app.add_option("--trace", cfg.trace_file, "Loss or delay-loss trace file");
  app.add_option("--channel", cfg.channel_preset,
                 "Gilbert-Elliott preset: profile10, burst120, burst320, burst1000")
      ->capture_default_str();
  auto* p_gb = app.add_option("--p-gb", cfg.channel.p_good_to_bad, "Override good->bad probability");
  auto* p_bg = app.add_option("--p-bg", cfg.channel.p_bad_to_good, "Override bad->good probability");
  auto* jitter = app.add_option("--jitter", cfg.channel.jitter_std_ms, "Override jitter std (ms)");
  auto* base = app.add_option("--base-delay", cfg.channel.base_delay_ms, "Override base delay (ms)");
  app.add_option("--runs", cfg.runs, "Seeded simulation runs")->capture_default_str();
  app.add_option("--corpus-seconds", cfg.corpus.seconds)->capture_default_str();
  app.add_option("--test-seconds", cfg.test_seconds)->capture_default_str();
  app.add_option("--voiced", cfg.corpus.voiced_fraction)->capture_default_str();
  app.add_option("--unvoiced", cfg.corpus.unvoiced_fraction)->capture_default_str();
  app.add_option("--silence", cfg.corpus.silence_fraction)->capture_default_str();
  app.add_option("--f0-min", cfg.corpus.f0_min_hz)->capture_default_str();
  app.add_option("--f0-max", cfg.corpus.f0_max_hz)->capture_default_str();
  app.add_option("--pitch-drift", cfg.corpus.max_pitch_drift)->capture_default_str();
  app.add_option("--phase-spread", cfg.corpus.phase_spread)->capture_default_str();
  app.add_option("--tilt-min", cfg.corpus.tilt_min)->capture_default_str();
  app.add_option("--tilt-max", cfg.corpus.tilt_max)->capture_default_str();
  app.add_option("--vq-epochs", cfg.vq_epochs)->capture_default_str();
  app.add_option("--vq-batch", cfg.vq_batch)->capture_default_str();
  app.add_option("--ema-decay", cfg.ema_decay)->capture_default_str();
  app.add_option("--distill-epochs", cfg.distill_epochs)->capture_default_str();
  app.add_option("--lr", cfg.plc_lr, "PLC Adam learning rate")->capture_default_str();
  app.add_option("--batch", cfg.plc_batch, "PLC batch size")->capture_default_str();
  app.add_option("--iterations", cfg.plc_iterations, "PLC training iterations")
      ->capture_default_str();
  app.add_option("--sequence-frames", cfg.plc_sequence_frames)->capture_default_str();
  app.add_option("--voiced-limit", cfg.conceal.voiced_limit)->capture_default_str();
  app.add_option("--unvoiced-limit", cfg.conceal.unvoiced_limit)->capture_default_str();
  app.add_option("--silence-limit", cfg.conceal.silence_limit)->capture_default_str();
  app.add_flag("--fade", cfg.conceal.fade_to_silence, "One-frame fade into silence");

  auto* gen = app.add_subcommand("gen-data", "Synthesize the training corpus and test signal");
  auto* tvq = app.add_subcommand("train-vq", "Fit the transform and train the residual VQ");
  auto* dst = app.add_subcommand("distill", "Train the distilled codebook and class map");
  auto* tplc = app.add_subcommand("train-plc", "Train the index predictor");
  auto* sim = app.add_subcommand("simulate", "Run zero-fill, PLC-only and PLC+FEC over a channel");
  auto* insp = app.add_subcommand("inspect-packet", "Dump packets from a packet stream file");
  std::string packet_file;
  std::optional<std::uint32_t> seq;
  insp->add_option("file", packet_file, "Packet stream file")->required()->check(CLI::ExistingFile);
  insp->add_option("--seq", seq, "Only this packet");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    cfg.out_dir = out_dir;
    const GilbertElliottParams overrides = cfg.channel;
    cfg.channel = channel_preset(cfg.channel_preset);
    if (p_gb->count()) cfg.channel.p_good_to_bad = overrides.p_good_to_bad;
    if (p_bg->count()) cfg.channel.p_bad_to_good = overrides.p_bad_to_good;
    if (jitter->count()) cfg.channel.jitter_std_ms = overrides.jitter_std_ms;
    if (base->count()) cfg.channel.base_delay_ms = overrides.base_delay_ms;
    validate(cfg.channel);

    if (*gen) {
      const auto r = cmd_gen_data(cfg);
      std::printf("corpus: %zu frames, test: %zu frames\n", r.corpus_frames, r.test_frames);
      std::printf("labels: silence %.3f voiced %.3f unvoiced %.3f\n", r.class_fractions[0],
                  r.class_fractions[1], r.class_fractions[2]);
    } else if (*tvq) {
      const auto r = cmd_train_vq(cfg);
      for (std::size_t s = 0; s < cfg.stages; ++s) {
        std::printf("stages=%zu mse=%.6f\n", s + 1, r.stage_mse[s]);
      }
    } else if (*dst) {
      const auto r = cmd_distill(cfg);
      std::printf("distilled mse=%.6f  stage-1 mse=%.6f\n", r.distilled_mse, r.stage1_mse);
    } else if (*tplc) {
      const auto r = cmd_train_plc(cfg);
      if (!r.curve.empty()) {
        std::printf("final nll=%.4f after %zu iterations\n", r.curve.back().mean_nll,
                    r.curve.back().iteration);
      }
      std::printf("params=%zu  MFLOPS=%.3f\n", r.complexity.param_count,
                  r.complexity.flops_per_second / 1e6);
    } else if (*sim) {
      const auto r = cmd_simulate(cfg);
      for (const auto& rep : r.reports) print_report(rep);
      std::printf("mean snr over %zu run(s): zero_fill %.3f  plc_only %.3f  plc_fec %.3f dB\n",
                  cfg.runs, r.mean_overall_snr_db[0], r.mean_overall_snr_db[1],
                  r.mean_overall_snr_db[2]);
    } else if (*insp) {
      return inspect(packet_file, seq);
    }
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s (at %zu)\n", e.what(), e.where());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
