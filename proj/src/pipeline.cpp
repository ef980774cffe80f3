#include "latres/pipeline.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "latres/kernels.hpp"
#include "latres/wav.hpp"

namespace latres {

namespace fs = std::filesystem;

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

fs::path need(const Config& config, const char* name, const char* producer) {
  fs::path p = config.out_dir / name;
  if (!fs::exists(p)) {
    throw std::runtime_error("missing " + p.string() + "; run `latres " + producer +
                             "` first");
  }
  return p;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  return in;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

void ensure_out_dir(const Config& config) { fs::create_directories(config.out_dir); }

VqTrainOptions vq_options(const Config& config, std::size_t epochs, std::uint64_t salt) {
  VqTrainOptions o;
  o.epochs = epochs;
  o.batch_size = config.vq_batch;
  o.ema.decay = config.ema_decay;
  o.seed = config.seed * 1000003ull + salt;
  return o;
}

std::vector<VoicingClass> read_labels(const fs::path& p) {
  std::ifstream in = open_in(p);
  std::vector<VoicingClass> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.rfind("frame", 0) == 0) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) throw ParseError("bad label line", line_no);
    labels.push_back(parse_voicing_class(std::string_view(line).substr(comma + 1)));
  }
  return labels;
}

VectorSet corpus_latents(const Config& config, const AnalysisTransform& t) {
  const Vec samples = read_wav(need(config, artifacts::kCorpusWav, "gen-data"));
  return encode_signal(samples, t);
}

AnalysisTransform load_transform(const Config& config) {
  auto in = open_in(need(config, artifacts::kTransform, "train-vq"));
  return read_transform(in);
}

ResidualVq load_rvq(const Config& config) {
  auto in = open_in(need(config, artifacts::kRvq, "train-vq"));
  return read_rvq(in);
}

DistilledCodebook load_distilled(const Config& config) {
  auto in = open_in(need(config, artifacts::kDistilled, "distill"));
  return read_distilled(in);
}

Trace trace_for_run(const Config& config, std::size_t n_packets, std::size_t run) {
  if (!config.trace_file.empty()) {
    auto in = open_in(config.trace_file);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_trace(ss.str());
  }
  return generate_trace(config.channel, n_packets, config.seed * 7777ull + run);
}

void write_condition_files(const Config& config, const ConditionRun& r) {
  const std::string tag(to_string(r.condition));
  {
    auto out = open_out(config.out_dir / ("report_" + tag + ".json"));
    out << report_to_json(r.report) << '\n';
  }
  {
    auto out = open_out(config.out_dir / ("outcomes_" + tag + ".csv"));
    write_outcome_csv(out, r.outcomes);
  }
  {
    auto out = open_out(config.out_dir / ("conceal_" + tag + ".csv"));
    write_conceal_log_csv(out, r.events);
  }
  write_wav(config.out_dir / ("decoded_" + tag + ".wav"), r.decoded);
}

}  // namespace

std::string Config::canonical() const {
  std::ostringstream os;
  os << "seed=" << seed << '\n'
     << "dim=" << dim << '\n'
     << "hidden=" << hidden << '\n'
     << "stages=" << stages << '\n'
     << "fec_k=" << fec_k << '\n'
     << "playout_delay_ms=" << fmt_double(playout_delay_ms) << '\n'
     << "trace_file=" << trace_file << '\n'
     << "channel_preset=" << channel_preset << '\n'
     << "channel.p_gb=" << fmt_double(channel.p_good_to_bad) << '\n'
     << "channel.p_bg=" << fmt_double(channel.p_bad_to_good) << '\n'
     << "channel.loss_in_bad=" << fmt_double(channel.loss_in_bad) << '\n'
     << "channel.jitter_ms=" << fmt_double(channel.jitter_std_ms) << '\n'
     << "channel.base_delay_ms=" << fmt_double(channel.base_delay_ms) << '\n'
     << "runs=" << runs << '\n'
     << "corpus.seconds=" << fmt_double(corpus.seconds) << '\n'
     << "corpus.voiced=" << fmt_double(corpus.voiced_fraction) << '\n'
     << "corpus.unvoiced=" << fmt_double(corpus.unvoiced_fraction) << '\n'
     << "corpus.silence=" << fmt_double(corpus.silence_fraction) << '\n'
     << "corpus.f0_min=" << fmt_double(corpus.f0_min_hz) << '\n'
     << "corpus.f0_max=" << fmt_double(corpus.f0_max_hz) << '\n'
     << "corpus.drift=" << fmt_double(corpus.max_pitch_drift) << '\n'
     << "corpus.phase_spread=" << fmt_double(corpus.phase_spread) << '\n'
     << "corpus.tilt_min=" << fmt_double(corpus.tilt_min) << '\n'
     << "corpus.tilt_max=" << fmt_double(corpus.tilt_max) << '\n'
     << "test_seconds=" << fmt_double(test_seconds) << '\n'
     << "vq_epochs=" << vq_epochs << '\n'
     << "vq_batch=" << vq_batch << '\n'
     << "ema_decay=" << fmt_double(ema_decay) << '\n'
     << "distill_epochs=" << distill_epochs << '\n'
     << "plc_lr=" << fmt_double(plc_lr) << '\n'
     << "plc_batch=" << plc_batch << '\n'
     << "plc_iterations=" << plc_iterations << '\n'
     << "plc_sequence_frames=" << plc_sequence_frames << '\n'
     << "conceal.voiced=" << conceal.voiced_limit << '\n'
     << "conceal.unvoiced=" << conceal.unvoiced_limit << '\n'
     << "conceal.silence=" << conceal.silence_limit << '\n'
     << "conceal.fade=" << (conceal.fade_to_silence ? 1 : 0) << '\n';
  return os.str();
}

std::string Config::fingerprint() const { return latres::fingerprint(canonical()); }

std::vector<CodeIndex> distilled_stream(const Models& models, const VectorSet& latents) {
  std::vector<CodeIndex> out(latents.size());
  const auto n = static_cast<std::ptrdiff_t>(latents.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const auto idx = models.rvq.encode(latents.row(k), 2);
    out[k] = requantize(idx, models.rvq, models.distilled.codebook).index;
  }
  return out;
}

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::kZeroFill:
      return "zero_fill";
    case Condition::kPlcOnly:
      return "plc_only";
    case Condition::kPlcFec:
      return "plc_fec";
  }
  return "?";
}

ConditionRun run_condition(const Models& models, std::span<const double> signal,
                           const Trace& trace, Condition condition,
                           const StreamSettings& settings) {
  const ResidualVq& rvq = models.rvq;
  const Codebook& distilled = models.distilled.codebook;
  const std::size_t stages = rvq.num_stages();
  if (stages < 2) throw std::invalid_argument("simulation needs at least 2 VQ stages");

  VectorSet latents = encode_signal(signal, models.transform);
  if (latents.size() % 2 != 0) latents.push_back(Vec(latents.dim(), 0.0));
  const std::size_t n_frames = latents.size();

  std::vector<FrameIndices> frames(n_frames);
  VectorSet clean(rvq.dim());
  clean.reserve(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    const auto idx = rvq.encode(latents.row(i), stages);
    std::copy(idx.begin(), idx.end(), frames[i].stage_indices.begin());
    frames[i].distilled_index = requantize(idx, rvq, distilled).index;
    clean.push_back(rvq.decode(idx));
  }

  ConditionRun run;
  run.condition = condition;
  const unsigned k = condition == Condition::kPlcFec ? settings.fec_k : 0;
  run.packets = attach_redundancy(frames, k);
  run.reference = decode_latents(clean, models.transform);

  std::vector<std::pair<double, std::uint32_t>> arrivals;
  for (const Packet& p : run.packets) {
    const TraceEvent* e = trace.find(p.seq);
    if (e && !e->lost) arrivals.emplace_back(e->arrival_ms, p.seq);
  }
  std::sort(arrivals.begin(), arrivals.end());

  JitterBuffer jb(settings.playout_delay_ms);
  ConcealState state(distilled);
  VectorSet out_latents(rvq.dim());
  out_latents.reserve(n_frames);
  std::vector<Vec> dists;
  std::vector<CodeIndex> predicted;
  std::vector<CodeIndex> truth;
  std::size_t next = 0;

  for (std::size_t n = 0; n < n_frames; ++n) {
    while (next < arrivals.size() && jb.arrived_by(arrivals[next].first, n)) {
      jb.push(run.packets[arrivals[next].second], arrivals[next].first);
      ++next;
    }
    FrameOutcome outcome = jb.pull(n);
    const std::span<const CodeIndex> primary(outcome.primary.data(), stages);

    if (condition == Condition::kZeroFill) {
      if (outcome.kind != OutcomeKind::kReceived) outcome.kind = OutcomeKind::kZeroFilled;
      const bool got = outcome.kind == OutcomeKind::kReceived;
      run.events.push_back({n, got ? ConcealAction::kReceived : ConcealAction::kZeroFilled,
                            got ? outcome.primary[0] : CodeIndex{0}, 0});
      run.outcomes.push_back(outcome);
      continue;
    }

    ConcealStep step;
    switch (outcome.kind) {
      case OutcomeKind::kReceived:
        step = requantize_received(state, primary, rvq, distilled, models.class_map);
        break;
      case OutcomeKind::kFecRecovered:
        step = apply_fec(state, outcome.distilled_index, distilled, models.class_map);
        break;
      default:
        step = conceal_frame(state, &models.plc, distilled, &models.class_map, settings.conceal);
        break;
    }
    if (step.action == ConcealAction::kPredicted) {
      dists.push_back(step.probs);
      predicted.push_back(step.index);
      truth.push_back(frames[n].distilled_index);
    }
    run.events.push_back({n, step.action, step.index, step.burst_len});
    out_latents.push_back(step.latent);
    run.outcomes.push_back(outcome);
  }
  // Anything still in flight after the last frame only counts towards late drops.
  for (; next < arrivals.size(); ++next) {
    jb.push(run.packets[arrivals[next].second], arrivals[next].first);
  }

  if (condition == Condition::kZeroFill) out_latents = zero_fill_baseline(run.outcomes, rvq);
  run.decoded = decode_latents(out_latents, models.transform);

  RunReport& rep = run.report;
  rep.condition = std::string(to_string(condition));
  rep.overall_snr_db = snr_db(run.reference, run.decoded);
  rep.concealed_region_snr_db =
      concealed_region_snr_db(run.reference, run.decoded, run.outcomes);
  if (!predicted.empty()) rep.prediction = prediction_metrics(dists, predicted, truth);
  rep.outcome_counts = jb.stats();
  rep.frames = n_frames;
  if (k != 0) rep.fec = FecSection{k, payload_bitrate(stages, true).redundant_bps};
  rep.complexity = complexity_report(models.plc);
  rep.config_fingerprint = settings.fingerprint;
  return run;
}

GenDataResult cmd_gen_data(const Config& config) {
  ensure_out_dir(config);
  CorpusParams train = config.corpus;
  train.seed = config.seed;
  const Corpus corpus = generate_corpus(train);
  CorpusParams test = config.corpus;
  test.seconds = config.test_seconds;
  test.seed = config.seed + 0x9e3779b9ull;
  const Corpus held_out = generate_corpus(test);

  write_wav(config.out_dir / artifacts::kCorpusWav, corpus.samples);
  write_wav(config.out_dir / artifacts::kTestWav, held_out.samples);
  {
    auto out = open_out(config.out_dir / artifacts::kCorpusLabels);
    out << "frame,segment_class,label\n";
    for (std::size_t i = 0; i < corpus.labels.size(); ++i) {
      out << i << ',' << to_string(corpus.segment_class[i]) << ',' << to_string(corpus.labels[i])
          << '\n';
    }
  }

  GenDataResult r;
  r.corpus_frames = corpus.labels.size();
  r.test_frames = held_out.labels.size();
  for (VoicingClass c : corpus.labels) r.class_fractions[static_cast<std::size_t>(c)] += 1.0;
  for (double& f : r.class_fractions) f /= std::max<double>(1.0, static_cast<double>(r.corpus_frames));
  return r;
}

TrainVqResult cmd_train_vq(const Config& config) {
  const Vec samples = read_wav(need(config, artifacts::kCorpusWav, "gen-data"));
  const AnalysisTransform t = fit_transform(config.dim, samples);
  const VectorSet latents = encode_signal(samples, t);

  TrainVqResult r;
  const ResidualVq rvq =
      train_rvq(latents, config.stages, vq_options(config, config.vq_epochs, 11), &r.stage_curves);

  for (std::size_t s = 1; s <= config.stages; ++s) {
    double total = 0.0;
    for (std::size_t i = 0; i < latents.size(); ++i) {
      total += squared_distance(latents.row(i), rvq.decode(rvq.encode(latents.row(i), s)));
    }
    r.stage_mse[s - 1] = total / static_cast<double>(latents.size());
  }

  {
    auto out = open_out(config.out_dir / artifacts::kTransform);
    write_transform(out, t);
  }
  {
    auto out = open_out(config.out_dir / artifacts::kRvq);
    write_rvq(out, rvq);
  }
  {
    auto out = open_out(config.out_dir / artifacts::kVqCurve);
    out << "stage,epoch,distortion\n";
    for (std::size_t s = 0; s < r.stage_curves.size(); ++s) {
      for (std::size_t e = 0; e < r.stage_curves[s].size(); ++e) {
        out << s + 1 << ',' << e + 1 << ',' << fmt_double(r.stage_curves[s][e]) << '\n';
      }
    }
  }
  return r;
}

DistillResult cmd_distill(const Config& config) {
  const AnalysisTransform t = load_transform(config);
  const ResidualVq rvq = load_rvq(config);
  const VectorSet latents = corpus_latents(config, t);
  const auto labels = read_labels(need(config, artifacts::kCorpusLabels, "gen-data"));
  if (labels.size() != latents.size()) {
    throw std::runtime_error("corpus labels do not match corpus.wav; rerun `latres gen-data`");
  }

  DistillResult r;
  DistilledCodebook distilled =
      distill_codebook(rvq, latents, vq_options(config, config.distill_epochs, 23), &r.curve);

  Models m;
  m.rvq = rvq;
  m.distilled = distilled;
  const auto indices = distilled_stream(m, latents);
  const IndexClassMap class_map = build_class_map(indices, labels);

  r.distilled_mse = codebook_distortion(distilled.codebook, latents);
  r.stage1_mse = codebook_distortion(rvq.stage(0), latents);

  {
    auto out = open_out(config.out_dir / artifacts::kDistilled);
    write_distilled(out, distilled);
  }
  {
    auto out = open_out(config.out_dir / artifacts::kClassMap);
    write_class_map(out, class_map);
  }
  {
    auto out = open_out(config.out_dir / artifacts::kDistillCurve);
    out << "epoch,distortion\n";
    for (std::size_t e = 0; e < r.curve.size(); ++e) out << e + 1 << ',' << fmt_double(r.curve[e]) << '\n';
  }
  return r;
}

TrainPlcResult cmd_train_plc(const Config& config) {
  need(config, artifacts::kDistilled, "distill");
  Models m;
  m.transform = load_transform(config);
  m.rvq = load_rvq(config);
  m.distilled = load_distilled(config);
  if (m.distilled.codebook.dim() != config.dim) {
    throw std::runtime_error("distilled codebook has D=" + std::to_string(m.distilled.codebook.dim()) +
                             " but the config says D=" + std::to_string(config.dim));
  }
  const VectorSet latents = corpus_latents(config, m.transform);
  const auto stream = distilled_stream(m, latents);
  const auto sequences = split_sequences(stream, config.plc_sequence_frames);
  if (sequences.empty()) throw std::runtime_error("corpus too short for PLC training");

  PlcModel model = PlcModel::initialized(config.dim, config.hidden, config.seed * 31ull + 5);
  PlcTrainOptions opt;
  opt.iterations = config.plc_iterations;
  opt.batch_size = config.plc_batch;
  opt.lr = config.plc_lr;
  opt.seed = config.seed * 131ull + 17;

  TrainPlcResult r;
  r.curve = train_teacher_forcing(model, m.distilled.codebook, sequences, opt);
  r.complexity = complexity_report(model);
  {
    auto out = open_out(config.out_dir / artifacts::kPlcModel);
    write_model(out, model);
  }
  {
    auto out = open_out(config.out_dir / artifacts::kPlcCurve);
    write_loss_curve_csv(out, r.curve);
  }
  return r;
}

Models load_models(const Config& config) {
  Models m;
  m.transform = load_transform(config);
  m.rvq = load_rvq(config);
  m.distilled = load_distilled(config);
  {
    auto in = open_in(need(config, artifacts::kClassMap, "distill"));
    m.class_map = read_class_map(in);
  }
  {
    auto in = open_in(need(config, artifacts::kPlcModel, "train-plc"));
    m.plc = read_model(in);
  }

  auto mismatch = [](const std::string& what, std::size_t got, std::size_t want) {
    if (got != want) {
      throw std::runtime_error(what + " is " + std::to_string(got) + " in the artifacts but " +
                               std::to_string(want) +
                               " in the config; retrain or fix the config");
    }
  };
  mismatch("latent dimension (transform)", m.transform.dim(), config.dim);
  mismatch("latent dimension (rvq)", m.rvq.dim(), config.dim);
  mismatch("latent dimension (distilled)", m.distilled.codebook.dim(), config.dim);
  mismatch("latent dimension (plc)", m.plc.dim(), config.dim);
  mismatch("hidden width", m.plc.hidden(), config.hidden);
  mismatch("stage count", m.rvq.num_stages(), config.stages);
  return m;
}

SimulateResult cmd_simulate(const Config& config) {
  const Models models = load_models(config);
  const Vec signal = read_wav(need(config, artifacts::kTestWav, "gen-data"));
  if (config.runs == 0) throw std::invalid_argument("runs must be at least 1");
  if (!fec_engages(config.fec_k, config.playout_delay_ms, config.channel.base_delay_ms)) {
    std::cerr << "warning: fec_k=" << config.fec_k << " with playout delay "
              << config.playout_delay_ms << " ms and network delay "
              << config.channel.base_delay_ms << " ms leaves redundancy too late to be used\n";
  }

  StreamSettings settings;
  settings.fec_k = config.fec_k;
  settings.playout_delay_ms = config.playout_delay_ms;
  settings.conceal = config.conceal;
  settings.fingerprint = config.fingerprint();

  const std::size_t n_frames = frame_count(signal.size());
  const std::size_t n_packets = (n_frames + 1) / 2;
  constexpr std::array<Condition, 3> kConditions = {Condition::kZeroFill, Condition::kPlcOnly,
                                                    Condition::kPlcFec};

  std::vector<Trace> traces;
  for (std::size_t r = 0; r < config.runs; ++r) traces.push_back(trace_for_run(config, n_packets, r));

  std::vector<std::array<double, 3>> snrs(config.runs);
  std::vector<ConditionRun> first(3);
  const auto total = static_cast<std::ptrdiff_t>(config.runs * 3);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t job = 0; job < total; ++job) {
    const auto r = static_cast<std::size_t>(job) / 3;
    const auto c = static_cast<std::size_t>(job) % 3;
    ConditionRun run = run_condition(models, signal, traces[r], kConditions[c], settings);
    snrs[r][c] = run.report.overall_snr_db;
    if (r == 0) first[c] = std::move(run);
  }

  ensure_out_dir(config);
  SimulateResult result;
  for (const ConditionRun& run : first) {
    write_condition_files(config, run);
    result.reports.push_back(run.report);
  }
  {
    auto out = open_out(config.out_dir / artifacts::kPackets);
    write_packet_stream(out, first[2].packets);
  }
  {
    auto out = open_out(config.out_dir / "trace.csv");
    out << serialize_trace(traces[0]);
  }

  nlohmann::ordered_json summary;
  summary["config_fingerprint"] = settings.fingerprint;
  summary["runs"] = config.runs;
  nlohmann::ordered_json per_run = nlohmann::ordered_json::array();
  for (std::size_t r = 0; r < config.runs; ++r) {
    nlohmann::ordered_json row;
    for (std::size_t c = 0; c < 3; ++c) row[std::string(to_string(kConditions[c]))] = snrs[r][c];
    per_run.push_back(row);
  }
  nlohmann::ordered_json means;
  for (std::size_t c = 0; c < 3; ++c) {
    double sum = 0.0;
    for (const auto& s : snrs) sum += s[c];
    result.mean_overall_snr_db[c] = sum / static_cast<double>(config.runs);
    means[std::string(to_string(kConditions[c]))] = result.mean_overall_snr_db[c];
  }
  summary["mean_overall_snr_db"] = means;
  summary["overall_snr_db_per_run"] = per_run;
  {
    auto out = open_out(config.out_dir / artifacts::kSummary);
    out << summary.dump(2) << '\n';
  }
  return result;
}

}  // namespace latres
