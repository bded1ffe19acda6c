#include "lmfuse/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "lmfuse/checkpoint.hpp"
#include "lmfuse/error.hpp"
#include "lmfuse/evaluation.hpp"
#include "lmfuse/report.hpp"
#include "lmfuse/rng.hpp"
#include "lmfuse/synthgen.hpp"

namespace lmfuse {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Options {
  std::string landmarks, metadata, scores, labels, checkpoint;
  std::string out = "out";
  std::uint64_t seed = 42;
  std::string mode = "merged";
  std::string head = "identity";
  std::string optimizer = "adam";
  std::size_t epochs = 200;
  double lr = 1e-3;
  double dropout = 0.2;
  std::size_t batch_size = 16;
  std::size_t patience = 25;
  double test_fraction = 0.2;
  double val_fraction = 0.2;
  bool group_split = false;
  bool serial = false;

  SynthSpec synth;
  std::string coupling = "antithetic";

  std::size_t gradcheck_configs = 24;
  double tolerance = 1e-4;
};

struct LoadedData {
  std::vector<VideoRecord> records;
  LandmarkFile landmarks;
  JoinSummary join;
  std::size_t gap_deltas = 0;
  std::size_t videos_with_gaps = 0;
};

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw ValidationError("cannot write " + path.string());
  f << j.dump(2) << '\n';
}

fs::path ensure_out(const Options& o) {
  fs::path dir(o.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create output directory " + o.out + ": " + ec.message());
  return dir;
}

void require_path(const std::string& value, const char* flag) {
  if (value.empty()) throw ValidationError(std::string(flag) + " is required for this subcommand");
  if (!fs::exists(value)) throw ValidationError(std::string(flag) + " file not found: " + value);
}

LoadedData load(const Options& o) {
  require_path(o.landmarks, "--landmarks");
  require_path(o.metadata, "--metadata");
  if (!o.scores.empty() && !o.labels.empty()) {
    throw ValidationError("--scores and --labels are mutually exclusive (ambiguous label source)");
  }
  if (o.scores.empty() && o.labels.empty()) {
    throw ValidationError("one of --scores or --labels is required");
  }
  LoadedData d;
  d.landmarks = parse_landmarks(fs::path(o.landmarks));
  const auto metas = parse_metadata(fs::path(o.metadata));
  std::vector<LabelRecord> labels;
  if (!o.scores.empty()) {
    require_path(o.scores, "--scores");
    labels = derive_labels(parse_scores(fs::path(o.scores)));
  } else {
    require_path(o.labels, "--labels");
    labels = parse_labels(fs::path(o.labels));
  }
  d.records = join_inputs(d.landmarks.series, metas, labels, &d.join);
  for (const auto& r : d.records) {
    const auto deltas = compute_deltas(r.series);
    const auto gaps = static_cast<std::size_t>(
        std::count(deltas.gap_flags.begin(), deltas.gap_flags.end(), true));
    d.gap_deltas += gaps;
    d.videos_with_gaps += gaps > 0 ? 1 : 0;
  }
  return d;
}

SplitSettings split_settings(const Options& o) {
  return SplitSettings{o.test_fraction, o.val_fraction, o.seed, o.group_split};
}

TrainConfig train_config(const Options& o) {
  TrainConfig c;
  c.epochs = o.epochs;
  c.learning_rate = o.lr;
  c.optimizer = parse_optimizer(o.optimizer);
  c.batch_size = o.batch_size;
  c.dropout_rate = o.dropout;
  c.seed = o.seed;
  c.early_stop_patience = o.patience;
  c.mode = parse_mode(o.mode);
  c.head = parse_head_activation(o.head);
  c.execution = o.serial ? Execution::serial : Execution::parallel;
  c.validate();
  return c;
}

std::vector<Label> labels_of(std::span<const VideoRecord> records) {
  std::vector<Label> out;
  for (const auto& r : records) out.push_back(r.label);
  return out;
}

int cmd_ingest(const Options& o, std::ostream& out) {
  const LoadedData d = load(o);
  const auto counts = class_counts(labels_of(d.records));
  json videos = json::array();
  for (const auto& r : d.records) {
    videos.push_back({{"video_id", r.series.video_id},
                      {"golfer_id", r.meta.golfer_id},
                      {"label", index(r.label)},
                      {"frames", r.series.frames.size()},
                      {"age", r.meta.age},
                      {"career_years", r.meta.career_length},
                      {"height_cm", r.meta.height_cm},
                      {"prev_rank", r.meta.prev_rank},
                      {"nationality", r.meta.nationality}});
  }
  json bundle = {{"n_videos", d.records.size()},
                 {"class_counts", counts},
                 {"truncated_series", d.landmarks.truncated_series},
                 {"truncated_frames", d.landmarks.truncated_frames},
                 {"excluded_short_series", d.join.excluded_short},
                 {"metadata_without_video", d.join.meta_without_video},
                 {"gap_deltas", d.gap_deltas},
                 {"videos_with_gaps", d.videos_with_gaps},
                 {"videos", videos}};
  const fs::path dir = ensure_out(o);
  write_json(dir / "dataset.json", bundle);
  out << "videos: " << d.records.size() << "\n"
      << "class 0: " << counts[0] << "\nclass 1: " << counts[1] << "\n"
      << "truncated series: " << d.landmarks.truncated_series << " (" << d.landmarks.truncated_frames
      << " frames dropped)\n"
      << "excluded (<2 frames): " << d.join.excluded_short << "\n"
      << "missing-frame gaps: " << d.gap_deltas << " in " << d.videos_with_gaps << " videos\n"
      << "wrote " << (dir / "dataset.json").string() << "\n";
  return kExitOk;
}

int cmd_synth(const Options& o, std::ostream& out) {
  SynthSpec spec = o.synth;
  spec.seed = o.seed;
  spec.coupling = parse_coupling(o.coupling);
  const SynthData data = generate(spec);
  const fs::path dir = ensure_out(o);
  write_synth(data, spec, dir);
  std::size_t positives = 0;
  for (const auto& l : data.labels) positives += index(l.label);
  out << "generated " << data.labels.size() << " videos (" << positives << " label 1) in "
      << dir.string() << "\n";
  return kExitOk;
}

int report_eval(const EvalReport& r, std::ostream& out) {
  out << format_table(r);
  out << "F1 (class 1): " << r.f1() << "\n";
  return r.has_nan() ? kExitRuntime : kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  const LoadedData d = load(o);
  const TrainConfig tc = train_config(o);
  const SplitSettings ss = split_settings(o);
  const PreparedData data = prepare(d.records, ss);
  auto fitted = fit(data.train, data.val, tc);
  const EvalReport test = evaluate(fitted.model, data.test, tc.execution);

  const fs::path dir = ensure_out(o);
  const fs::path ckpt_path = dir / "checkpoint.json";
  save_checkpoint(ckpt_path, Checkpoint{fitted.model, data.prep, ss});
  json rep = {{"config", to_json(tc)},
              {"split",
               {{"test_fraction", ss.test_fraction},
                {"val_fraction", ss.val_fraction},
                {"group_split", ss.group_split},
                {"n_train", data.train.size()},
                {"n_val", data.val.size()},
                {"n_test", data.test.size()}}},
              {"training", to_json(fitted.report)},
              {"test", to_json(test)},
              {"checkpoint", ckpt_path.filename().string()}};
  write_json(dir / "train_report.json", rep);
  write_json(dir / "eval_report.json", to_json(test));
  out << "epochs run: " << fitted.report.epochs.size() << ", best epoch "
      << fitted.report.best_epoch << "\n";
  return report_eval(test, out);
}

int cmd_eval(const Options& o, const CLI::App& app, std::ostream& out) {
  require_path(o.checkpoint, "--checkpoint");
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  if (!ckpt.preprocessing) throw ValidationError("checkpoint lacks preprocessing statistics");
  SplitSettings ss = ckpt.split.value_or(split_settings(o));
  if (app.count("--seed")) ss.seed = o.seed;
  if (app.count("--test-fraction")) ss.test_fraction = o.test_fraction;
  if (app.count("--group-split")) ss.group_split = o.group_split;
  const LoadedData d = load(o);
  const Split split = outer_split(d.records, ss);
  const auto test = build_samples(d.records, split.test, *ckpt.preprocessing);
  const EvalReport r =
      evaluate(ckpt.model, test, o.serial ? Execution::serial : Execution::parallel);
  const fs::path dir = ensure_out(o);
  write_json(dir / "eval_report.json", to_json(r));
  return report_eval(r, out);
}

int cmd_ablate(const Options& o, std::ostream& out) {
  const LoadedData d = load(o);
  AblationConfig cfg{train_config(o), split_settings(o)};
  const AblationReport r = ablate(d.records, cfg);
  const fs::path dir = ensure_out(o);
  write_json(dir / "ablation_report.json", to_json(r));
  out << format_table(r);
  for (const auto& arm : r.results) {
    if (arm.test.has_nan()) return kExitRuntime;
  }
  return kExitOk;
}

int cmd_gradcheck(const Options& o, std::ostream& out) {
  if (o.gradcheck_configs < 1) throw ValidationError("--configs must be >= 1");
  json runs = json::array();
  double worst = 0.0;
  bool ok = true;
  const auto sweep = gradcheck_sweep(o.seed, o.gradcheck_configs, o.tolerance);
  for (std::size_t k = 0; k < sweep.size(); ++k) {
    const GradCheckOptions& g = sweep[k];
    const GradCheckReport r = grad_check(g);
    worst = std::max(worst, r.max_rel_error);
    ok = ok && r.passed;
    runs.push_back(to_json(r));
    out << "config " << k << " mode=" << to_string(g.mode) << " head=" << to_string(g.head)
        << " dropout=" << g.dropout_rate << " params=" << r.n_params << " nonzero=" << r.n_nonzero
        << " max_rel_error=" << r.max_rel_error << (r.passed ? " ok" : " FAIL") << "\n";
  }
  const fs::path dir = ensure_out(o);
  write_json(dir / "gradcheck_report.json",
             {{"tolerance", o.tolerance}, {"max_rel_error", worst}, {"passed", ok}, {"runs", runs}});
  out << "max relative error " << worst << " (tolerance " << o.tolerance << "): "
      << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? kExitOk : kExitRuntime;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Facial-landmark and meta-data fusion model for next-round performance labels",
               "lmfuse"};
  app.set_config("--config", "", "Flat key = value config file (keys are long flag names)");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1, 1);

  Options o;
  app.add_option("--landmarks", o.landmarks, "Landmarks CSV");
  app.add_option("--metadata", o.metadata, "Metadata CSV");
  app.add_option("--scores", o.scores, "Scores CSV (labels are derived)");
  app.add_option("--labels", o.labels, "Labels CSV (video_id,label)");
  app.add_option("--checkpoint", o.checkpoint, "Model checkpoint JSON (eval)");
  app.add_option("--out", o.out, "Output directory")->capture_default_str();
  app.add_option("--seed", o.seed, "Root seed for all randomness")->capture_default_str();
  app.add_option("--mode", o.mode, "merged | facial_only | meta_only")->capture_default_str();
  app.add_option("--head-activation", o.head, "relu | identity")->capture_default_str();
  app.add_option("--optimizer", o.optimizer, "adam | sgd")->capture_default_str();
  app.add_option("--epochs", o.epochs, "Maximum training epochs")->capture_default_str();
  app.add_option("--lr", o.lr, "Learning rate")->capture_default_str();
  app.add_option("--dropout", o.dropout, "Dropout rate in [0, 1)")->capture_default_str();
  app.add_option("--batch-size", o.batch_size, "Mini-batch size")->capture_default_str();
  app.add_option("--patience", o.patience, "Early-stopping patience (epochs)")->capture_default_str();
  app.add_option("--test-fraction", o.test_fraction, "Held-out test share")->capture_default_str();
  app.add_option("--val-fraction", o.val_fraction, "Validation share of the training split")
      ->capture_default_str();
  app.add_flag("--group-split", o.group_split, "Split by golfer instead of by label");
  app.add_flag("--serial", o.serial, "Use the serial reference kernels");
  app.add_option("--n-samples", o.synth.n_samples, "synth: number of videos")->capture_default_str();
  app.add_option("--class-balance", o.synth.class_balance, "synth: fraction of label 1")
      ->capture_default_str();
  app.add_option("--frames", o.synth.frames, "synth: frames per video")->capture_default_str();
  app.add_option("--p-face", o.synth.p_face, "synth: facial signal agreement probability")
      ->capture_default_str();
  app.add_option("--p-meta", o.synth.p_meta, "synth: meta-data signal agreement probability")
      ->capture_default_str();
  app.add_option("--noise-sigma", o.synth.noise_sigma, "synth: landmark jitter (pixels)")
      ->capture_default_str();
  app.add_option("--nationalities", o.synth.nationality_pool, "synth: nationality pool size")
      ->capture_default_str();
  app.add_option("--golfers", o.synth.golfers, "synth: number of golfers")->capture_default_str();
  app.add_option("--frame-drop-rate", o.synth.frame_drop_rate, "synth: share of frames lost to detection failures")
      ->capture_default_str();
  app.add_option("--coupling", o.coupling, "synth: antithetic | independent")->capture_default_str();
  app.add_option("--configs", o.gradcheck_configs, "gradcheck: number of random configurations")
      ->capture_default_str();
  app.add_option("--tolerance", o.tolerance, "gradcheck: max relative error")->capture_default_str();

  auto* ingest = app.add_subcommand("ingest", "Validate inputs and write a dataset bundle");
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  auto* train = app.add_subcommand("train", "Train one model and evaluate it on the test split");
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  auto* ablation = app.add_subcommand("ablate", "Train merged, facial-only and meta-only models");
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient verification");
  for (auto* sub : {ingest, synth, train, eval, ablation, gradcheck}) sub->fallthrough();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*ingest) return cmd_ingest(o, out);
    if (*synth) return cmd_synth(o, out);
    if (*train) return cmd_train(o, out);
    if (*eval) return cmd_eval(o, app, out);
    if (*ablation) return cmd_ablate(o, out);
    if (*gradcheck) return cmd_gradcheck(o, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitValidation;
}

}  // namespace lmfuse
