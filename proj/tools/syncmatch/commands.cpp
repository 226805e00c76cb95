#include "commands.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "selftest.hpp"
#include "syncmatch/checkpoint.hpp"
#include "syncmatch/errors.hpp"
#include "syncmatch/sampling.hpp"
#include "syncmatch/sync_eval.hpp"

namespace syncmatch::cli {

namespace fs = std::filesystem;

void apply_seed_override(RunConfig& cfg, const char* env_value) {
  if (!env_value || !*env_value) return;
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(env_value, &end, 10);
  if (errno != 0 || *end != '\0' || env_value[0] == '-') {
    throw ConfigError(std::string("SYNCMATCH_SEED must be an unsigned integer, got '") + env_value + "'");
  }
  cfg.seed = cfg.init_seed = cfg.train_seed = cfg.eval_seed = v;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string fmt_loss(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void ensure_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory '" + dir.string() + "'");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os << text;
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

synth::Corpus load_corpus(const RunConfig& cfg) {
  if (!fs::is_directory(cfg.corpus)) throw IoError("corpus directory '" + cfg.corpus + "' does not exist");
  return synth::read_corpus(cfg.corpus);
}

std::string checkpoint_name(std::size_t epoch) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "checkpoint_epoch_%03zu.ckpt", epoch);
  return buf;
}

std::vector<ndgrad::Parameter*> model_parameters(Encoders& enc, AveNetHead& head, Objective objective) {
  auto params = enc.parameters();
  if (objective == Objective::kAveNet) {
    params.push_back(&head.weight);
    params.push_back(&head.bias);
  }
  return params;
}

nlohmann::json checkpoint_config(const RunConfig& cfg, const TrainConfig& train, std::size_t epochs_done) {
  return {{"encoder", cfg.encoder}, {"train", train}, {"init_seed", cfg.init_seed}, {"epochs_done", epochs_done}};
}

void save_model(const fs::path& path, const RunConfig& cfg, const TrainConfig& train, Encoders& enc,
                AveNetHead& head, std::size_t epochs_done) {
  const auto params = model_parameters(enc, head, train.objective);
  const std::vector<const ndgrad::Parameter*> cparams(params.begin(), params.end());
  save_checkpoint(path, make_checkpoint(checkpoint_config(cfg, train, epochs_done), cparams));
}

struct LoadedModel {
  Encoders encoders;
  Objective objective;
};

LoadedModel load_model(const RunConfig& cfg) {
  if (cfg.checkpoint.empty()) throw ConfigError("checkpoint is required");
  if (!fs::is_regular_file(cfg.checkpoint)) throw IoError("checkpoint '" + cfg.checkpoint + "' does not exist");
  const auto ckpt = load_checkpoint(cfg.checkpoint);
  require_config(ckpt, "encoder", nlohmann::json(cfg.encoder));
  auto enc = Encoders::build(cfg.encoder, 0);
  auto params = enc.parameters();
  restore_parameters(ckpt, params);
  Objective objective = Objective::kMultiway;
  if (ckpt.config.contains("train")) objective = ckpt.config["train"].get<TrainConfig>().objective;
  return {std::move(enc), objective};
}

TrainConfig train_config(const RunConfig& cfg) {
  TrainConfig t = cfg.train;
  t.seed = cfg.train_seed;
  t.validate();
  return t;
}

std::string sync_csv(const std::vector<SyncAccuracyRow>& rows) {
  std::string csv = "K,trials,accuracy\n";
  for (const auto& r : rows) csv += std::to_string(r.context_frames) + "," + std::to_string(r.trials) + "," + fmt(r.accuracy()) + "\n";
  return csv;
}

}  // namespace

void cmd_gen_data(const RunConfig& cfg, std::ostream& log) {
  cfg.gen.validate();
  if (cfg.tracks == 0) throw ConfigError("tracks must be at least 1");
  const auto corpus = synth::gen_corpus(cfg.gen, cfg.tracks, cfg.seed, cfg.word_clips);
  synth::write_corpus(cfg.corpus, corpus);
  log << "wrote " << corpus.tracks.size() << " tracks and " << corpus.words.size() << " word clips to "
      << cfg.corpus << "\n";
}

void cmd_train(const RunConfig& cfg, std::ostream& log) {
  const TrainConfig train = train_config(cfg);
  cfg.encoder.validate();
  const auto corpus = load_corpus(cfg);
  const auto tracks = corpus.tracks_in("train");
  const fs::path out = cfg.out;
  ensure_out_dir(out);

  auto enc = Encoders::build(cfg.encoder, cfg.init_seed);
  AveNetHead head;
  save_model(out / checkpoint_name(0), cfg, train, enc, head, 0);
  const auto result = train_sync(tracks, enc, head, train, [&](std::size_t epoch, double loss) {
    save_model(out / checkpoint_name(epoch + 1), cfg, train, enc, head, epoch + 1);
    log << "epoch " << epoch + 1 << " mean loss " << fmt_loss(loss) << "\n" << std::flush;
  });
  save_model(out / "checkpoint.ckpt", cfg, train, enc, head, train.epochs);

  std::string csv = "epoch,mean_loss\n0," + fmt_loss(result.initial_loss) + "\n";
  for (std::size_t e = 0; e < result.loss_trace.size(); ++e) csv += std::to_string(e + 1) + "," + fmt_loss(result.loss_trace[e]) + "\n";
  write_text(out / "loss.csv", csv);
  log << "initial loss " << fmt_loss(result.initial_loss) << ", checkpoints in " << out.string() << "\n";
}

void cmd_eval_sync(const RunConfig& cfg, std::ostream& log) {
  const auto model = load_model(cfg);
  const auto corpus = load_corpus(cfg);
  const auto tracks = corpus.tracks_in(cfg.split);
  if (tracks.empty()) throw DataError("corpus split '" + cfg.split + "' has no tracks");
  const EncoderSyncModel sync(model.encoders, corpus.config.sample_rate, model.objective == Objective::kAveNet);
  const auto rows = sync_accuracy_table(tracks, sync, cfg.K_list, cfg.trials, cfg.eval_seed);
  const std::string csv = sync_csv(rows);
  ensure_out_dir(cfg.out);
  write_text(fs::path(cfg.out) / "eval_sync.csv", csv);
  log << csv;
}

void cmd_sweep_n(const RunConfig& cfg, std::ostream& log) {
  for (std::size_t n : cfg.N_list) {
    if (n < 2) throw ConfigError("N_list entries must be at least 2, got " + std::to_string(n));
  }
  cfg.encoder.validate();
  const auto corpus = load_corpus(cfg);
  const auto train_tracks = corpus.tracks_in("train");
  const auto eval_tracks = corpus.tracks_in(cfg.split);
  const fs::path out = cfg.out;
  ensure_out_dir(out);

  std::string csv = "N,usable_clips,trials,accuracy\n";
  for (std::size_t n : cfg.N_list) {
    TrainConfig train = train_config(cfg);
    train.objective = Objective::kMultiway;
    train.n_way = n;
    std::size_t usable = 0;
    for (const auto* t : train_tracks) usable += usable_for_N(TrackView::of(*t), n) ? 1 : 0;

    auto enc = Encoders::build(cfg.encoder, cfg.init_seed);
    AveNetHead head;
    train_sync(train_tracks, enc, head, train);
    save_model(out / ("sweep_N" + std::to_string(n) + ".ckpt"), cfg, train, enc, head, train.epochs);

    const EncoderSyncModel sync(enc, corpus.config.sample_rate);
    const std::size_t k5[] = {kFramesPerStack};
    const auto row = sync_accuracy_table(eval_tracks, sync, k5, cfg.trials, cfg.eval_seed).front();
    const std::string line = std::to_string(n) + "," + std::to_string(usable) + "," + std::to_string(row.trials) + "," + fmt(row.accuracy()) + "\n";
    log << line << std::flush;
    csv += line;
  }
  write_text(out / "sweep_n.csv", csv);
}

void cmd_eval_lipread(const RunConfig& cfg, std::ostream& log) {
  const LipreadMode mode = parse_lipread_mode(cfg.mode);
  Tc5Config tc5 = cfg.tc5;
  tc5.mode = mode;
  tc5.validate();

  Encoders front = mode == LipreadMode::kPretrained ? load_model(cfg).encoders : Encoders::build(cfg.encoder, cfg.init_seed);
  const auto corpus = load_corpus(cfg);
  const auto train = corpus.words_in("train");
  const auto test = corpus.words_in("test");
  if (train.empty() || test.empty()) {
    throw DataError("corpus '" + cfg.corpus + "' has no labelled word clips in both train and test splits");
  }
  tc5.vocabulary = corpus.config.vocabulary;

  LipreadOptions opts = cfg.lipread;
  opts.seed = cfg.train_seed;
  const auto result = train_lipread(train, tc5, front, opts);
  const double top1 = eval_wordacc(test, front, result.backend);

  const fs::path out = cfg.out;
  ensure_out_dir(out);
  std::string loss = "epoch,mean_loss\n0," + fmt_loss(result.initial_loss) + "\n";
  for (std::size_t e = 0; e < result.loss_trace.size(); ++e) loss += std::to_string(e + 1) + "," + fmt_loss(result.loss_trace[e]) + "\n";
  write_text(out / ("lipread_loss_" + to_string(mode) + ".csv"), loss);
  const std::string csv = "architecture,method,top1\nTC-5," + to_string(mode) + "," + fmt(top1) + "\n";
  write_text(out / ("eval_lipread_" + to_string(mode) + ".csv"), csv);
  log << csv;
}

bool cmd_selftest(const RunConfig& cfg, std::ostream& log) {
  bool ok = true;
  auto report = [&](const std::vector<selftest::CheckResult>& results) {
    for (const auto& r : results) {
      log << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n" << std::flush;
      ok = ok && r.passed;
    }
  };
  report(selftest::gradient_suite(cfg.seed));
  report(selftest::oracle_suite(cfg.seed));
  return ok;
}

}  // namespace syncmatch::cli
