// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails. Pass criterion numbers as arguments to
// run a subset.

#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "selftest.hpp"
#include "syncmatch/lipread.hpp"
#include "syncmatch/sampling.hpp"
#include "syncmatch/sync_eval.hpp"
#include "syncmatch/training.hpp"

using namespace syncmatch;
namespace fs = std::filesystem;

namespace {

// Shared run settings. The default corpus and training setup match the CLI
// defaults.
constexpr std::uint64_t kCorpusSeed = 1;
constexpr std::uint64_t kInitSeed = 7;
constexpr std::uint64_t kTrainSeed = 11;
constexpr std::uint64_t kEvalSeed = 13;
constexpr std::size_t kTracks = 200;
constexpr std::size_t kWordClips = 2000;
constexpr std::size_t kTrials = 1000;
constexpr std::size_t kSyncEpochs = 15;
constexpr std::size_t kLipEpochs = 5;

double cpu_seconds() {
  rusage u{};
  getrusage(RUSAGE_SELF, &u);
  return static_cast<double>(u.ru_utime.tv_sec + u.ru_stime.tv_sec) +
         static_cast<double>(u.ru_utime.tv_usec + u.ru_stime.tv_usec) * 1e-6;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

TrainConfig sync_config(Objective objective, std::uint64_t seed) {
  TrainConfig c;
  c.objective = objective;
  c.n_way = 8;
  c.epochs = kSyncEpochs;
  c.seed = seed;
  return c;
}

class Acceptance {
 public:
  explicit Acceptance(fs::path scratch) : scratch_(std::move(scratch)) {}

  Outcome gradient_suite() {
    const double t0 = cpu_seconds();
    const auto results = selftest::gradient_suite(kCorpusSeed, 20);
    const double secs = cpu_seconds() - t0;
    double worst = 0.0;
    std::string failed;
    for (const auto& r : results) {
      worst = std::max(worst, r.worst);
      if (!r.passed) failed += " " + r.name;
    }
    return {failed.empty() && secs < 60.0,
            format("%zu ops/objectives x 20 instances, worst rel err %.2e (< 1e-3), %.1f CPU-s (< 60)%s",
                   results.size(), worst, secs, failed.empty() ? "" : (", failed:" + failed).c_str())};
  }

  Outcome oracle_suite() {
    const double t0 = cpu_seconds();
    const auto results = selftest::oracle_suite(kCorpusSeed);
    const double secs = cpu_seconds() - t0;
    double worst = 0.0;
    std::string failed;
    for (const auto& r : results) {
      worst = std::max(worst, r.worst);
      if (!r.passed) failed += " " + r.name;
    }
    return {failed.empty() && secs < 60.0,
            format("%zu oracles, worst abs diff %.2e (<= 1e-12), %.1f CPU-s (< 60)%s", results.size(), worst, secs,
                   failed.empty() ? "" : (", failed:" + failed).c_str())};
  }

  Outcome uniform_start() {
    synth::GenConfig long_tracks;
    long_tracks.min_duration = long_tracks.max_duration = 8.0;
    const auto corpus = synth::gen_corpus(long_tracks, 4, kCorpusSeed);
    std::vector<const synth::Track*> tracks;
    for (const auto& t : corpus.tracks) tracks.push_back(&t);
    bool pass = true;
    std::string detail;
    for (std::size_t n : {2, 8, 40}) {
      auto enc = Encoders::build({}, kInitSeed);
      AveNetHead head;
      TrainConfig cfg = sync_config(Objective::kMultiway, kTrainSeed);
      cfg.n_way = n;
      cfg.epochs = 0;
      const double err = std::abs(train_sync(tracks, enc, head, cfg).initial_loss - std::log(static_cast<double>(n)));
      pass &= err < 1e-6;
      detail += format("N=%zu |loss-lnN|=%.1e; ", n, err);
    }
    const auto& words = word_corpus();
    auto subset = words.words_in("train");
    subset.resize(std::min<std::size_t>(subset.size(), 200));
    auto front = Encoders::build({}, kInitSeed);
    LipreadOptions opts;
    opts.epochs = 0;
    opts.seed = kTrainSeed;
    Tc5Config tc5;
    tc5.vocabulary = words.config.vocabulary;
    const double lip = train_lipread(subset, tc5, front, opts).initial_loss;
    const double lip_err = std::abs(lip - std::log(static_cast<double>(tc5.vocabulary)));
    pass &= lip_err < 0.05;
    detail += format("lipread V=%zu |loss-lnV|=%.1e (tolerances 1e-6 / 0.05)", tc5.vocabulary, lip_err);
    return {pass, detail};
  }

  Outcome chance_baseline() {
    const auto test = sync_corpus().tracks_in("test");
    const auto enc = Encoders::build({}, kInitSeed);
    const EncoderSyncModel model(enc);
    const double acc = sync_accuracy(test, 5, model, kTrials, kEvalSeed);
    return {acc >= 0.067 && acc <= 0.127,
            format("untrained K=5 accuracy %.1f%% over %zu trials (band [6.7%%, 12.7%%])", 100 * acc, kTrials)};
  }

  Outcome desk_learning() {
    const auto& m = multiway_model();
    return {m.k5_accuracy >= 0.85 && m.cpu_seconds <= 900.0,
            format("multiway N=8, %zu epochs: K=5 accuracy %.1f%% (>= 85%%), initial loss %.6f, %.1f CPU-s incl. "
                   "corpus, training and evaluation (<= 900)",
                   kSyncEpochs, 100 * m.k5_accuracy, m.initial_loss, m.cpu_seconds)};
  }

  Outcome table_trend() {
    const auto& m = multiway_model();
    const std::size_t ks[] = {5, 7, 9, 11, 13, 15};
    const auto rows = sync_accuracy_table(sync_corpus().tracks_in("test"), EncoderSyncModel(m.encoders), ks, kTrials,
                                          kEvalSeed);
    bool pass = true;
    std::string detail = "K:acc";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      detail += format(" %zu:%.1f%%", rows[i].context_frames, 100 * rows[i].accuracy());
      if (i > 0 && rows[i].accuracy() < rows[i - 1].accuracy() - 0.02) pass = false;
    }
    return {pass, detail + " (each step >= previous - 2 points)"};
  }

  Outcome objective_ordering() {
    const auto train = sync_corpus().tracks_in("train");
    const auto test = sync_corpus().tracks_in("test");
    std::vector<double> gaps, mw, ct;
    for (std::uint64_t s = 0; s < 3; ++s) {
      const auto accuracy = [&](Objective objective) {
        if (objective == Objective::kMultiway && s == 0) return multiway_model().k5_accuracy;
        auto enc = Encoders::build({}, kInitSeed + s);
        AveNetHead head;
        train_sync(train, enc, head, sync_config(objective, kTrainSeed + s));
        return sync_accuracy(test, 5, EncoderSyncModel(enc), kTrials, kEvalSeed);
      };
      mw.push_back(accuracy(Objective::kMultiway));
      ct.push_back(accuracy(Objective::kContrastive));
      gaps.push_back(mw.back() - ct.back());
    }
    const double gap = median(gaps);
    return {gap >= 0.05, format("K=5 multiway [%.1f %.1f %.1f]%% vs contrastive [%.1f %.1f %.1f]%%, median paired gap "
                                "%.1f points (>= 5)",
                                100 * mw[0], 100 * mw[1], 100 * mw[2], 100 * ct[0], 100 * ct[1], 100 * ct[2],
                                100 * gap)};
  }

  Outcome tradeoff_shape() {
    cli::RunConfig cfg;
    cfg.corpus = (scratch_ / "sweep_corpus").string();
    cfg.out = (scratch_ / "sweep_out").string();
    cfg.word_clips = 0;
    cfg.train.epochs = 1;
    cfg.train.examples_per_track = 2;
    cfg.trials = 200;
    cfg.N_list = {2, 5, 10, 20};
    std::ostringstream sink;
    cli::cmd_gen_data(cfg, sink);
    cli::cmd_sweep_n(cfg, sink);

    std::ifstream is(fs::path(cfg.out) / "sweep_n.csv");
    std::string line;
    std::getline(is, line);
    bool pass = line == "N,usable_clips,trials,accuracy";
    std::string detail = "N:usable:acc";
    std::optional<long> prev;
    std::size_t rows = 0;
    while (std::getline(is, line)) {
      long n = 0, usable = 0, trials = 0;
      double acc = NAN;
      if (std::sscanf(line.c_str(), "%ld,%ld,%ld,%lf", &n, &usable, &trials, &acc) != 4) {
        pass = false;
        break;
      }
      ++rows;
      detail += format(" %ld:%ld:%.1f%%", n, usable, 100 * acc);
      if (!std::isfinite(acc) || acc < 0.0 || acc > 1.0) pass = false;
      if (prev && usable > *prev) pass = false;
      prev = usable;
    }
    pass &= rows == cfg.N_list.size();
    return {pass, detail + " (usable non-increasing, accuracy finite)"};
  }

  Outcome lipreading() {
    const double t0 = cpu_seconds();
    const auto& words = word_corpus();
    const auto train = words.words_in("train");
    const auto test = words.words_in("test");
    Tc5Config tc5;
    tc5.vocabulary = words.config.vocabulary;
    LipreadOptions opts;
    opts.epochs = kLipEpochs;
    opts.seed = kTrainSeed;

    Encoders& pretrained = multiway_model().encoders;
    const auto pt = train_lipread(train, tc5, pretrained, opts);
    const double pt_acc = eval_wordacc(test, pretrained, pt.backend);

    tc5.mode = LipreadMode::kEndToEnd;
    auto fresh = Encoders::build({}, kInitSeed);
    const auto e2e = train_lipread(train, tc5, fresh, opts);
    const double e2e_acc = eval_wordacc(test, fresh, e2e.backend);
    const double secs = cpu_seconds() - t0 + word_corpus_seconds_;

    const double chance = 1.0 / static_cast<double>(tc5.vocabulary);
    const bool pass = std::abs(pt_acc - e2e_acc) <= 0.05 && pt_acc >= chance + 0.20 && secs < 1200.0 &&
                      words.words.size() == kWordClips && tc5.vocabulary == 10;
    return {pass, format("V=%zu, %zu clips: PT %.1f%% vs E2E %.1f%% (|diff| <= 5), chance %.1f%% (+20 needed), "
                         "%.1f CPU-s (< 1200)",
                         tc5.vocabulary, words.words.size(), 100 * pt_acc, 100 * e2e_acc, 100 * chance, secs)};
  }

  Outcome determinism() {
    const std::string steps[] = {
        "gen-data --tracks 12 --word_clips 40 --min_duration 2.8",
        "train --N 4 --epochs 1 --examples_per_track 1 --batch_size 4",
        "eval-sync --checkpoint out/checkpoint.ckpt --split train --trials 40 --K_list 5,9",
        "sweep-n --N_list 2,4 --epochs 1 --examples_per_track 1 --split train --trials 20",
        "eval-lipread --mode PT --checkpoint out/checkpoint.ckpt --lip_epochs 1 --tc_widths 8,8",
        "eval-lipread --mode E2E --lip_epochs 1 --tc_widths 8,8",
    };
    std::vector<std::map<std::string, std::string>> runs;
    for (const char* name : {"det_a", "det_b"}) {
      const fs::path dir = scratch_ / name;
      fs::create_directories(dir);
      for (const auto& step : steps) {
        const std::string cmd = "cd '" + dir.string() + "' && SYNCMATCH_SEED=5 '" SYNCMATCH_BIN "' " + step +
                                " >/dev/null 2>>log.txt";
        const int status = std::system(cmd.c_str());
        if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return {false, "command failed: " + step};
      }
      std::map<std::string, std::string> files;
      for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file() || e.path().filename() == "log.txt") continue;
        std::ifstream is(e.path(), std::ios::binary);
        files[fs::relative(e.path(), dir).string()] = {std::istreambuf_iterator<char>(is), {}};
      }
      runs.push_back(std::move(files));
    }
    std::size_t csv = 0, ckpt = 0;
    for (const auto& [name, bytes] : runs[0]) {
      csv += name.ends_with(".csv");
      ckpt += name.ends_with(".ckpt");
    }
    const bool same = runs[0] == runs[1];
    std::string diff;
    for (const auto& [name, bytes] : runs[0]) {
      const auto it = runs[1].find(name);
      if (it == runs[1].end() || it->second != bytes) diff += " " + name;
    }
    return {same && csv >= 6 && ckpt >= 4,
            format("6 commands run twice with SYNCMATCH_SEED=5: %zu files (%zu CSV, %zu checkpoints) %s", runs[0].size(),
                   csv, ckpt, same ? "byte-identical" : ("differ:" + diff).c_str())};
  }

 private:
  struct TrainedModel {
    Encoders encoders = Encoders::build({}, kInitSeed);
    double initial_loss = 0.0;
    double k5_accuracy = 0.0;
    double cpu_seconds = 0.0;
  };

  const synth::Corpus& sync_corpus() {
    if (!sync_corpus_) sync_corpus_ = synth::gen_corpus(synth::GenConfig{}, kTracks, kCorpusSeed);
    return *sync_corpus_;
  }

  const synth::Corpus& word_corpus() {
    if (!word_corpus_) {
      const double t0 = cpu_seconds();
      word_corpus_ = synth::gen_corpus(synth::GenConfig{}, 0, kCorpusSeed, kWordClips);
      word_corpus_seconds_ = cpu_seconds() - t0;
    }
    return *word_corpus_;
  }

  TrainedModel& multiway_model() {
    if (!model_) {
      const double t0 = cpu_seconds();
      model_.emplace();
      const auto& corpus = sync_corpus();
      AveNetHead head;
      model_->initial_loss =
          train_sync(corpus.tracks_in("train"), model_->encoders, head, sync_config(Objective::kMultiway, kTrainSeed))
              .initial_loss;
      model_->k5_accuracy =
          sync_accuracy(corpus.tracks_in("test"), 5, EncoderSyncModel(model_->encoders), kTrials, kEvalSeed);
      model_->cpu_seconds = cpu_seconds() - t0;
    }
    return *model_;
  }

  fs::path scratch_;
  std::optional<synth::Corpus> sync_corpus_;
  std::optional<synth::Corpus> word_corpus_;
  double word_corpus_seconds_ = 0.0;
  std::optional<TrainedModel> model_;
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  const fs::path scratch = fs::temp_directory_path() / ("syncmatch_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(scratch);
  fs::create_directories(scratch);
  Acceptance run(scratch);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient suite", [&] { return run.gradient_suite(); }},
      {"oracle suite", [&] { return run.oracle_suite(); }},
      {"uniform start", [&] { return run.uniform_start(); }},
      {"chance baseline", [&] { return run.chance_baseline(); }},
      {"desk sync learning", [&] { return run.desk_learning(); }},
      {"context-length trend", [&] { return run.table_trend(); }},
      {"objective ordering", [&] { return run.objective_ordering(); }},
      {"N trade-off shape", [&] { return run.tradeoff_shape(); }},
      {"pretrained lip-reading", [&] { return run.lipreading(); }},
      {"determinism", [&] { return run.determinism(); }},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  fs::remove_all(scratch);
  return failures == 0 ? 0 : 1;
}
