#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "syncmatch/checkpoint.hpp"
#include "syncmatch/errors.hpp"
#include "syncmatch/ndgrad.hpp"

namespace {

using syncmatch::cli::RunConfig;

enum Exit : int { kOk = 0, kInternal = 1, kUsage = 2, kIo = 3, kData = 4, kCheckpoint = 5, kSelftest = 6 };

int fail(int code, const std::string& category, const std::string& message) {
  std::string flat = message;
  for (char& c : flat)
    if (c == '\n' || c == '\r') c = ' ';
  for (std::size_t i = flat.find('"'); i != std::string::npos; i = flat.find('"', i + 2)) flat.insert(i, 1, '\\');
  std::cerr << "error category=" << category << " message=\"" << flat << "\"\n";
  return code;
}

// String-valued views of enum keys; converted after parsing.
struct EnumKeys {
  std::string objective = "multiway";
  std::string inverse = "negate";
};

void add_keys(CLI::App& app, RunConfig& c, EnumKeys& e, std::string& config_path) {
  app.add_option("--config", config_path, "TOML/INI run configuration; flags override its keys");
  app.add_option("--corpus", c.corpus, "corpus directory")->capture_default_str();
  app.add_option("--out", c.out, "output directory")->capture_default_str();
  app.add_option("--checkpoint", c.checkpoint, "checkpoint to load");

  app.add_option("--seed", c.seed, "corpus generation seed")->capture_default_str();
  app.add_option("--init_seed", c.init_seed, "network initialization seed")->capture_default_str();
  app.add_option("--train_seed", c.train_seed, "training sampler seed")->capture_default_str();
  app.add_option("--eval_seed", c.eval_seed, "evaluation trial seed")->capture_default_str();

  app.add_option("--tracks", c.tracks, "number of tracks")->capture_default_str();
  app.add_option("--word_clips", c.word_clips, "number of labelled word clips")->capture_default_str();
  app.add_option("--sample_rate", c.gen.sample_rate, "audio sample rate (Hz)")->capture_default_str();
  app.add_option("--alphabet_size", c.gen.alphabet_size, "latent symbols")->capture_default_str();
  app.add_option("--blank_symbol", c.gen.blank_symbol, "symbol 0 is silent and still")->capture_default_str();
  app.add_option("--min_duration", c.gen.min_duration, "shortest track (s)")->capture_default_str();
  app.add_option("--max_duration", c.gen.max_duration, "longest track (s)")->capture_default_str();
  app.add_option("--resolution", c.gen.resolution, "frame height and width")->capture_default_str();
  app.add_option("--rgb", c.gen.rgb, "colour frames")->capture_default_str();
  app.add_option("--audio_noise", c.gen.audio_noise, "audio noise std")->capture_default_str();
  app.add_option("--video_noise", c.gen.video_noise, "pixel noise std")->capture_default_str();
  app.add_option("--vocabulary", c.gen.vocabulary, "word classes")->capture_default_str();
  app.add_option("--word_length", c.gen.word_length, "symbols per word")->capture_default_str();

  app.add_option("--embed_dim", c.encoder.embed_dim, "embedding width")->capture_default_str();
  app.add_option("--audio_channels", c.encoder.audio_channels, "audio conv widths")->delimiter(',')->capture_default_str();
  app.add_option("--visual_channels", c.encoder.visual_channels, "visual conv widths")->delimiter(',')->capture_default_str();

  app.add_option("--objective", e.objective, "multiway | contrastive | avenet")->capture_default_str();
  app.add_option("--N", c.train.n_way, "multi-way candidates")->capture_default_str();
  app.add_option("--inverse", e.inverse, "negate | reciprocal")->capture_default_str();
  app.add_option("--margin", c.train.margin, "contrastive margin")->capture_default_str();
  app.add_option("--p_match", c.train.p_match, "matching-pair probability")->capture_default_str();
  app.add_option("--epochs", c.train.epochs, "training epochs")->capture_default_str();
  app.add_option("--batch_size", c.train.batch_size, "examples per step")->capture_default_str();
  app.add_option("--examples_per_track", c.train.examples_per_track, "draws per track per epoch")->capture_default_str();
  app.add_option("--learning_rate", c.train.learning_rate, "Adam step size")->capture_default_str();

  app.add_option("--K_list", c.K_list, "context lengths (frames)")->delimiter(',')->capture_default_str();
  app.add_option("--N_list", c.N_list, "N values to sweep")->delimiter(',')->capture_default_str();
  app.add_option("--trials", c.trials, "evaluation trials")->capture_default_str();
  app.add_option("--split", c.split, "evaluation split")->capture_default_str();

  app.add_option("--mode", c.mode, "PT | E2E")->capture_default_str();
  app.add_option("--tc_widths", c.tc5.widths, "temporal conv widths")->delimiter(',')->capture_default_str();
  app.add_option("--tc_kernels", c.tc5.kernels, "temporal conv kernels")->delimiter(',')->capture_default_str();
  app.add_option("--lip_epochs", c.lipread.epochs, "lip-reading epochs")->capture_default_str();
  app.add_option("--lip_batch_size", c.lipread.batch_size, "lip-reading batch")->capture_default_str();
  app.add_option("--lip_learning_rate", c.lipread.learning_rate, "lip-reading Adam step size")->capture_default_str();
}

// Config-file keys fill every option the command line left unset. Keys may sit
// at top level or under a [<subcommand>] section.
void apply_config_file(CLI::App& sub, const std::string& path) {
  if (!std::filesystem::is_regular_file(path)) throw syncmatch::IoError("config file '" + path + "' does not exist");
  for (const auto& item : CLI::ConfigTOML().from_file(path)) {
    if (item.name == "++" || item.name == "--") continue;
    if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents.front() == sub.get_name())) continue;
    CLI::Option* opt = sub.get_option_no_throw("--" + item.name);
    if (opt == nullptr || item.name == "config") {
      throw syncmatch::ConfigError("unknown key '" + item.fullname() + "' in config file '" + path + "'");
    }
    if (opt->count() > 0) continue;
    opt->add_result(item.inputs);
    opt->run_callback();
  }
}

void finalize(RunConfig& c, const EnumKeys& e) {
  c.train.objective = syncmatch::parse_objective(e.objective);
  c.train.inverse = syncmatch::parse_inverse_mode(e.inverse);
  c.encoder.visual_resolution = c.gen.resolution;
  c.encoder.rgb = c.gen.rgb;
  c.tc5.vocabulary = c.gen.vocabulary;
  syncmatch::cli::apply_seed_override(c, std::getenv("SYNCMATCH_SEED"));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Audio-visual synchronisation by multi-way matching"};
  app.require_subcommand(1);
  RunConfig cfg;
  EnumKeys keys;

  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub subs[] = {{"gen-data", "generate a synthetic corpus"},
                      {"train", "train the two streams"},
                      {"eval-sync", "offset-detection accuracy per context length"},
                      {"sweep-n", "usable clips and accuracy for each N"},
                      {"eval-lipread", "train and score the TC-5 word classifier"},
                      {"selftest", "gradient checks and brute-force oracles"}};
  std::string config_path;
  for (const auto& s : subs) add_keys(*app.add_subcommand(s.name, s.help), cfg, keys, config_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(kUsage, "usage", e.what());
  }

  CLI::App& sub = *app.get_subcommands().front();
  const std::string cmd = sub.get_name();
  try {
    if (!config_path.empty()) {
      try {
        apply_config_file(sub, config_path);
      } catch (const CLI::ParseError& e) {
        return fail(kUsage, "config", std::string("config file '") + config_path + "': " + e.what());
      }
    }
    finalize(cfg, keys);
    if (cmd == "gen-data") syncmatch::cli::cmd_gen_data(cfg, std::cerr);
    if (cmd == "train") syncmatch::cli::cmd_train(cfg, std::cerr);
    if (cmd == "eval-sync") syncmatch::cli::cmd_eval_sync(cfg, std::cout);
    if (cmd == "sweep-n") syncmatch::cli::cmd_sweep_n(cfg, std::cout);
    if (cmd == "eval-lipread") syncmatch::cli::cmd_eval_lipread(cfg, std::cout);
    if (cmd == "selftest" && !syncmatch::cli::cmd_selftest(cfg, std::cout)) {
      return fail(kSelftest, "selftest", "one or more checks failed");
    }
  } catch (const syncmatch::ConfigError& e) {
    return fail(kUsage, "config", e.what());
  } catch (const syncmatch::IoError& e) {
    return fail(kIo, "io", e.what());
  } catch (const syncmatch::DataError& e) {
    return fail(kData, "data", e.what());
  } catch (const syncmatch::CheckpointError& e) {
    return fail(kCheckpoint, "checkpoint", e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(kData, "data", e.what());
  } catch (const std::invalid_argument& e) {
    return fail(kUsage, "config", e.what());
  } catch (const std::exception& e) {
    return fail(kInternal, "internal", e.what());
  }
  return kOk;
}
