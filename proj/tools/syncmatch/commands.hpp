#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "syncmatch/encoders.hpp"
#include "syncmatch/lipread.hpp"
#include "syncmatch/synthdata.hpp"
#include "syncmatch/training.hpp"

namespace syncmatch::cli {

/// Every key of a run. The config file and the command line share names.
struct RunConfig {
  std::string corpus = "corpus";
  std::string out = "out";
  std::string checkpoint;

  std::uint64_t seed = 1;        // corpus generation
  std::uint64_t init_seed = 7;   // network initialization
  std::uint64_t train_seed = 11;
  std::uint64_t eval_seed = 13;

  std::size_t tracks = 200;
  std::size_t word_clips = 2000;
  synth::GenConfig gen;

  EncoderConfig encoder;
  TrainConfig train;

  std::vector<std::size_t> K_list{5, 7, 9, 11, 13, 15};
  std::vector<std::size_t> N_list{2, 5, 10, 20};
  std::size_t trials = 1000;
  std::string split = "test";

  std::string mode = "PT";
  Tc5Config tc5;
  LipreadOptions lipread;
};

/// SYNCMATCH_SEED, when set, replaces every seed in the run.
void apply_seed_override(RunConfig& cfg, const char* env_value);

void cmd_gen_data(const RunConfig& cfg, std::ostream& log);
void cmd_train(const RunConfig& cfg, std::ostream& log);
void cmd_eval_sync(const RunConfig& cfg, std::ostream& log);
void cmd_sweep_n(const RunConfig& cfg, std::ostream& log);
void cmd_eval_lipread(const RunConfig& cfg, std::ostream& log);
/// Returns true when every check passes.
bool cmd_selftest(const RunConfig& cfg, std::ostream& log);

}  // namespace syncmatch::cli
