#pragma once

// Mini-batch training of the two streams under any of the three objectives.
//
// One example is one video anchor: N same-track audio candidates for the
// multi-way objective, a single matching/non-matching audio segment for the
// pairwise ones. Per-example gradients are accumulated in separate buffers
// and merged in example order, so results do not depend on thread count.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "syncmatch/adam.hpp"
#include "syncmatch/encoders.hpp"
#include "syncmatch/objectives.hpp"
#include "syncmatch/synthdata.hpp"

namespace syncmatch {

struct TrainConfig {
  Objective objective = Objective::kMultiway;
  std::size_t n_way = 8;
  InverseMode inverse = InverseMode::kNegate;
  double margin = 1.0;
  double p_match = 0.5;
  std::size_t epochs = 10;
  std::size_t batch_size = 16;
  std::size_t examples_per_track = 8;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

/// Tracks long enough for one example of the configured objective.
std::vector<const synth::Track*> trainable_tracks(std::span<const synth::Track* const> tracks, const TrainConfig& cfg);

struct TrainResult {
  double initial_loss = 0.0;       // mean loss of the first epoch's draws before any update
  std::vector<double> loss_trace;  // mean training loss per epoch
};

using EpochCallback = std::function<void(std::size_t epoch, double mean_loss)>;

/// Trains `encoders` (and `head` for the AVE-Net objective) in place.
TrainResult train_sync(std::span<const synth::Track* const> tracks, Encoders& encoders, AveNetHead& head,
                       const TrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace syncmatch
