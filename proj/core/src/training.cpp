#include "syncmatch/training.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "syncmatch/errors.hpp"
#include "syncmatch/parallel.hpp"
#include "syncmatch/rng.hpp"
#include "syncmatch/sampling.hpp"

namespace syncmatch {

using ndgrad::Graph;
using ndgrad::Var;

void TrainConfig::validate() const {
  if (objective == Objective::kMultiway && n_way < 2) {
    throw ConfigError("N must be at least 2 for the multiway objective, got " + std::to_string(n_way));
  }
  if (!(margin > 0.0)) throw ConfigError("margin must be positive");
  if (!(p_match >= 0.0 && p_match <= 1.0)) throw ConfigError("p_match must lie in [0, 1]");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (examples_per_track == 0) throw ConfigError("examples_per_track must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"objective", to_string(c.objective)},
                     {"N", c.n_way},
                     {"inverse", to_string(c.inverse)},
                     {"margin", c.margin},
                     {"p_match", c.p_match},
                     {"epochs", c.epochs},
                     {"batch_size", c.batch_size},
                     {"examples_per_track", c.examples_per_track},
                     {"learning_rate", c.learning_rate},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  TrainConfig d;
  c.objective = parse_objective(j.value("objective", to_string(d.objective)));
  c.n_way = j.value("N", d.n_way);
  c.inverse = parse_inverse_mode(j.value("inverse", to_string(d.inverse)));
  c.margin = j.value("margin", d.margin);
  c.p_match = j.value("p_match", d.p_match);
  c.epochs = j.value("epochs", d.epochs);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.examples_per_track = j.value("examples_per_track", d.examples_per_track);
  c.learning_rate = j.value("learning_rate", d.learning_rate);
  c.seed = j.value("seed", d.seed);
}

std::vector<const synth::Track*> trainable_tracks(std::span<const synth::Track* const> tracks,
                                                  const TrainConfig& cfg) {
  std::vector<const synth::Track*> out;
  for (const auto* t : tracks) {
    const auto view = TrackView::of(*t);
    const bool ok = cfg.objective == Objective::kMultiway ? usable_for_N(view, cfg.n_way)
                                                          : view.video_frames >= 2 * kFramesPerStack;
    if (ok) out.push_back(t);
  }
  return out;
}

namespace {

// MFCC maps of every 0.2 s audio segment a track can supply, keyed by its
// start frame. Filled once before training; read-only afterwards.
class MfccCache {
 public:
  MfccCache(std::span<const synth::Track* const> tracks, int sample_rate) {
    const dsp::MfccExtractor mfcc(sample_rate);
    std::vector<std::vector<dsp::MfccWindow>> windows(tracks.size());
    parallel_for(tracks.size(), [&](std::size_t i) {
      const std::size_t n = tracks[i]->frames() - kFramesPerStack + 1;
      windows[i].reserve(n);
      for (std::size_t s = 0; s < n; ++s) windows[i].push_back(mfcc(audio_segment(tracks[i]->waveform, s)));
    });
    for (std::size_t i = 0; i < tracks.size(); ++i) cache_.emplace(tracks[i], std::move(windows[i]));
  }

  const dsp::MfccWindow& at(const synth::Track* t, std::size_t start) const { return cache_.at(t).at(start); }

 private:
  std::map<const synth::Track*, std::vector<dsp::MfccWindow>> cache_;
};

struct Draw {
  MultiwaySample multiway;
  PairSample pair;
};

std::vector<Draw> draw_epoch(std::span<const synth::Track* const> tracks, const TrainConfig& cfg,
                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Draw> draws;
  draws.reserve(tracks.size() * cfg.examples_per_track);
  for (const auto* t : tracks) {
    const auto view = TrackView::of(*t);
    for (std::size_t k = 0; k < cfg.examples_per_track; ++k) {
      Draw d;
      if (cfg.objective == Objective::kMultiway) {
        d.multiway = sample_multiway(view, cfg.n_way, rng);
      } else {
        d.pair = sample_pair(view, rng, cfg.p_match);
      }
      draws.push_back(std::move(d));
    }
  }
  std::shuffle(draws.begin(), draws.end(), rng);
  return draws;
}

}  // namespace

TrainResult train_sync(std::span<const synth::Track* const> tracks, Encoders& encoders, AveNetHead& head,
                       const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  const auto usable = trainable_tracks(tracks, cfg);
  if (usable.empty()) {
    if (cfg.objective == Objective::kMultiway) {
      throw DataError("no track satisfies usable_for_N(N=" + std::to_string(cfg.n_way) + "): need at least " +
                      std::to_string(cfg.n_way * kFramesPerStack) + " frames of audio and video");
    }
    throw DataError("no track has the 10 frames a pairwise example needs");
  }

  const int sample_rate = usable.front()->waveform.sample_rate;
  const MfccCache mfcc(usable, sample_rate);

  std::vector<ndgrad::Parameter*> params = encoders.parameters();
  const bool avenet = cfg.objective == Objective::kAveNet;
  if (avenet) {
    params.push_back(&head.weight);
    params.push_back(&head.bias);
  }
  ndgrad::AdamState adam(params, ndgrad::AdamOptions{cfg.learning_rate});

  auto example_loss = [&](const Draw& d, ndgrad::GradientBuffer* sink) {
    Graph g;
    const auto mode = sink ? GradMode::kTrainable : GradMode::kFrozen;
    const auto bound = sink ? encoders.bind(g, mode, mode) : encoders.bind_frozen(g);
    Var loss;
    if (cfg.objective == Objective::kMultiway) {
      const auto& s = d.multiway;
      const Var video = encoders.visual_forward(g, bound, stack_frames(s.track->video, s.anchor));
      std::vector<Var> audio;
      audio.reserve(s.candidates.size());
      for (std::size_t c : s.candidates) audio.push_back(encoders.audio_forward(g, bound, mfcc.at(s.track, c)));
      loss = multiway_loss(g, video, audio, s.target, cfg.inverse);
    } else {
      const auto& s = d.pair;
      const Var video = encoders.visual_forward(g, bound, stack_frames(s.track->video, s.anchor));
      const Var audio = encoders.audio_forward(g, bound, mfcc.at(s.track, s.audio));
      if (avenet) {
        const Var w = sink ? g.param(head.weight) : g.frozen(head.weight);
        const Var b = sink ? g.param(head.bias) : g.frozen(head.bias);
        loss = avenet_loss(g, video, audio, s.matching, w, b);
      } else {
        loss = contrastive_loss(g, video, audio, s.matching, cfg.margin);
      }
    }
    const double value = g.item(loss);
    if (sink) g.backward(loss, *sink);
    return value;
  };

  auto epoch_draws = [&](std::size_t epoch) { return draw_epoch(usable, cfg, derive_seed(cfg.seed, {0x5eed, epoch})); };

  TrainResult result;
  {
    const auto draws = epoch_draws(0);
    std::vector<double> losses(draws.size());
    parallel_for(draws.size(), [&](std::size_t i) { losses[i] = example_loss(draws[i], nullptr); });
    result.initial_loss = std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
  }
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto draws = epoch_draws(epoch);
    double total = 0.0;
    for (std::size_t b = 0; b < draws.size(); b += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, draws.size() - b);
      std::vector<ndgrad::GradientBuffer> sinks(n, ndgrad::GradientBuffer(params));
      std::vector<double> losses(n);
      parallel_for(n, [&](std::size_t j) { losses[j] = example_loss(draws[b + j], &sinks[j]); });
      for (std::size_t j = 1; j < n; ++j) sinks[0].merge(sinks[j]);
      sinks[0].apply(1.0 / static_cast<double>(n));
      ndgrad::adam_step(params, adam);
      for (double l : losses) total += l;
    }
    const double mean = total / static_cast<double>(draws.size());
    if (!std::isfinite(mean)) throw DataError("training diverged: non-finite loss in epoch " + std::to_string(epoch));
    result.loss_trace.push_back(mean);
    if (on_epoch) on_epoch(epoch, mean);
  }
  return result;
}

}  // namespace syncmatch
