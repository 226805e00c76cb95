#include "syncmatch/lipread.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "syncmatch/adam.hpp"
#include "syncmatch/errors.hpp"
#include "syncmatch/parallel.hpp"
#include "syncmatch/rng.hpp"

namespace syncmatch {

using ndgrad::Graph;
using ndgrad::Parameter;
using ndgrad::Var;

std::string to_string(LipreadMode m) { return m == LipreadMode::kPretrained ? "PT" : "E2E"; }

LipreadMode parse_lipread_mode(std::string_view s) {
  if (s == "PT" || s == "pt") return LipreadMode::kPretrained;
  if (s == "E2E" || s == "e2e") return LipreadMode::kEndToEnd;
  throw ConfigError("unknown lipread mode '" + std::string(s) + "' (expected PT or E2E)");
}

void Tc5Config::validate() const {
  if (widths.size() != 2 || kernels.size() != 2) throw ConfigError("TC-5 needs exactly 2 temporal conv layers");
  for (auto w : widths)
    if (w == 0) throw ConfigError("TC-5 conv widths must be positive");
  for (auto k : kernels)
    if (k % 2 == 0) throw ConfigError("TC-5 kernels must be odd for same padding");
  if (vocabulary < 2) throw ConfigError("vocabulary must be at least 2");
}

Tc5Backend Tc5Backend::build(const Tc5Config& cfg, std::size_t embed_dim, std::uint64_t seed) {
  cfg.validate();
  Tc5Backend b;
  b.cfg_ = cfg;
  b.embed_dim_ = embed_dim;
  std::mt19937_64 rng(seed);
  std::size_t in = embed_dim;
  for (std::size_t i = 0; i < 2; ++i) {
    const std::string name = "tc5.tconv" + std::to_string(i + 1);
    b.params_.emplace_back(name + ".weight", ndgrad::Shape{cfg.widths[i], in, 1, cfg.kernels[i]});
    std::normal_distribution<double> he(0.0, std::sqrt(2.0 / static_cast<double>(in * cfg.kernels[i])));
    for (double& v : b.params_.back().values()) v = he(rng);
    b.params_.emplace_back(name + ".bias", ndgrad::Shape{cfg.widths[i]});
    in = cfg.widths[i];
  }
  b.params_.emplace_back("tc5.fc.weight", ndgrad::Shape{cfg.vocabulary, in});
  b.params_.emplace_back("tc5.fc.bias", ndgrad::Shape{cfg.vocabulary});
  return b;
}

std::vector<Parameter*> Tc5Backend::parameters() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(&p);
  return out;
}

std::vector<Var> Tc5Backend::bind(Graph& g, GradMode mode) {
  std::vector<Var> out;
  for (auto& p : params_) out.push_back(mode == GradMode::kTrainable ? g.param(p) : g.frozen(p));
  return out;
}

std::vector<Var> Tc5Backend::bind_frozen(Graph& g) const {
  std::vector<Var> out;
  for (const auto& p : params_) out.push_back(g.frozen(p));
  return out;
}

Var Tc5Backend::forward(Graph& g, std::span<const Var> bound, Var features) const {
  const auto& shape = g.shape(features);
  if (shape.size() != 2 || shape[1] != embed_dim_) {
    throw ndgrad::ShapeError("tc5: expected [T, " + std::to_string(embed_dim_) + "] features, got " +
                             ndgrad::to_string(shape));
  }
  const std::size_t t = shape[0];
  Var x = g.reshape(g.transpose(features), {embed_dim_, 1, t});
  for (std::size_t i = 0; i < 2; ++i) {
    const ndgrad::Conv2dOptions same{1, 1, 0, cfg_.kernels[i] / 2};
    x = g.relu(g.conv2d(x, bound[2 * i], bound[2 * i + 1], same));
  }
  x = g.mean_last_axis(g.reshape(x, {cfg_.widths[1], t}));
  return g.dense(x, bound[4], bound[5]);
}

std::size_t window_count(const VideoClip& clip) {
  if (clip.frames < kFramesPerStack) {
    throw DataError("word clip of " + std::to_string(clip.frames) + " frames is shorter than one 5-frame window");
  }
  return clip.frames - kFramesPerStack + 1;
}

Var clip_features(Graph& g, const Encoders& front, const Encoders::Bound& bound, const VideoClip& clip) {
  const std::size_t n = window_count(clip);
  std::vector<Var> rows;
  rows.reserve(n);
  for (std::size_t s = 0; s < n; ++s) rows.push_back(front.visual_forward(g, bound, stack_frames(clip, s)));
  return g.stack(rows);
}

std::vector<double> extract_features(const Encoders& front, const VideoClip& clip) {
  Graph g;
  const auto bound = front.bind_frozen(g);
  auto v = g.values(clip_features(g, front, bound, clip));
  return {v.begin(), v.end()};
}

Var tc5_forward(Graph& g, const VideoClip& clip, Encoders& front, Tc5Backend& back, LipreadMode mode) {
  Encoders::Bound fb;
  if (mode == LipreadMode::kEndToEnd) {
    for (auto* p : front.visual_parameters()) fb.visual.push_back(g.param(*p));
  } else {
    for (const auto& p : front.visual_params()) fb.visual.push_back(g.frozen(p));
  }
  const auto bb = back.bind(g, GradMode::kTrainable);
  return back.forward(g, bb, clip_features(g, front, fb, clip));
}

LipreadResult train_lipread(std::span<const synth::WordClip* const> dataset, const Tc5Config& cfg, Encoders& front,
                            const LipreadOptions& options) {
  cfg.validate();
  if (dataset.empty()) throw DataError("train_lipread: empty dataset");
  for (const auto* clip : dataset) {
    if (clip->label >= cfg.vocabulary) {
      throw DataError("train_lipread: clip '" + clip->id + "' has label " + std::to_string(clip->label) +
                      " outside vocabulary of " + std::to_string(cfg.vocabulary));
    }
    window_count(clip->video);
  }
  if (options.batch_size == 0) throw ConfigError("batch_size must be positive");

  const bool e2e = cfg.mode == LipreadMode::kEndToEnd;
  const std::size_t dim = front.config().embed_dim;
  LipreadResult result{Tc5Backend::build(cfg, dim, derive_seed(options.seed, {0x7c5})), 0.0, {}};
  Tc5Backend& back = result.backend;

  std::vector<Parameter*> params = back.parameters();
  if (e2e) {
    auto fp = front.visual_parameters();
    params.insert(params.end(), fp.begin(), fp.end());
  }
  ndgrad::AdamState adam(params, ndgrad::AdamOptions{options.learning_rate});

  // PT: the frozen front-end's features are computed once.
  std::vector<std::vector<double>> cached(dataset.size());
  if (!e2e) {
    parallel_for(dataset.size(), [&](std::size_t i) { cached[i] = extract_features(front, dataset[i]->video); });
  }

  auto example_loss = [&](std::size_t i, ndgrad::GradientBuffer* sink) {
    Graph g;
    Var logits;
    if (e2e) {
      logits = tc5_forward(g, dataset[i]->video, front, back, LipreadMode::kEndToEnd);
    } else {
      const auto bb = back.bind(g, GradMode::kTrainable);
      const Var feats = g.input({cached[i].size() / dim, dim}, cached[i]);
      logits = back.forward(g, bb, feats);
    }
    const Var loss = g.softmax_cross_entropy(logits, dataset[i]->label);
    const double value = g.item(loss);
    if (sink) g.backward(loss, *sink);
    return value;
  };

  {
    std::vector<double> losses(dataset.size());
    parallel_for(dataset.size(), [&](std::size_t i) { losses[i] = example_loss(i, nullptr); });
    result.initial_loss = std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
  }

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(derive_seed(options.seed, {0x0de5}));
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t b = 0; b < order.size(); b += options.batch_size) {
      const std::size_t n = std::min(options.batch_size, order.size() - b);
      std::vector<ndgrad::GradientBuffer> sinks(n, ndgrad::GradientBuffer(params));
      std::vector<double> losses(n);
      parallel_for(n, [&](std::size_t j) { losses[j] = example_loss(order[b + j], &sinks[j]); });
      for (std::size_t j = 1; j < n; ++j) sinks[0].merge(sinks[j]);
      sinks[0].apply(1.0 / static_cast<double>(n));
      ndgrad::adam_step(params, adam);
      for (double l : losses) total += l;
    }
    result.loss_trace.push_back(total / static_cast<double>(order.size()));
  }
  return result;
}

double eval_wordacc(std::span<const synth::WordClip* const> dataset, const Encoders& front, const Tc5Backend& back) {
  if (dataset.empty()) return 0.0;
  std::vector<int> hit(dataset.size(), 0);
  parallel_for(dataset.size(), [&](std::size_t i) {
    Graph g;
    const auto fb = front.bind_frozen(g);
    const auto bb = back.bind_frozen(g);
    const auto logits = g.values(back.forward(g, bb, clip_features(g, front, fb, dataset[i]->video)));
    const auto top = static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
    hit[i] = top == dataset[i]->label ? 1 : 0;
  });
  return static_cast<double>(std::accumulate(hit.begin(), hit.end(), 0)) / static_cast<double>(dataset.size());
}

}  // namespace syncmatch
