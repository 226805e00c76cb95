#include "syncmatch/objectives.hpp"

#include <algorithm>
#include <stdexcept>

#include "syncmatch/errors.hpp"

namespace syncmatch {

using ndgrad::Graph;
using ndgrad::Var;

std::string to_string(Objective o) {
  switch (o) {
    case Objective::kMultiway: return "multiway";
    case Objective::kContrastive: return "contrastive";
    case Objective::kAveNet: return "avenet";
  }
  return "unknown";
}

Objective parse_objective(std::string_view name) {
  if (name == "multiway") return Objective::kMultiway;
  if (name == "contrastive") return Objective::kContrastive;
  if (name == "avenet") return Objective::kAveNet;
  throw ConfigError("unknown objective '" + std::string(name) + "' (expected multiway, contrastive or avenet)");
}

std::string to_string(InverseMode m) { return m == InverseMode::kNegate ? "negate" : "reciprocal"; }

InverseMode parse_inverse_mode(std::string_view name) {
  if (name == "negate") return InverseMode::kNegate;
  if (name == "reciprocal") return InverseMode::kReciprocal;
  throw ConfigError("unknown inverse mode '" + std::string(name) + "' (expected negate or reciprocal)");
}

Var multiway_loss(Graph& g, Var video, std::span<const Var> audio, std::size_t target, InverseMode inverse) {
  if (audio.size() < 2) throw std::invalid_argument("multiway_loss: need at least 2 candidates (N >= 2)");
  if (target >= audio.size()) {
    throw std::out_of_range("multiway_loss: target " + std::to_string(target) + " outside [0, " +
                            std::to_string(audio.size()) + ")");
  }
  const Var distances = g.pairwise_euclidean(video, g.stack(audio));
  const Var logits = inverse == InverseMode::kNegate ? g.scale(distances, -1.0) : g.reciprocal(distances);
  return g.softmax_cross_entropy(logits, target);
}

std::size_t argmin_distance(std::span<const double> distances) {
  return static_cast<std::size_t>(std::min_element(distances.begin(), distances.end()) - distances.begin());
}

Var contrastive_loss(Graph& g, Var video, Var audio, bool matching, double margin) {
  if (!(margin > 0.0)) throw std::invalid_argument("contrastive_loss: margin must be positive");
  if (matching) return g.sum(g.square(g.sub(video, audio)));
  const auto& shape = g.shape(audio);
  const Var d = g.pairwise_euclidean(video, g.reshape(audio, {1, shape[0]}));
  return g.sum(g.square(g.relu(g.add_scalar(g.scale(d, -1.0), margin))));
}

Var avenet_distance(Graph& g, Var video, Var audio) {
  const Var vn = g.l2_normalize(video);
  const Var an = g.l2_normalize(audio);
  return g.pairwise_euclidean(vn, g.reshape(an, {1, g.shape(an)[0]}));
}

Var avenet_loss(Graph& g, Var video, Var audio, bool matching, Var head_weight, Var head_bias) {
  const Var s = avenet_distance(g, video, audio);
  const Var logits = g.dense(s, head_weight, head_bias);
  return g.softmax_cross_entropy(logits, matching ? kAveNetMatch : kAveNetMismatch);
}

AveNetHead::AveNetHead() {
  weight.values()[0] = -1.0;
  weight.values()[1] = 1.0;
  bias.values()[0] = 1.0;
  bias.values()[1] = -1.0;
}

}  // namespace syncmatch
