#pragma once

// The three audio-visual training objectives:
//   multiway    - one video embedding against N same-track audio embeddings,
//                 cross-entropy over softmax of the negated distances;
//   contrastive - pairwise, d^2 for matching pairs, max(margin - d, 0)^2 otherwise;
//   avenet      - pairwise, distance between L2-normalized embeddings fed to a
//                 1->2 affine head and a 2-way softmax.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include "syncmatch/ndgrad.hpp"

namespace syncmatch {

enum class Objective { kMultiway, kContrastive, kAveNet };

std::string to_string(Objective o);
Objective parse_objective(std::string_view name);

/// How distances become similarity logits for the multi-way softmax.
enum class InverseMode {
  kNegate,      // logits = -d
  kReciprocal,  // logits = 1 / d
};

std::string to_string(InverseMode m);
InverseMode parse_inverse_mode(std::string_view name);

ndgrad::Var multiway_loss(ndgrad::Graph& g, ndgrad::Var video, std::span<const ndgrad::Var> audio,
                          std::size_t target, InverseMode inverse = InverseMode::kNegate);

/// Index of the smallest distance (first on ties) - the multi-way prediction.
std::size_t argmin_distance(std::span<const double> distances);

ndgrad::Var contrastive_loss(ndgrad::Graph& g, ndgrad::Var video, ndgrad::Var audio, bool matching,
                             double margin = 1.0);

/// AVE-Net head output classes.
inline constexpr std::size_t kAveNetMatch = 0;
inline constexpr std::size_t kAveNetMismatch = 1;

/// Distance in [0, 2] between the L2-normalized embeddings, shape [1].
ndgrad::Var avenet_distance(ndgrad::Graph& g, ndgrad::Var video, ndgrad::Var audio);

ndgrad::Var avenet_loss(ndgrad::Graph& g, ndgrad::Var video, ndgrad::Var audio, bool matching,
                        ndgrad::Var head_weight, ndgrad::Var head_bias);

/// 1->2 affine head of the AVE-Net objective.
struct AveNetHead {
  ndgrad::Parameter weight{"avenet.head.weight", {2, 1}};
  ndgrad::Parameter bias{"avenet.head.bias", {2}};

  /// Starts with a decision threshold at distance 1 (mid-range of [0, 2]).
  AveNetHead();
};

}  // namespace syncmatch
