#pragma once

// TC-5 word classifier: the visual stream applied at stride 1 over 5-frame
// windows, two same-padded temporal convolutions with ReLU, mean pooling
// over time, and a V-way linear classifier.
//
// PT mode keeps the visual front-end frozen (its features can be extracted
// once up front); E2E mode trains front-end and back-end jointly.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "syncmatch/encoders.hpp"
#include "syncmatch/ndgrad.hpp"
#include "syncmatch/synthdata.hpp"

namespace syncmatch {

enum class LipreadMode { kPretrained, kEndToEnd };

std::string to_string(LipreadMode m);  // "PT" / "E2E"
LipreadMode parse_lipread_mode(std::string_view s);

struct Tc5Config {
  std::vector<std::size_t> widths{128, 128};
  std::vector<std::size_t> kernels{3, 3};
  std::size_t vocabulary = 10;
  LipreadMode mode = LipreadMode::kPretrained;

  void validate() const;
};

class Tc5Backend {
 public:
  /// Temporal convs He-initialized; the classifier starts at zero so the
  /// untrained softmax is uniform.
  static Tc5Backend build(const Tc5Config& cfg, std::size_t embed_dim, std::uint64_t seed);

  const Tc5Config& config() const noexcept { return cfg_; }
  std::size_t embed_dim() const noexcept { return embed_dim_; }
  std::vector<ndgrad::Parameter*> parameters();
  const std::vector<ndgrad::Parameter>& params() const noexcept { return params_; }

  std::vector<ndgrad::Var> bind(ndgrad::Graph& g, GradMode mode);
  std::vector<ndgrad::Var> bind_frozen(ndgrad::Graph& g) const;

  /// features: [T', embed_dim] -> logits [V].
  ndgrad::Var forward(ndgrad::Graph& g, std::span<const ndgrad::Var> bound, ndgrad::Var features) const;

 private:
  Tc5Config cfg_;
  std::size_t embed_dim_ = 0;
  std::vector<ndgrad::Parameter> params_;
};

/// Feature windows of a clip: frames - 4 at stride 1.
std::size_t window_count(const VideoClip& clip);

/// [T', embed_dim] features through a bound visual stream.
ndgrad::Var clip_features(ndgrad::Graph& g, const Encoders& front, const Encoders::Bound& bound, const VideoClip& clip);

/// Frozen-front-end features, row-major [T', embed_dim].
std::vector<double> extract_features(const Encoders& front, const VideoClip& clip);

/// Full TC-5 forward. In PT mode the front-end is bound as constants and gets
/// no gradient; in E2E mode it is trainable.
ndgrad::Var tc5_forward(ndgrad::Graph& g, const VideoClip& clip, Encoders& front, Tc5Backend& back, LipreadMode mode);

struct LipreadOptions {
  std::size_t epochs = 10;
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

struct LipreadResult {
  Tc5Backend backend;
  double initial_loss = 0.0;
  std::vector<double> loss_trace;  // mean training loss per epoch
};

/// Cross-entropy training. In E2E mode `front` is updated in place.
LipreadResult train_lipread(std::span<const synth::WordClip* const> dataset, const Tc5Config& cfg, Encoders& front,
                            const LipreadOptions& options);

/// Top-1 accuracy.
double eval_wordacc(std::span<const synth::WordClip* const> dataset, const Encoders& front, const Tc5Backend& back);

}  // namespace syncmatch
