#pragma once

// Audio and visual trunk streams at desk scale.
//
// Audio: 13x20 MFCC map -> [conv3x3 -> relu -> maxpool2] x L -> dense.
// Visual: 5 stacked frames -> conv 7x7/2 over all 5*C channels (the 5x7x7
// spatio-temporal first layer, since its temporal extent covers the whole
// stack) -> relu -> maxpool2 -> [conv3x3 -> relu -> maxpool2] x (L-1) -> dense.
//
// The audio projection starts with zero weights and a random bias, so every
// untrained audio embedding is the same vector. Distances from any video
// embedding to all candidates are then equal at initialization.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "syncmatch/dsp.hpp"
#include "syncmatch/ndgrad.hpp"
#include "syncmatch/video.hpp"

namespace syncmatch {

struct EncoderConfig {
  std::size_t embed_dim = 64;
  std::vector<std::size_t> audio_channels{16, 32};
  std::vector<std::size_t> visual_channels{16, 32};
  std::size_t visual_resolution = 32;
  std::size_t frames_per_stack = kFramesPerStack;
  bool rgb = true;

  std::size_t channels_per_frame() const noexcept { return rgb ? 3 : 1; }
  void validate() const;

  bool operator==(const EncoderConfig&) const = default;
};

void to_json(nlohmann::json& j, const EncoderConfig& c);
void from_json(const nlohmann::json& j, EncoderConfig& c);

inline constexpr std::size_t kMfccCoeffs = 13;
inline constexpr std::size_t kMfccFrames = 20;

using Embedding = std::vector<double>;

enum class GradMode { kTrainable, kFrozen };

class Encoders {
 public:
  /// He-initialized parameters, reproducible from the seed.
  static Encoders build(const EncoderConfig& cfg, std::uint64_t seed);

  const EncoderConfig& config() const noexcept { return cfg_; }

  std::vector<ndgrad::Parameter*> parameters();
  std::vector<ndgrad::Parameter*> audio_parameters();
  std::vector<ndgrad::Parameter*> visual_parameters();
  const std::vector<ndgrad::Parameter>& audio_params() const noexcept { return audio_; }
  const std::vector<ndgrad::Parameter>& visual_params() const noexcept { return visual_; }
  std::size_t parameter_count() const noexcept;

  ndgrad::Parameter& find(const std::string& name);
  const ndgrad::Parameter& find(const std::string& name) const;

  struct Bound {
    std::vector<ndgrad::Var> audio;
    std::vector<ndgrad::Var> visual;
  };
  /// Binds both streams into a graph; each stream is trainable or a constant.
  Bound bind(ndgrad::Graph& g, GradMode audio, GradMode visual);
  Bound bind_frozen(ndgrad::Graph& g) const;

  ndgrad::Var audio_forward(ndgrad::Graph& g, const Bound& b, const dsp::MfccWindow& m) const;
  ndgrad::Var visual_forward(ndgrad::Graph& g, const Bound& b, const FrameStack& f) const;

  /// Forward-only conveniences on frozen parameters.
  Embedding embed_audio(const dsp::MfccWindow& m) const;
  Embedding embed_visual(const FrameStack& f) const;

 private:
  explicit Encoders(EncoderConfig cfg);

  EncoderConfig cfg_;
  std::vector<ndgrad::Parameter> audio_;
  std::vector<ndgrad::Parameter> visual_;
};

}  // namespace syncmatch
