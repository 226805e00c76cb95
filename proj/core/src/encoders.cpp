#include "syncmatch/encoders.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "syncmatch/errors.hpp"

namespace syncmatch {

using ndgrad::Graph;
using ndgrad::Parameter;
using ndgrad::Var;

FrameStack stack_frames(const VideoClip& clip, std::size_t start) {
  if (start + kFramesPerStack > clip.frames) {
    throw std::out_of_range("stack_frames: frames [" + std::to_string(start) + ", " +
                            std::to_string(start + kFramesPerStack) + ") outside clip of " +
                            std::to_string(clip.frames) + " frames");
  }
  FrameStack s{clip.channels, clip.height, clip.width, {}};
  const std::size_t fs = clip.frame_size();
  s.pixels.resize(kFramesPerStack * fs);
  const std::uint8_t* src = clip.pixels.data() + start * fs;
  for (std::size_t i = 0; i < s.pixels.size(); ++i) s.pixels[i] = src[i] / 255.0;
  return s;
}

namespace {

struct Extent {
  std::size_t h;
  std::size_t w;
};

Extent pooled(Extent e, const char* stream) {
  if (e.h < 2 || e.w < 2) {
    throw ConfigError(std::string(stream) + " stream: feature map collapses before the last pooling layer");
  }
  return {(e.h - 2) / 2 + 1, (e.w - 2) / 2 + 1};
}

std::size_t audio_flat(const EncoderConfig& c) {
  Extent e{kMfccCoeffs, kMfccFrames};
  for (std::size_t i = 0; i < c.audio_channels.size(); ++i) e = pooled(e, "audio");
  return e.h * e.w * c.audio_channels.back();
}

std::size_t visual_flat(const EncoderConfig& c) {
  const std::size_t r = c.visual_resolution;
  Extent e{(r - 1) / 2 + 1, (r - 1) / 2 + 1};  // 7x7, stride 2, pad 3
  for (std::size_t i = 0; i < c.visual_channels.size(); ++i) e = pooled(e, "visual");
  return e.h * e.w * c.visual_channels.back();
}

constexpr ndgrad::Conv2dOptions kSame3x3{1, 1, 1, 1};
constexpr ndgrad::Conv2dOptions kVisualFirst{2, 2, 3, 3};

void he_fill(Parameter& p, std::size_t fan_in, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
  for (double& v : p.values()) v = dist(rng);
}

}  // namespace

void EncoderConfig::validate() const {
  if (embed_dim == 0) throw ConfigError("embed_dim must be positive");
  if (frames_per_stack != kFramesPerStack) throw ConfigError("frames_per_stack must be 5");
  if (audio_channels.empty() || visual_channels.empty()) throw ConfigError("each stream needs at least one conv layer");
  for (auto c : audio_channels)
    if (c == 0) throw ConfigError("audio_channels entries must be positive");
  for (auto c : visual_channels)
    if (c == 0) throw ConfigError("visual_channels entries must be positive");
  if (visual_resolution < 4) throw ConfigError("visual_resolution must be at least 4");
  audio_flat(*this);
  visual_flat(*this);
}

void to_json(nlohmann::json& j, const EncoderConfig& c) {
  j = nlohmann::json{{"embed_dim", c.embed_dim},
                     {"audio_channels", c.audio_channels},
                     {"visual_channels", c.visual_channels},
                     {"visual_resolution", c.visual_resolution},
                     {"frames_per_stack", c.frames_per_stack},
                     {"rgb", c.rgb}};
}

void from_json(const nlohmann::json& j, EncoderConfig& c) {
  j.at("embed_dim").get_to(c.embed_dim);
  j.at("audio_channels").get_to(c.audio_channels);
  j.at("visual_channels").get_to(c.visual_channels);
  j.at("visual_resolution").get_to(c.visual_resolution);
  j.at("frames_per_stack").get_to(c.frames_per_stack);
  j.at("rgb").get_to(c.rgb);
}

Encoders::Encoders(EncoderConfig cfg) : cfg_(std::move(cfg)) {}

Encoders Encoders::build(const EncoderConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Encoders e(cfg);
  std::mt19937_64 rng(seed);

  std::size_t in = 1;
  for (std::size_t i = 0; i < cfg.audio_channels.size(); ++i) {
    const std::size_t out = cfg.audio_channels[i];
    const std::string name = "audio.conv" + std::to_string(i + 1);
    e.audio_.emplace_back(name + ".weight", ndgrad::Shape{out, in, 3, 3});
    he_fill(e.audio_.back(), in * 9, rng);
    e.audio_.emplace_back(name + ".bias", ndgrad::Shape{out});
    in = out;
  }
  e.audio_.emplace_back("audio.fc.weight", ndgrad::Shape{cfg.embed_dim, audio_flat(cfg)});
  e.audio_.emplace_back("audio.fc.bias", ndgrad::Shape{cfg.embed_dim});
  {
    std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(cfg.embed_dim)));
    for (double& v : e.audio_.back().values()) v = dist(rng);
  }

  in = cfg.channels_per_frame() * cfg.frames_per_stack;
  for (std::size_t i = 0; i < cfg.visual_channels.size(); ++i) {
    const std::size_t out = cfg.visual_channels[i];
    const std::size_t k = i == 0 ? 7 : 3;
    const std::string name = "visual.conv" + std::to_string(i + 1);
    e.visual_.emplace_back(name + ".weight", ndgrad::Shape{out, in, k, k});
    he_fill(e.visual_.back(), in * k * k, rng);
    e.visual_.emplace_back(name + ".bias", ndgrad::Shape{out});
    in = out;
  }
  const std::size_t vflat = visual_flat(cfg);
  e.visual_.emplace_back("visual.fc.weight", ndgrad::Shape{cfg.embed_dim, vflat});
  he_fill(e.visual_.back(), vflat, rng);
  e.visual_.emplace_back("visual.fc.bias", ndgrad::Shape{cfg.embed_dim});
  return e;
}

std::vector<Parameter*> Encoders::parameters() {
  auto all = audio_parameters();
  auto v = visual_parameters();
  all.insert(all.end(), v.begin(), v.end());
  return all;
}

std::vector<Parameter*> Encoders::audio_parameters() {
  std::vector<Parameter*> out;
  for (auto& p : audio_) out.push_back(&p);
  return out;
}

std::vector<Parameter*> Encoders::visual_parameters() {
  std::vector<Parameter*> out;
  for (auto& p : visual_) out.push_back(&p);
  return out;
}

std::size_t Encoders::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : audio_) n += p.size();
  for (const auto& p : visual_) n += p.size();
  return n;
}

Parameter& Encoders::find(const std::string& name) {
  return const_cast<Parameter&>(std::as_const(*this).find(name));
}

const Parameter& Encoders::find(const std::string& name) const {
  for (const auto* set : {&audio_, &visual_}) {
    for (const auto& p : *set)
      if (p.name() == name) return p;
  }
  throw std::out_of_range("no encoder parameter named '" + name + "'");
}

Encoders::Bound Encoders::bind(Graph& g, GradMode audio, GradMode visual) {
  Bound b;
  for (auto& p : audio_) b.audio.push_back(audio == GradMode::kTrainable ? g.param(p) : g.frozen(p));
  for (auto& p : visual_) b.visual.push_back(visual == GradMode::kTrainable ? g.param(p) : g.frozen(p));
  return b;
}

Encoders::Bound Encoders::bind_frozen(Graph& g) const {
  Bound b;
  for (const auto& p : audio_) b.audio.push_back(g.frozen(p));
  for (const auto& p : visual_) b.visual.push_back(g.frozen(p));
  return b;
}

Var Encoders::audio_forward(Graph& g, const Bound& b, const dsp::MfccWindow& m) const {
  if (m.coeffs.rows != kMfccCoeffs || m.coeffs.cols != kMfccFrames) {
    throw ndgrad::ShapeError("audio_forward: expected a 13x20 MFCC window, got " +
                             std::to_string(m.coeffs.rows) + "x" + std::to_string(m.coeffs.cols));
  }
  if (b.audio.size() != audio_.size()) throw ndgrad::GraphError("audio_forward: audio stream not bound");
  Var x = g.input({1, kMfccCoeffs, kMfccFrames}, m.coeffs.data);
  std::size_t k = 0;
  for (std::size_t i = 0; i < cfg_.audio_channels.size(); ++i, k += 2) {
    x = g.max_pool2d(g.relu(g.conv2d(x, b.audio[k], b.audio[k + 1], kSame3x3)));
  }
  x = g.reshape(x, {g.array(x).size()});
  return g.dense(x, b.audio[k], b.audio[k + 1]);
}

Var Encoders::visual_forward(Graph& g, const Bound& b, const FrameStack& f) const {
  const std::size_t r = cfg_.visual_resolution;
  if (f.channels_per_frame != cfg_.channels_per_frame() || f.height != r || f.width != r ||
      f.pixels.size() != f.stacked_channels() * r * r) {
    throw ndgrad::ShapeError("visual_forward: expected " + std::to_string(cfg_.channels_per_frame()) +
                             "-channel " + std::to_string(r) + "x" + std::to_string(r) +
                             " frames, got " + std::to_string(f.channels_per_frame) + "-channel " +
                             std::to_string(f.height) + "x" + std::to_string(f.width));
  }
  if (b.visual.size() != visual_.size()) throw ndgrad::GraphError("visual_forward: visual stream not bound");
  Var x = g.input({f.stacked_channels(), r, r}, f.pixels);
  std::size_t k = 0;
  for (std::size_t i = 0; i < cfg_.visual_channels.size(); ++i, k += 2) {
    x = g.max_pool2d(g.relu(g.conv2d(x, b.visual[k], b.visual[k + 1], i == 0 ? kVisualFirst : kSame3x3)));
  }
  x = g.reshape(x, {g.array(x).size()});
  return g.dense(x, b.visual[k], b.visual[k + 1]);
}

Embedding Encoders::embed_audio(const dsp::MfccWindow& m) const {
  Graph g;
  Bound b;
  for (const auto& p : audio_) b.audio.push_back(g.frozen(p));
  auto v = g.values(audio_forward(g, b, m));
  return {v.begin(), v.end()};
}

Embedding Encoders::embed_visual(const FrameStack& f) const {
  Graph g;
  Bound b;
  for (const auto& p : visual_) b.visual.push_back(g.frozen(p));
  auto v = g.values(visual_forward(g, b, f));
  return {v.begin(), v.end()};
}

}  // namespace syncmatch
