#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "syncmatch/encoders.hpp"
#include "syncmatch/errors.hpp"
#include "syncmatch/objectives.hpp"

using namespace syncmatch;
using ndgrad::Graph;
using ndgrad::Var;

namespace {

dsp::MfccWindow random_mfcc(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  dsp::MfccWindow m{dsp::Matrix(kMfccCoeffs, kMfccFrames)};
  for (double& v : m.coeffs.data) v = n(rng);
  return m;
}

FrameStack random_stack(const EncoderConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t r = cfg.visual_resolution;
  FrameStack f{cfg.channels_per_frame(), r, r, std::vector<double>(cfg.channels_per_frame() * kFramesPerStack * r * r)};
  for (double& v : f.pixels) v = u(rng);
  return f;
}

void randomize(ndgrad::Parameter& p, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  for (double& v : p.values()) v = n(rng);
}

void zero_biases(Encoders& enc) {
  for (auto* p : enc.parameters())
    if (p->name().ends_with(".bias"))
      for (double& v : p->values()) v = 0.0;
}

// Parameter count from layer shapes: every conv is followed by a 2x2/2 pool,
// the first visual conv halves the resolution.
std::size_t closed_form_count(const EncoderConfig& c) {
  std::size_t n = 0, in = 1, h = kMfccCoeffs, w = kMfccFrames;
  for (std::size_t out : c.audio_channels) {
    n += out * in * 9 + out;
    in = out;
    h /= 2;
    w /= 2;
  }
  n += c.embed_dim * in * h * w + c.embed_dim;
  in = c.channels_per_frame() * 5;
  h = (c.visual_resolution + 6 - 7) / 2 + 1;
  for (std::size_t i = 0; i < c.visual_channels.size(); ++i) {
    const std::size_t k = i == 0 ? 7 : 3;
    n += c.visual_channels[i] * in * k * k + c.visual_channels[i];
    in = c.visual_channels[i];
    h /= 2;
  }
  n += c.embed_dim * in * h * h + c.embed_dim;
  return n;
}

}  // namespace

TEST(EncoderConfig, Validation) {
  EncoderConfig c;
  EXPECT_NO_THROW(c.validate());
  c.frames_per_stack = 4;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.embed_dim = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.audio_channels = {8, 8, 8, 8};  // 13x20 -> 6x10 -> 3x5 -> 1x2, then nothing to pool
  EXPECT_THROW(Encoders::build(c, 1), ConfigError);
}

TEST(EncoderConfig, JsonRoundTrip) {
  EncoderConfig c;
  c.embed_dim = 12;
  c.visual_channels = {3, 5, 7};
  c.rgb = false;
  EXPECT_EQ(nlohmann::json(c).get<EncoderConfig>(), c);
}

TEST(BuildEncoders, ParameterCountMatchesClosedForm) {
  for (const auto& c : {EncoderConfig{}, EncoderConfig{32, {8}, {4, 8, 8}, 64, 5, false}, EncoderConfig{16, {4, 6}, {6}, 16, 5, true}}) {
    EXPECT_EQ(Encoders::build(c, 3).parameter_count(), closed_form_count(c));
  }
  EXPECT_EQ(Encoders::build(EncoderConfig{}, 3).parameter_count(), 84832u);
}

TEST(BuildEncoders, SeedDeterminesParameters) {
  auto a = Encoders::build({}, 5), b = Encoders::build({}, 5), c = Encoders::build({}, 6);
  const auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
  bool any_diff = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i]->name(), pb[i]->name());
    EXPECT_TRUE(std::equal(pa[i]->values().begin(), pa[i]->values().end(), pb[i]->values().begin()));
    any_diff = any_diff || !std::equal(pa[i]->values().begin(), pa[i]->values().end(), pc[i]->values().begin());
  }
  EXPECT_TRUE(any_diff);
}

TEST(BuildEncoders, HeScaledConvolutions) {
  const auto enc = Encoders::build({}, 9);
  const auto& k = enc.find("visual.conv1.weight");
  double ss = 0;
  for (double v : k.values()) ss += v * v;
  const double fan_in = 15.0 * 49.0;
  EXPECT_NEAR(ss / static_cast<double>(k.size()), 2.0 / fan_in, 0.2 * 2.0 / fan_in);
}

TEST(AudioForward, UntrainedEmbeddingIsTheSameForEveryInput) {
  const auto enc = Encoders::build({}, 2);
  const auto a = enc.embed_audio(random_mfcc(1)), b = enc.embed_audio(random_mfcc(2));
  EXPECT_EQ(a, b);
  const auto& bias = enc.find("audio.fc.bias");
  EXPECT_TRUE(std::equal(a.begin(), a.end(), bias.values().begin()));
}

TEST(AudioForward, ZeroInputZeroBiasGivesZero) {
  auto enc = Encoders::build({}, 2);
  randomize(enc.find("audio.fc.weight"), 4, 0.1);
  zero_biases(enc);
  dsp::MfccWindow m{dsp::Matrix(kMfccCoeffs, kMfccFrames)};
  for (double v : enc.embed_audio(m)) EXPECT_EQ(v, 0.0);
}

TEST(AudioForward, DeterministicAndShapeChecked) {
  auto enc = Encoders::build({}, 2);
  randomize(enc.find("audio.fc.weight"), 4, 0.1);
  const auto m = random_mfcc(3);
  const auto a = enc.embed_audio(m);
  EXPECT_EQ(a.size(), 64u);
  EXPECT_EQ(a, enc.embed_audio(m));
  EXPECT_THROW(enc.embed_audio({dsp::Matrix(13, 19)}), ndgrad::ShapeError);
}

TEST(AudioForward, FirstLayerKernelGradientMatchesFiniteDifferences) {
  auto enc = Encoders::build({}, 10);
  randomize(enc.find("audio.fc.weight"), 5, 0.05);
  const auto m = random_mfcc(6);
  auto& k = enc.find("audio.conv1.weight");
  auto probe = [&] {
    Graph g;
    const auto b = enc.bind(g, GradMode::kTrainable, GradMode::kFrozen);
    return std::pair{g.item(g.sum(enc.audio_forward(g, b, m))), 0};
  };
  {
    Graph g;
    const auto b = enc.bind(g, GradMode::kTrainable, GradMode::kFrozen);
    g.backward(g.sum(enc.audio_forward(g, b, m)));
  }
  const std::vector<double> analytic(k.grad().begin(), k.grad().end());
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double orig = k.values()[i];
    k.values()[i] = orig + 1e-5;
    const double up = probe().first;
    k.values()[i] = orig - 1e-5;
    const double down = probe().first;
    k.values()[i] = orig;
    const double numeric = (up - down) / 2e-5;
    EXPECT_LT(std::abs(numeric - analytic[i]) / std::max({std::abs(numeric), std::abs(analytic[i]), 1e-6}), 1e-3) << i;
  }
}

TEST(VisualForward, ZeroInputZeroBiasGivesZero) {
  auto enc = Encoders::build({}, 2);
  zero_biases(enc);
  FrameStack f{3, 32, 32, std::vector<double>(15 * 32 * 32, 0.0)};
  for (double v : enc.embed_visual(f)) EXPECT_EQ(v, 0.0);
}

TEST(VisualForward, SensitiveToFrameOrderAndEveryFrame) {
  const EncoderConfig cfg;
  const auto enc = Encoders::build(cfg, 12);
  const auto f = random_stack(cfg, 1);
  const auto base = enc.embed_visual(f);
  const std::size_t plane = 3 * 32 * 32;

  FrameStack reversed = f;
  for (std::size_t t = 0; t < 5; ++t)
    std::copy_n(f.pixels.begin() + (4 - t) * plane, plane, reversed.pixels.begin() + t * plane);
  EXPECT_NE(enc.embed_visual(reversed), base);

  for (std::size_t t = 0; t < 5; ++t) {
    FrameStack z = f;
    std::fill_n(z.pixels.begin() + t * plane, plane, 0.0);
    EXPECT_NE(enc.embed_visual(z), base) << "frame " << t;
  }
}

TEST(VisualForward, RejectsWrongResolution) {
  const auto enc = Encoders::build({}, 2);
  EXPECT_THROW(enc.embed_visual(FrameStack{3, 16, 16, std::vector<double>(15 * 256, 0.0)}), ndgrad::ShapeError);
  EXPECT_THROW(enc.embed_visual(FrameStack{1, 32, 32, std::vector<double>(5 * 1024, 0.0)}), ndgrad::ShapeError);
}

TEST(StackFrames, ChannelLayoutAndRange) {
  VideoClip clip{6, 3, 2, 2, {}};
  for (std::size_t i = 0; i < 6 * 12; ++i) clip.pixels.push_back(static_cast<std::uint8_t>(i));
  const auto s = stack_frames(clip, 1);
  ASSERT_EQ(s.pixels.size(), 60u);
  // channel (frame 2, colour 1), pixel (1, 0)
  EXPECT_DOUBLE_EQ(s.pixels[(2 * 3 + 1) * 4 + 2], clip.at(3, 1, 1, 0) / 255.0);
  EXPECT_THROW(stack_frames(clip, 2), std::out_of_range);
}

// Full two-stream forward plus the multi-way loss, spot-checked on 10 random
// coordinates of every parameter.
TEST(EncoderGradients, EveryParameterPassesSpotFiniteDifferenceCheck) {
  EncoderConfig cfg;
  cfg.embed_dim = 16;
  cfg.audio_channels = {4, 6};
  cfg.visual_channels = {4, 6};
  auto enc = Encoders::build(cfg, 21);
  randomize(enc.find("audio.fc.weight"), 22, 0.1);
  const auto video = random_stack(cfg, 23);
  std::vector<dsp::MfccWindow> audio;
  for (std::uint64_t s = 0; s < 4; ++s) audio.push_back(random_mfcc(30 + s));

  auto loss_of = [&](bool train) {
    Graph g;
    const auto mode = train ? GradMode::kTrainable : GradMode::kFrozen;
    const auto b = enc.bind(g, mode, mode);
    const Var v = enc.visual_forward(g, b, video);
    std::vector<Var> a;
    for (const auto& m : audio) a.push_back(enc.audio_forward(g, b, m));
    const Var loss = multiway_loss(g, v, a, 2);
    const double value = g.item(loss);
    if (train) g.backward(loss);
    return value;
  };
  loss_of(true);
  std::mt19937_64 rng(24);
  for (auto* p : enc.parameters()) {
    const std::vector<double> analytic(p->grad().begin(), p->grad().end());
    for (int rep = 0; rep < 10; ++rep) {
      const std::size_t i = std::uniform_int_distribution<std::size_t>(0, p->size() - 1)(rng);
      const double orig = p->values()[i];
      p->values()[i] = orig + 1e-5;
      const double up = loss_of(false);
      p->values()[i] = orig - 1e-5;
      const double down = loss_of(false);
      p->values()[i] = orig;
      const double numeric = (up - down) / 2e-5;
      const double rel = std::abs(numeric - analytic[i]) / std::max({std::abs(numeric), std::abs(analytic[i]), 1e-6});
      EXPECT_LT(rel, 1e-3) << p->name() << "[" << i << "] analytic " << analytic[i] << " numeric " << numeric;
    }
  }
}
