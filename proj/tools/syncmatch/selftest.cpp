#include "selftest.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "syncmatch/encoders.hpp"
#include "syncmatch/ndgrad.hpp"
#include "syncmatch/objectives.hpp"
#include "syncmatch/rng.hpp"
#include "syncmatch/sampling.hpp"
#include "syncmatch/sync_eval.hpp"
#include "syncmatch/synthdata.hpp"

namespace syncmatch::selftest {

using ndgrad::Graph;
using ndgrad::Parameter;
using ndgrad::Shape;
using ndgrad::Var;

namespace {

using Rng = std::mt19937_64;
using Builder = std::function<Var(Graph&, std::span<const Var>)>;

std::vector<double> uniform(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

// Values bounded away from zero, so kinks (relu, margins) and poles
// (reciprocal) sit well outside the finite-difference stencil.
std::vector<double> away_from_zero(Rng& rng, std::size_t n, double lo, double hi) {
  auto v = uniform(rng, n, lo, hi);
  std::bernoulli_distribution sign(0.5);
  for (double& x : v) x = sign(rng) ? x : -x;
  return v;
}

Parameter leaf(const std::string& name, Shape shape, std::vector<double> values) {
  Parameter p(name, std::move(shape));
  std::copy(values.begin(), values.end(), p.values().begin());
  return p;
}

// Projects any output onto a fixed random direction so every output element
// contributes to the scalar being differentiated.
struct Projection {
  std::vector<double> weights;
  double bias = 0.0;

  Var apply(Graph& g, Var y) const {
    const std::size_t n = g.array(y).size();
    const Var flat = g.reshape(y, {n});
    const Var w = g.input({1, n}, weights);
    const Var b = g.input({1}, {bias});
    return g.sum(g.dense(flat, w, b));
  }
};

double evaluate(const Builder& f, std::vector<Parameter>& leaves, const Projection& proj) {
  Graph g;
  std::vector<Var> vs;
  for (auto& p : leaves) vs.push_back(g.frozen(p));
  return g.item(proj.apply(g, f(g, vs)));
}

// Worst relative error between the tape gradient and central differences
// over every coordinate of every leaf.
double gradient_error(const Builder& f, std::vector<Parameter>& leaves, Rng& rng) {
  Projection proj;
  {
    Graph g;
    std::vector<Var> vs;
    for (auto& p : leaves) vs.push_back(g.frozen(p));
    const std::size_t n = g.array(f(g, vs)).size();
    proj.weights = uniform(rng, n);
    proj.bias = uniform(rng, 1)[0];
  }
  for (auto& p : leaves) p.zero_grad();
  {
    Graph g;
    std::vector<Var> vs;
    for (auto& p : leaves) vs.push_back(g.param(p));
    g.backward(proj.apply(g, f(g, vs)));
  }
  double worst = 0.0;
  for (auto& p : leaves) {
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double orig = p.values()[k];
      p.values()[k] = orig + kFiniteDifferenceStep;
      const double up = evaluate(f, leaves, proj);
      p.values()[k] = orig - kFiniteDifferenceStep;
      const double down = evaluate(f, leaves, proj);
      p.values()[k] = orig;
      const double numeric = (up - down) / (2.0 * kFiniteDifferenceStep);
      const double analytic = p.grad()[k];
      const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
      worst = std::max(worst, std::abs(numeric - analytic) / scale);
    }
  }
  return worst;
}

using InstanceFactory = std::function<std::pair<Builder, std::vector<Parameter>>(Rng&)>;

CheckResult gradient_check(const std::string& name, const InstanceFactory& make, std::uint64_t seed, int instances) {
  CheckResult r{"grad " + name, true, 0.0, {}};
  for (int i = 0; i < instances; ++i) {
    Rng rng(derive_seed(seed, {std::hash<std::string>{}(name), static_cast<std::uint64_t>(i)}));
    auto [builder, leaves] = make(rng);
    const double err = gradient_error(builder, leaves, rng);
    r.worst = std::max(r.worst, err);
  }
  r.passed = r.worst < kGradientTolerance;
  std::ostringstream os;
  os << instances << " instances, worst rel err " << r.worst;
  r.detail = os.str();
  return r;
}

std::size_t draw(Rng& rng, std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); }

InstanceFactory conv_case(std::size_t kh, std::size_t kw, ndgrad::Conv2dOptions o) {
  return [=](Rng& rng) {
    const std::size_t cin = draw(rng, 1, 3), cout = draw(rng, 1, 3);
    const std::size_t h = draw(rng, kh, kh + 4), w = draw(rng, kw, kw + 4);
    std::vector<Parameter> leaves;
    leaves.push_back(leaf("x", {cin, h, w}, uniform(rng, cin * h * w)));
    leaves.push_back(leaf("k", {cout, cin, kh, kw}, uniform(rng, cout * cin * kh * kw)));
    leaves.push_back(leaf("b", {cout}, uniform(rng, cout)));
    Builder f = [o](Graph& g, std::span<const Var> v) { return g.conv2d(v[0], v[1], v[2], o); };
    return std::pair{f, std::move(leaves)};
  };
}

template <typename Op>
InstanceFactory unary_case(Op op, std::size_t rank, double lo, double hi, bool avoid_zero) {
  return [=](Rng& rng) {
    Shape shape;
    for (std::size_t i = 0; i < rank; ++i) shape.push_back(draw(rng, 1, 5));
    const auto n = ndgrad::element_count(shape);
    std::vector<Parameter> leaves;
    leaves.push_back(leaf("x", shape, avoid_zero ? away_from_zero(rng, n, lo, hi) : uniform(rng, n, lo, hi)));
    Builder f = [op](Graph& g, std::span<const Var> v) { return op(g, v[0]); };
    return std::pair{f, std::move(leaves)};
  };
}

template <typename Op>
InstanceFactory binary_case(Op op) {
  return [=](Rng& rng) {
    const Shape shape{draw(rng, 1, 4), draw(rng, 1, 4)};
    const auto n = ndgrad::element_count(shape);
    std::vector<Parameter> leaves;
    leaves.push_back(leaf("a", shape, uniform(rng, n)));
    leaves.push_back(leaf("b", shape, uniform(rng, n)));
    Builder f = [op](Graph& g, std::span<const Var> v) { return op(g, v[0], v[1]); };
    return std::pair{f, std::move(leaves)};
  };
}

// Video embedding, N audio embeddings and a target.
InstanceFactory multiway_case(InverseMode inverse) {
  return [=](Rng& rng) {
    const std::size_t n = draw(rng, 2, 8), d = draw(rng, 2, 6);
    const std::size_t target = draw(rng, 0, n - 1);
    std::vector<Parameter> leaves;
    leaves.push_back(leaf("video", {d}, uniform(rng, d)));
    for (std::size_t i = 0; i < n; ++i) leaves.push_back(leaf("audio", {d}, uniform(rng, d)));
    Builder f = [=](Graph& g, std::span<const Var> v) {
      return multiway_loss(g, v[0], v.subspan(1), target, inverse);
    };
    return std::pair{f, std::move(leaves)};
  };
}

InstanceFactory contrastive_case(bool matching) {
  return [=](Rng& rng) {
    const std::size_t d = draw(rng, 2, 6);
    const double margin = 1.0;
    std::vector<Parameter> leaves;
    // Non-matching pairs are drawn inside the margin (otherwise the loss is
    // flat) and away from it, where the hinge has a kink.
    for (;;) {
      leaves.clear();
      leaves.push_back(leaf("video", {d}, uniform(rng, d, -0.3, 0.3)));
      leaves.push_back(leaf("audio", {d}, uniform(rng, d, -0.3, 0.3)));
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double diff = leaves[0].values()[i] - leaves[1].values()[i];
        s += diff * diff;
      }
      const double dist = std::sqrt(s);
      if (matching || (dist > 0.05 && dist < margin - 0.05)) break;
    }
    Builder f = [=](Graph& g, std::span<const Var> v) { return contrastive_loss(g, v[0], v[1], matching, margin); };
    return std::pair{f, std::move(leaves)};
  };
}

InstanceFactory avenet_case() {
  return [=](Rng& rng) {
    const std::size_t d = draw(rng, 2, 6);
    const bool matching = std::bernoulli_distribution(0.5)(rng);
    std::vector<Parameter> leaves;
    leaves.push_back(leaf("video", {d}, uniform(rng, d)));
    leaves.push_back(leaf("audio", {d}, uniform(rng, d)));
    leaves.push_back(leaf("head.w", {2, 1}, uniform(rng, 2)));
    leaves.push_back(leaf("head.b", {2}, uniform(rng, 2)));
    Builder f = [=](Graph& g, std::span<const Var> v) { return avenet_loss(g, v[0], v[1], matching, v[2], v[3]); };
    return std::pair{f, std::move(leaves)};
  };
}

// --- direct loop formulations -------------------------------------------

std::vector<double> naive_conv(const std::vector<double>& x, std::size_t cin, std::size_t h, std::size_t w,
                               const std::vector<double>& k, std::size_t cout, std::size_t kh, std::size_t kw,
                               const std::vector<double>& b, const ndgrad::Conv2dOptions& o, std::size_t& oh,
                               std::size_t& ow) {
  oh = (h + 2 * o.pad_h - kh) / o.stride_h + 1;
  ow = (w + 2 * o.pad_w - kw) / o.stride_w + 1;
  std::vector<double> out(cout * oh * ow);
  for (std::size_t co = 0; co < cout; ++co)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t xo = 0; xo < ow; ++xo) {
        double s = b[co];
        for (std::size_t ci = 0; ci < cin; ++ci)
          for (std::size_t i = 0; i < kh; ++i)
            for (std::size_t j = 0; j < kw; ++j) {
              const long iy = static_cast<long>(y * o.stride_h + i) - static_cast<long>(o.pad_h);
              const long ix = static_cast<long>(xo * o.stride_w + j) - static_cast<long>(o.pad_w);
              if (iy < 0 || ix < 0 || iy >= static_cast<long>(h) || ix >= static_cast<long>(w)) continue;
              s += k[((co * cin + ci) * kh + i) * kw + j] * x[(ci * h + iy) * w + ix];
            }
        out[(co * oh + y) * ow + xo] = s;
      }
  return out;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

CheckResult oracle_result(const std::string& name, double worst, const std::string& what) {
  std::ostringstream os;
  os << what << ", max abs diff " << worst;
  return {"oracle " + name, worst <= kOracleTolerance, worst, os.str()};
}

CheckResult conv_oracle(std::uint64_t seed) {
  struct Case {
    std::size_t kh, kw;
    ndgrad::Conv2dOptions o;
  };
  const Case cases[] = {{3, 3, {1, 1, 1, 1}}, {7, 7, {2, 2, 3, 3}}, {1, 3, {1, 1, 0, 1}}, {3, 2, {2, 1, 0, 1}},
                        {5, 5, {1, 1, 0, 0}}};
  Rng rng(seed);
  double worst = 0.0;
  int runs = 0;
  for (const auto& c : cases) {
    for (int rep = 0; rep < 10; ++rep, ++runs) {
      const std::size_t cin = draw(rng, 1, 4), cout = draw(rng, 1, 4);
      const std::size_t h = draw(rng, c.kh, c.kh + 9), w = draw(rng, c.kw, c.kw + 9);
      const auto x = uniform(rng, cin * h * w), k = uniform(rng, cout * cin * c.kh * c.kw), b = uniform(rng, cout);
      std::size_t oh = 0, ow = 0;
      const auto expect = naive_conv(x, cin, h, w, k, cout, c.kh, c.kw, b, c.o, oh, ow);
      Graph g;
      const Var y = g.conv2d(g.input({cin, h, w}, x), g.input({cout, cin, c.kh, c.kw}, k), g.input({cout}, b), c.o);
      if (g.shape(y) != Shape{cout, oh, ow}) return {"oracle conv2d", false, INFINITY, "output shape mismatch"};
      worst = std::max(worst, max_abs_diff(g.values(y), expect));
    }
  }
  return oracle_result("conv2d", worst, std::to_string(runs) + " random layers");
}

CheckResult pool_oracle(std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t c = draw(rng, 1, 4), h = draw(rng, 2, 13), w = draw(rng, 2, 13);
    auto x = uniform(rng, c * h * w);
    // Some exact ties, which must resolve to the same value either way.
    for (std::size_t i = 0; i + 1 < x.size(); i += 7) x[i + 1] = x[i];
    const std::size_t oh = (h - 2) / 2 + 1, ow = (w - 2) / 2 + 1;
    std::vector<double> expect(c * oh * ow);
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t xo = 0; xo < ow; ++xo) {
          double m = -INFINITY;
          for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j) m = std::max(m, x[(ch * h + 2 * y + i) * w + 2 * xo + j]);
          expect[(ch * oh + y) * ow + xo] = m;
        }
    Graph g;
    worst = std::max(worst, max_abs_diff(g.values(g.max_pool2d(g.input({c, h, w}, x))), expect));
  }
  return oracle_result("max_pool2d", worst, "30 random maps");
}

CheckResult dense_oracle(std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t in = draw(rng, 1, 40), out = draw(rng, 1, 20);
    const auto x = uniform(rng, in), w = uniform(rng, out * in), b = uniform(rng, out);
    std::vector<double> expect(out);
    for (std::size_t o = 0; o < out; ++o) {
      expect[o] = b[o];
      for (std::size_t i = 0; i < in; ++i) expect[o] += w[o * in + i] * x[i];
    }
    Graph g;
    worst = std::max(worst, max_abs_diff(g.values(g.dense(g.input({in}, x), g.input({out, in}, w), g.input({out}, b))),
                                         expect));
  }
  return oracle_result("dense", worst, "30 random layers");
}

// The first visual layer as a genuine spatio-temporal convolution: kernel
// [co][colour][t][i][j] slides over a [colour][t][y][x] volume, temporal
// extent 5 with no temporal padding, so one output plane per filter.
CheckResult stacked_channel_oracle(std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int rep = 0; rep < 4; ++rep) {
    EncoderConfig cfg;
    cfg.rgb = rep % 2 == 0;
    cfg.visual_resolution = rep < 2 ? 32 : 16;
    const auto enc = Encoders::build(cfg, derive_seed(seed, {static_cast<std::uint64_t>(rep)}));
    const std::size_t c = cfg.channels_per_frame(), r = cfg.visual_resolution, frames = 7;
    VideoClip clip{frames, c, r, r, {}};
    std::uniform_int_distribution<int> px(0, 255);
    for (std::size_t i = 0; i < frames * c * r * r; ++i) clip.pixels.push_back(static_cast<std::uint8_t>(px(rng)));
    const std::size_t start = draw(rng, 0, frames - kFramesPerStack);

    const auto& kernel = enc.find("visual.conv1.weight");
    const auto& bias = enc.find("visual.conv1.bias");
    const std::size_t cout = kernel.shape()[0], kh = kernel.shape()[2], kw = kernel.shape()[3];
    const std::size_t stride = 2, pad = 3;
    const std::size_t oh = (r + 2 * pad - kh) / stride + 1, ow = oh;
    std::vector<double> expect(cout * oh * ow);
    for (std::size_t co = 0; co < cout; ++co)
      for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
          double s = bias.values()[co];
          for (std::size_t col = 0; col < c; ++col)
            for (std::size_t t = 0; t < kFramesPerStack; ++t)
              for (std::size_t i = 0; i < kh; ++i)
                for (std::size_t j = 0; j < kw; ++j) {
                  const long iy = static_cast<long>(y * stride + i) - static_cast<long>(pad);
                  const long ix = static_cast<long>(x * stride + j) - static_cast<long>(pad);
                  if (iy < 0 || ix < 0 || iy >= static_cast<long>(r) || ix >= static_cast<long>(r)) continue;
                  const double wv = kernel.values()[((co * kFramesPerStack * c + t * c + col) * kh + i) * kw + j];
                  s += wv * clip.at(start + t, col, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)) / 255.0;
                }
          expect[(co * oh + y) * ow + x] = s;
        }

    const FrameStack fs = stack_frames(clip, start);
    Graph g;
    const Var y = g.conv2d(g.input({fs.stacked_channels(), r, r}, fs.pixels), g.frozen(kernel), g.frozen(bias),
                           {stride, stride, pad, pad});
    worst = std::max(worst, max_abs_diff(g.values(y), expect));
  }
  return oracle_result("stacked-channel 5x7x7", worst, "4 clips (rgb/grey, 32/16 px)");
}

CheckResult pairwise_oracle(std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = draw(rng, 1, 40), d = draw(rng, 1, 64);
    const auto v = uniform(rng, d), a = uniform(rng, n * d);
    std::vector<double> expect(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += (v[k] - a[i * d + k]) * (v[k] - a[i * d + k]);
      expect[i] = std::sqrt(s);
    }
    Graph g;
    worst = std::max(worst, max_abs_diff(g.values(g.pairwise_euclidean(g.input({d}, v), g.input({n, d}, a))), expect));
  }
  return oracle_result("pairwise_euclidean", worst, "30 random sets");
}

// Recomputes every embedding for every (window, offset) pair.
CheckResult distance_curve_oracle(std::uint64_t seed) {
  EncoderConfig ecfg;
  ecfg.embed_dim = 16;
  ecfg.audio_channels = {4, 8};
  ecfg.visual_channels = {4, 8};
  auto enc = Encoders::build(ecfg, derive_seed(seed, {1}));
  Rng rng(derive_seed(seed, {2}));
  // Non-constant audio embeddings.
  for (double& w : enc.find("audio.fc.weight").values()) w = std::normal_distribution<double>(0.0, 0.1)(rng);
  synth::GenConfig gcfg;
  gcfg.min_duration = gcfg.max_duration = 2.8;
  const auto track = synth::gen_track(gcfg, derive_seed(seed, {3}));
  const EncoderSyncModel model(enc, gcfg.sample_rate);

  double worst = 0.0;
  for (std::size_t k : {5u, 9u}) {
    const std::size_t center = kMaxOffset + (k - 1) / 2 + draw(rng, 0, 4);
    const auto curve = distance_curve(model, track.video, track.waveform, center, k);
    const std::size_t first = center - (k - 1) / 2, features = k - 4;
    for (int o = -kMaxOffset; o <= kMaxOffset; ++o) {
      double total = 0.0;
      for (std::size_t s = first; s < first + features; ++s) {
        const auto v = model.embed_video(track.video, s);
        const auto a = model.embed_audio(track.waveform, static_cast<std::size_t>(static_cast<long>(s) + o));
        double sq = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) sq += (v[i] - a[i]) * (v[i] - a[i]);
        total += std::sqrt(sq);
      }
      worst = std::max(worst, std::abs(curve.at(o) - total / static_cast<double>(features)));
    }
  }
  return oracle_result("distance_curve", worst, "K in {5, 9}, all 31 offsets");
}

}  // namespace

std::vector<CheckResult> gradient_suite(std::uint64_t seed, int instances) {
  using G = Graph;
  std::vector<std::pair<std::string, InstanceFactory>> cases;
  cases.emplace_back("conv2d 3x3 pad 1", conv_case(3, 3, {1, 1, 1, 1}));
  cases.emplace_back("conv2d 7x7 stride 2 pad 3", conv_case(7, 7, {2, 2, 3, 3}));
  cases.emplace_back("conv2d 1x3 temporal", conv_case(1, 3, {1, 1, 0, 1}));
  cases.emplace_back("max_pool2d", [](Rng& rng) {
    const std::size_t c = draw(rng, 1, 3), h = draw(rng, 2, 7), w = draw(rng, 2, 7);
    // Well-separated values keep every window's argmax stable under +/-h.
    std::vector<double> v(c * h * w);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.01 * static_cast<double>(i);
    std::shuffle(v.begin(), v.end(), rng);
    std::vector<Parameter> leaves;
    leaves.push_back(leaf("x", {c, h, w}, v));
    Builder f = [](G& g, std::span<const Var> x) { return g.max_pool2d(x[0]); };
    return std::pair{f, std::move(leaves)};
  });
  cases.emplace_back("dense", [](Rng& rng) {
    const std::size_t in = draw(rng, 1, 8), out = draw(rng, 1, 5);
    std::vector<Parameter> leaves;
    leaves.push_back(leaf("x", {in}, uniform(rng, in)));
    leaves.push_back(leaf("w", {out, in}, uniform(rng, out * in)));
    leaves.push_back(leaf("b", {out}, uniform(rng, out)));
    Builder f = [](G& g, std::span<const Var> v) { return g.dense(v[0], v[1], v[2]); };
    return std::pair{f, std::move(leaves)};
  });
  cases.emplace_back("relu", unary_case([](G& g, Var x) { return g.relu(x); }, 2, 0.01, 1.0, true));
  cases.emplace_back("l2_normalize", unary_case([](G& g, Var x) { return g.l2_normalize(x); }, 1, -1.0, 1.0, false));
  cases.emplace_back("pairwise_euclidean", [](Rng& rng) {
    const std::size_t n = draw(rng, 1, 6), d = draw(rng, 1, 6);
    std::vector<Parameter> leaves;
    leaves.push_back(leaf("v", {d}, uniform(rng, d)));
    leaves.push_back(leaf("a", {n, d}, uniform(rng, n * d)));
    Builder f = [](G& g, std::span<const Var> v) { return g.pairwise_euclidean(v[0], v[1]); };
    return std::pair{f, std::move(leaves)};
  });
  cases.emplace_back("softmax_cross_entropy", [](Rng& rng) {
    const std::size_t n = draw(rng, 2, 8), target = draw(rng, 0, n - 1);
    std::vector<Parameter> leaves;
    leaves.push_back(leaf("logits", {n}, uniform(rng, n, -3.0, 3.0)));
    Builder f = [=](G& g, std::span<const Var> v) { return g.softmax_cross_entropy(v[0], target); };
    return std::pair{f, std::move(leaves)};
  });
  cases.emplace_back("reshape", unary_case([](G& g, Var x) { return g.reshape(x, {g.array(x).size(), 1}); }, 2, -1, 1, false));
  cases.emplace_back("stack", [](Rng& rng) {
    const std::size_t rows = draw(rng, 1, 4), d = draw(rng, 1, 5);
    std::vector<Parameter> leaves;
    for (std::size_t i = 0; i < rows; ++i) leaves.push_back(leaf("row", {d}, uniform(rng, d)));
    Builder f = [](G& g, std::span<const Var> v) { return g.stack(v); };
    return std::pair{f, std::move(leaves)};
  });
  cases.emplace_back("transpose", unary_case([](G& g, Var x) { return g.transpose(x); }, 2, -1, 1, false));
  cases.emplace_back("add", binary_case([](G& g, Var a, Var b) { return g.add(a, b); }));
  cases.emplace_back("sub", binary_case([](G& g, Var a, Var b) { return g.sub(a, b); }));
  cases.emplace_back("scale", unary_case([](G& g, Var x) { return g.scale(x, -1.7); }, 2, -1, 1, false));
  cases.emplace_back("add_scalar", unary_case([](G& g, Var x) { return g.add_scalar(x, 0.3); }, 2, -1, 1, false));
  cases.emplace_back("square", unary_case([](G& g, Var x) { return g.square(x); }, 2, -1, 1, false));
  cases.emplace_back("reciprocal", unary_case([](G& g, Var x) { return g.reciprocal(x); }, 2, 0.5, 2.0, true));
  cases.emplace_back("sum", unary_case([](G& g, Var x) { return g.sum(x); }, 2, -1, 1, false));
  cases.emplace_back("mean_last_axis", unary_case([](G& g, Var x) { return g.mean_last_axis(x); }, 2, -1, 1, false));
  cases.emplace_back("multiway loss (negated distance)", multiway_case(InverseMode::kNegate));
  cases.emplace_back("multiway loss (reciprocal distance)", multiway_case(InverseMode::kReciprocal));
  cases.emplace_back("contrastive loss (matching)", contrastive_case(true));
  cases.emplace_back("contrastive loss (non-matching)", contrastive_case(false));
  cases.emplace_back("avenet loss", avenet_case());

  std::vector<CheckResult> out;
  for (const auto& [name, make] : cases) out.push_back(gradient_check(name, make, seed, instances));
  return out;
}

std::vector<CheckResult> oracle_suite(std::uint64_t seed) {
  return {conv_oracle(derive_seed(seed, {1})),           pool_oracle(derive_seed(seed, {2})),
          dense_oracle(derive_seed(seed, {3})),          stacked_channel_oracle(derive_seed(seed, {4})),
          pairwise_oracle(derive_seed(seed, {5})),       distance_curve_oracle(derive_seed(seed, {6}))};
}

}  // namespace syncmatch::selftest
