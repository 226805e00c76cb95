#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "syncmatch/adam.hpp"
#include "syncmatch/encoders.hpp"
#include "syncmatch/errors.hpp"
#include "syncmatch/objectives.hpp"
#include "syncmatch/sampling.hpp"
#include "syncmatch/synthdata.hpp"

using namespace syncmatch;
using ndgrad::Graph;
using ndgrad::Var;

namespace {

std::vector<Var> inputs(Graph& g, const std::vector<std::vector<double>>& rows) {
  std::vector<Var> out;
  for (const auto& r : rows) out.push_back(g.input({r.size()}, r));
  return out;
}

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t d, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  std::vector<double> v(d);
  for (double& x : v) x = n(rng);
  return v;
}

double dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

TEST(MultiwayLoss, EqualDistancesGiveLogN) {
  for (std::size_t n = 2; n <= 64; ++n) {
    Graph g;
    const std::vector<double> v{0.3, -0.2, 1.1};
    const auto a = inputs(g, std::vector<std::vector<double>>(n, v));
    EXPECT_NEAR(g.item(multiway_loss(g, g.input({3}, v), a, n / 2)), std::log(static_cast<double>(n)), 1e-9);
  }
}

TEST(MultiwayLoss, HandSoftmaxValue) {
  Graph g;
  const auto a = inputs(g, {{0, 0}, {10, 0}, {0, 10}, {-10, 0}});
  const double loss = g.item(multiway_loss(g, g.input({2}, {0, 0}), a, 0));
  EXPECT_NEAR(loss, std::log(1.0 + 3.0 * std::exp(-10.0)), 1e-10);
  EXPECT_NEAR(loss, 1.362e-4, 1e-7);
}

TEST(MultiwayLoss, ReciprocalInverse) {
  Graph g;
  const auto a = inputs(g, {{1, 0}, {2, 0}});
  const double loss = g.item(multiway_loss(g, g.input({2}, {0, 0}), a, 1, InverseMode::kReciprocal));
  EXPECT_NEAR(loss, std::log(std::exp(1.0) + std::exp(0.5)) - 0.5, 1e-12);
}

TEST(MultiwayLoss, PredictionIsArgminDistanceUnderRescaling) {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 2 + rep % 10;
    const auto v = random_vec(rng, 5);
    std::vector<std::vector<double>> rows;
    std::vector<double> d;
    for (std::size_t i = 0; i < n; ++i) {
      rows.push_back(random_vec(rng, 5));
      d.push_back(dist(v, rows.back()));
    }
    for (double c : {1.0, 0.01, 250.0}) {
      std::vector<double> logits;
      for (double x : d) logits.push_back(-c * x);
      const auto p = ndgrad::softmax(logits);
      EXPECT_EQ(static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin()), argmin_distance(d));
    }
  }
}

TEST(MultiwayLoss, RejectsDegenerateInputs) {
  Graph g;
  const Var v = g.input({2}, {0, 0});
  EXPECT_THROW(multiway_loss(g, v, inputs(g, {{1, 1}}), 0), std::invalid_argument);
  EXPECT_THROW(multiway_loss(g, v, inputs(g, {{1, 1}, {2, 2}}), 2), std::out_of_range);
}

TEST(ContrastiveLoss, HandValues) {
  Graph g;
  const Var v = g.input({2}, {0.5, 0.5});
  EXPECT_EQ(g.item(contrastive_loss(g, v, g.input({2}, {0.5, 0.5}), true)), 0.0);
  EXPECT_NEAR(g.item(contrastive_loss(g, v, g.input({2}, {3.5, 4.5}), true)), 25.0, 1e-12);
  EXPECT_EQ(g.item(contrastive_loss(g, v, g.input({2}, {3.5, 4.5}), false, 5.0)), 0.0);
  EXPECT_NEAR(g.item(contrastive_loss(g, v, g.input({2}, {0.5, 0.5}), false, 1.0)), 1.0, 1e-7);
  EXPECT_NEAR(g.item(contrastive_loss(g, v, g.input({2}, {0.5, 1.0}), false, 2.0)), 2.25, 1e-12);
  EXPECT_THROW(contrastive_loss(g, v, v, false, 0.0), std::invalid_argument);
}

TEST(ContrastiveLoss, NonNegativeAndZeroExactlyWhenSatisfied) {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 300; ++rep) {
    const auto v = random_vec(rng, 4, 0.5), a = random_vec(rng, 4, 0.5);
    const bool matching = rep % 2 == 0;
    Graph g;
    const double loss = g.item(contrastive_loss(g, g.input({4}, v), g.input({4}, a), matching, 1.0));
    EXPECT_GE(loss, 0.0);
    const double d = dist(v, a);
    EXPECT_EQ(loss == 0.0, matching ? d == 0.0 : d >= 1.0);
  }
}

TEST(AveNet, DistanceExtremes) {
  Graph g;
  EXPECT_NEAR(g.item(avenet_distance(g, g.input({2}, {3, 4}), g.input({2}, {0.3, 0.4}))), 0.0, 1e-8);
  EXPECT_NEAR(g.item(avenet_distance(g, g.input({2}, {3, 4}), g.input({2}, {-6, -8}))), 2.0, 1e-12);
}

TEST(AveNet, HeadProbabilities) {
  Graph g;
  const Var w = g.input({2, 1}, {-1, 1});
  const Var b = g.input({2}, {0, 0});
  // s = 0: logits [0, 0].
  const double l0 = g.item(avenet_loss(g, g.input({2}, {1, 0}), g.input({2}, {2, 0}), true, w, b));
  EXPECT_NEAR(std::exp(-l0), 0.5, 1e-8);
  // s = 2: logits [-2, 2], P(match) = 1 / (1 + e^4).
  const double l2 = g.item(avenet_loss(g, g.input({2}, {1, 0}), g.input({2}, {-1, 0}), true, w, b));
  EXPECT_NEAR(std::exp(-l2), 1.0 / (1.0 + std::exp(4.0)), 1e-12);
  const double n2 = g.item(avenet_loss(g, g.input({2}, {1, 0}), g.input({2}, {-1, 0}), false, w, b));
  EXPECT_NEAR(std::exp(-n2), std::exp(4.0) / (1.0 + std::exp(4.0)), 1e-12);
}

TEST(AveNet, HeadStartsWithThresholdAtOne) {
  AveNetHead head;
  Graph g;
  const double loss = g.item(avenet_loss(g, g.input({2}, {1, 0}), g.input({2}, {0, 1}), true, g.frozen(head.weight),
                                         g.frozen(head.bias)));
  // s = sqrt(2) > 1, so the head leans toward non-match.
  EXPECT_GT(loss, std::log(2.0));
}

TEST(Objective, Parsing) {
  EXPECT_EQ(parse_objective("multiway"), Objective::kMultiway);
  EXPECT_EQ(parse_objective(to_string(Objective::kAveNet)), Objective::kAveNet);
  EXPECT_EQ(parse_inverse_mode("reciprocal"), InverseMode::kReciprocal);
  EXPECT_THROW(parse_objective("triplet"), ConfigError);
  EXPECT_THROW(parse_inverse_mode("log"), ConfigError);
}

TEST(MultiwayLoss, OneAdamStepDecreasesExampleLoss) {
  synth::GenConfig gc;
  const auto track = synth::gen_track(gc, 17);
  auto enc = Encoders::build({}, 18);
  std::mt19937_64 rng(19);
  const auto sample = sample_multiway(TrackView::of(track), 8, rng);
  const auto ex = materialize(sample, dsp::MfccExtractor(gc.sample_rate));
  auto params = enc.parameters();
  ndgrad::AdamState adam(params, {1e-4});

  auto loss_of = [&](bool train) {
    Graph g;
    const auto mode = train ? GradMode::kTrainable : GradMode::kFrozen;
    const auto b = enc.bind(g, mode, mode);
    const Var v = enc.visual_forward(g, b, ex.video);
    std::vector<Var> a;
    for (const auto& m : ex.audio_candidates) a.push_back(enc.audio_forward(g, b, m));
    const Var loss = multiway_loss(g, v, a, ex.target);
    const double value = g.item(loss);
    if (train) g.backward(loss);
    return value;
  };
  const double before = loss_of(true);
  EXPECT_NEAR(before, std::log(8.0), 1e-12);
  ndgrad::adam_step(params, adam);
  EXPECT_LT(loss_of(false), before);
}
