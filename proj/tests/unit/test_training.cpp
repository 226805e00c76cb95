#include <gtest/gtest.h>

#include <cmath>

#include "syncmatch/errors.hpp"
#include "syncmatch/training.hpp"

using namespace syncmatch;

namespace {

struct SmallCorpus {
  synth::Corpus corpus;
  std::vector<const synth::Track*> tracks;

  SmallCorpus() {
    synth::GenConfig gc;
    gc.min_duration = 1.6;
    gc.max_duration = 2.0;
    corpus = synth::gen_corpus(gc, 6, 21);
    for (const auto& t : corpus.tracks) tracks.push_back(&t);
  }
};

TrainConfig tiny(Objective objective) {
  TrainConfig c;
  c.objective = objective;
  c.n_way = 4;
  c.epochs = 2;
  c.batch_size = 4;
  c.examples_per_track = 2;
  c.seed = 5;
  return c;
}

std::vector<double> flatten(Encoders& enc) {
  std::vector<double> out;
  for (auto* p : enc.parameters()) out.insert(out.end(), p->values().begin(), p->values().end());
  return out;
}

}  // namespace

TEST(TrainConfig, ValidationAndJson) {
  TrainConfig c;
  c.objective = Objective::kContrastive;
  c.margin = 2.5;
  c.seed = 77;
  const auto back = nlohmann::json(c).get<TrainConfig>();
  EXPECT_EQ(back.objective, Objective::kContrastive);
  EXPECT_EQ(back.margin, 2.5);
  EXPECT_EQ(back.seed, 77u);
  EXPECT_EQ(nlohmann::json(c).at("N"), 8);
  TrainConfig bad;
  bad.n_way = 1;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = TrainConfig{};
  bad.learning_rate = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = TrainConfig{};
  bad.p_match = 1.2;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(TrainSync, MultiwayStartsAtLogNAndIsDeterministic) {
  const SmallCorpus data;
  auto a = Encoders::build({}, 1), b = Encoders::build({}, 1);
  AveNetHead ha, hb;
  std::vector<double> seen;
  const auto ra = train_sync(data.tracks, a, ha, tiny(Objective::kMultiway),
                             [&](std::size_t, double loss) { seen.push_back(loss); });
  const auto rb = train_sync(data.tracks, b, hb, tiny(Objective::kMultiway));
  EXPECT_NEAR(ra.initial_loss, std::log(4.0), 1e-12);
  ASSERT_EQ(ra.loss_trace.size(), 2u);
  EXPECT_EQ(seen, ra.loss_trace);
  for (double l : ra.loss_trace) EXPECT_TRUE(std::isfinite(l));
  EXPECT_EQ(ra.loss_trace, rb.loss_trace);
  EXPECT_EQ(flatten(a), flatten(b));
  auto fresh = Encoders::build({}, 1);
  EXPECT_NE(flatten(a), flatten(fresh));
}

TEST(TrainSync, ZeroEpochsOnlyMeasures) {
  const SmallCorpus data;
  auto enc = Encoders::build({}, 2);
  const auto before = flatten(enc);
  AveNetHead head;
  auto cfg = tiny(Objective::kMultiway);
  cfg.epochs = 0;
  const auto r = train_sync(data.tracks, enc, head, cfg);
  EXPECT_TRUE(r.loss_trace.empty());
  EXPECT_NEAR(r.initial_loss, std::log(4.0), 1e-12);
  EXPECT_EQ(flatten(enc), before);
}

TEST(TrainSync, HeadTrainedOnlyForAveNet) {
  const SmallCorpus data;
  auto enc = Encoders::build({}, 3);
  AveNetHead head;
  const std::vector<double> w0(head.weight.values().begin(), head.weight.values().end());
  train_sync(data.tracks, enc, head, tiny(Objective::kContrastive));
  EXPECT_EQ(std::vector<double>(head.weight.values().begin(), head.weight.values().end()), w0);
  train_sync(data.tracks, enc, head, tiny(Objective::kAveNet));
  EXPECT_NE(std::vector<double>(head.weight.values().begin(), head.weight.values().end()), w0);
}

TEST(TrainSync, NoUsableTrackNamesRequirement) {
  const SmallCorpus data;
  auto enc = Encoders::build({}, 4);
  AveNetHead head;
  auto cfg = tiny(Objective::kMultiway);
  cfg.n_way = 11;
  EXPECT_TRUE(trainable_tracks(data.tracks, cfg).empty());
  try {
    train_sync(data.tracks, enc, head, cfg);
    FAIL() << "training without usable tracks";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("usable_for_N(N=11)"), std::string::npos) << e.what();
  }
}
