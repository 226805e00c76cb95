#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <unistd.h>

#include "syncmatch/errors.hpp"
#include "syncmatch/sampling.hpp"
#include "syncmatch/synthdata.hpp"

using namespace syncmatch;
using namespace syncmatch::synth;
namespace fs = std::filesystem;

namespace {

GenConfig quiet() {
  GenConfig c;
  c.audio_noise = 0.0;
  c.video_noise = 0.0;
  return c;
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("syncmatch_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST(GenConfig, ValidationAndJson) {
  GenConfig c;
  EXPECT_NO_THROW(c.validate());
  GenConfig bad = c;
  bad.min_duration = 1.5;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.sample_rate = 16001;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.alphabet_size = 2;
  EXPECT_THROW(bad.validate(), ConfigError);
  c.resolution = 48;
  c.rgb = false;
  EXPECT_EQ(nlohmann::json(c).get<GenConfig>(), c);
}

TEST(RenderTrack, LatentLengthMatchesDuration) {
  GenConfig c;
  c.min_duration = c.max_duration = 2.0;
  const auto t = gen_track(c, 1);
  EXPECT_EQ(t.latent.size(), 10u);
  EXPECT_EQ(t.frames(), 50u);
  EXPECT_EQ(t.waveform.samples.size(), 32000u);
  EXPECT_DOUBLE_EQ(t.duration(), 2.0);
}

TEST(RenderTrack, NoiselessRenderingIgnoresSeed) {
  const std::vector<int> latent{3, 1, 0, 7};
  const auto a = render_track(quiet(), latent, 1);
  const auto b = render_track(quiet(), latent, 2);
  EXPECT_EQ(a.waveform.samples, b.waveform.samples);
  EXPECT_EQ(a.video.pixels, b.video.pixels);
}

TEST(RenderTrack, NoisyRenderingIsSeedDeterministic) {
  const std::vector<int> latent{3, 1, 0, 7};
  const auto a = render_track(GenConfig{}, latent, 1);
  const auto b = render_track(GenConfig{}, latent, 1);
  const auto c = render_track(GenConfig{}, latent, 2);
  EXPECT_EQ(a.waveform.samples, b.waveform.samples);
  EXPECT_EQ(a.video.pixels, b.video.pixels);
  EXPECT_NE(a.waveform.samples, c.waveform.samples);
  EXPECT_NE(a.video.pixels, c.video.pixels);
}

TEST(RenderTrack, BlankSymbolIsSilentAndStill) {
  const std::vector<int> latent{0, 5};
  const auto t = render_track(quiet(), latent, 3);
  for (std::size_t i = 0; i < 3200; ++i) ASSERT_EQ(t.waveform.samples[i], 0.0);
  bool voiced = false;
  for (std::size_t i = 3200; i < 6400; ++i) voiced |= t.waveform.samples[i] != 0.0;
  EXPECT_TRUE(voiced);
  const std::size_t fs = t.video.frame_size();
  const std::set<std::uint8_t> blank(t.video.pixels.begin(), t.video.pixels.begin() + 5 * fs);
  EXPECT_EQ(blank.size(), 1u);
  const std::set<std::uint8_t> moving(t.video.pixels.begin() + 5 * fs, t.video.pixels.end());
  EXPECT_GT(moving.size(), 10u);
}

TEST(RenderTrack, SymbolsAreSeparableInMfcc) {
  const GenConfig c = quiet();
  const dsp::MfccExtractor mfcc(c.sample_rate);
  std::vector<dsp::Matrix> windows;
  for (int s = 0; s < static_cast<int>(c.alphabet_size); ++s) {
    const std::vector<int> one{s};
    windows.push_back(mfcc(render_track(c, one, 0).waveform).coeffs);
  }
  for (std::size_t a = 0; a < windows.size(); ++a) {
    for (std::size_t b = a + 1; b < windows.size(); ++b) {
      // every frame column differs, not just the window on average
      for (std::size_t t = 0; t < windows[a].cols; ++t) {
        double d = 0;
        for (std::size_t r = 0; r < windows[a].rows; ++r) {
          d += std::pow(windows[a](r, t) - windows[b](r, t), 2);
        }
        EXPECT_GT(std::sqrt(d), 1e-2) << "symbols " << a << "," << b << " frame " << t;
      }
    }
  }
}

TEST(RenderTrack, RejectsBadSymbols) {
  const std::vector<int> bad{12};
  EXPECT_THROW(render_track(GenConfig{}, bad, 0), ConfigError);
  EXPECT_THROW(render_track(GenConfig{}, std::vector<int>{}, 0), ConfigError);
}

TEST(Words, DistinctAndNonBlank) {
  GenConfig c;
  const auto words = word_definitions(c, 4);
  ASSERT_EQ(words.size(), c.vocabulary);
  EXPECT_EQ(std::set<std::vector<int>>(words.begin(), words.end()).size(), words.size());
  for (const auto& w : words) {
    EXPECT_EQ(w.size(), c.word_length);
    for (int s : w) EXPECT_NE(s, 0);
  }
  c.vocabulary = 122;
  EXPECT_THROW(word_definitions(c, 4), ConfigError);
}

TEST(Corpus, SplitIsDisjointAndExhaustive) {
  GenConfig c;
  c.max_duration = 1.6;
  const auto corpus = gen_corpus(c, 60, 5, 40);
  const auto train = corpus.tracks_in("train"), test = corpus.tracks_in("test");
  EXPECT_EQ(train.size() + test.size(), corpus.tracks.size());
  std::set<const Track*> all(train.begin(), train.end());
  for (const auto* t : test) EXPECT_TRUE(all.insert(t).second);
  EXPECT_EQ(corpus.words_in("train").size() + corpus.words_in("test").size(), 40u);
  std::size_t in_test = 0;
  for (int i = 0; i < 5000; ++i) in_test += in_test_split("track-" + std::to_string(i));
  EXPECT_NEAR(in_test / 5000.0, 0.1, 0.02);
}

TEST(Corpus, UsableCountsNonIncreasingInN) {
  const auto corpus = gen_corpus(GenConfig{}, 80, 6);
  std::size_t prev = corpus.tracks.size();
  for (std::size_t n : {2, 5, 10, 20, 21}) {
    std::size_t usable = 0;
    for (const auto& t : corpus.tracks) usable += usable_for_N(TrackView::of(t), n);
    EXPECT_LE(usable, prev);
    prev = usable;
  }
  // 4.0 s caps every track at N = 20.
  EXPECT_EQ(prev, 0u);
}

TEST(Corpus, ManifestDeterministicAndRoundTrips) {
  GenConfig c;
  c.max_duration = 2.0;
  const auto a = gen_corpus(c, 12, 7, 6);
  const auto b = gen_corpus(c, 12, 7, 6);
  EXPECT_EQ(a.manifest, b.manifest);

  const auto dir = scratch_dir("corpus");
  write_corpus(dir, a);
  const auto r = read_corpus(dir);
  EXPECT_EQ(r.manifest, a.manifest);
  EXPECT_EQ(r.config, a.config);
  EXPECT_EQ(r.seed, a.seed);
  ASSERT_EQ(r.tracks.size(), a.tracks.size());
  for (std::size_t i = 0; i < a.tracks.size(); ++i) {
    EXPECT_EQ(r.tracks[i].waveform.samples, a.tracks[i].waveform.samples);
    EXPECT_EQ(r.tracks[i].video.pixels, a.tracks[i].video.pixels);
  }
  ASSERT_EQ(r.words.size(), a.words.size());
  for (std::size_t i = 0; i < a.words.size(); ++i) {
    EXPECT_EQ(r.words[i].label, a.words[i].label);
    EXPECT_EQ(r.words[i].video.pixels, a.words[i].video.pixels);
  }
  fs::remove_all(dir);
}

TEST(FrameFile, TruncationAndMagicAreErrors) {
  const auto dir = scratch_dir("frames");
  fs::create_directories(dir);
  const auto t = render_track(quiet(), std::vector<int>{1}, 0);
  write_frames(dir / "a.frames", t.video);
  EXPECT_EQ(read_frames(dir / "a.frames").pixels, t.video.pixels);

  fs::resize_file(dir / "a.frames", fs::file_size(dir / "a.frames") - 1);
  try {
    read_frames(dir / "a.frames");
    FAIL() << "truncated file accepted";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("pixel bytes"), std::string::npos);
  }
  {
    std::ofstream os(dir / "b.frames", std::ios::binary);
    os << "not a frame file at all";
  }
  EXPECT_THROW(read_frames(dir / "b.frames"), IoError);
  EXPECT_THROW(read_corpus(dir / "missing"), IoError);
  fs::remove_all(dir);
}
