#pragma once

// Training-example construction. All segments are 0.2 s (5 video frames) and
// start on the 40 ms video-frame grid; audio segment starts are expressed in
// video frames as well (1 frame = sample_rate / 25 audio samples).

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "syncmatch/dsp.hpp"
#include "syncmatch/synthdata.hpp"
#include "syncmatch/video.hpp"

namespace syncmatch {

struct TrackView {
  const synth::Track* track = nullptr;
  std::size_t video_frames = 0;
  double audio_duration = 0.0;

  static TrackView of(const synth::Track& t);
};

/// True iff the track can host an anchor plus N pairwise non-overlapping
/// 0.2 s audio segments, i.e. audio duration >= N * 0.2 s.
bool usable_for_N(const TrackView& t, std::size_t n);

struct MultiwaySample {
  const synth::Track* track = nullptr;
  std::size_t anchor = 0;                // first video frame of the anchor
  std::vector<std::size_t> candidates;   // first frame of each audio segment
  std::size_t target = 0;                // candidates[target] == anchor
};

/// Anchor uniform over positions that admit N-1 further non-overlapping
/// segments; the negative configuration is uniform over all such placements;
/// candidate order is a uniform permutation.
MultiwaySample sample_multiway(const TrackView& t, std::size_t n, std::mt19937_64& rng);

struct PairSample {
  const synth::Track* track = nullptr;
  std::size_t anchor = 0;
  std::size_t audio = 0;
  bool matching = true;
};

/// Matching with probability p_match, otherwise a same-track audio segment at
/// least one video frame away from the anchor.
PairSample sample_pair(const TrackView& t, std::mt19937_64& rng, double p_match = 0.5);

/// 0.2 s of audio starting at a video-frame index.
std::span<const double> audio_segment(const dsp::Waveform& w, std::size_t start_frame);

struct MultiwayExample {
  FrameStack video;
  std::vector<dsp::MfccWindow> audio_candidates;
  std::size_t target = 0;

  std::size_t n() const noexcept { return audio_candidates.size(); }
};

struct PairExample {
  FrameStack video;
  dsp::MfccWindow audio;
  bool matching = true;
};

MultiwayExample materialize(const MultiwaySample& s, const dsp::MfccExtractor& mfcc);
PairExample materialize(const PairSample& s, const dsp::MfccExtractor& mfcc);

}  // namespace syncmatch
