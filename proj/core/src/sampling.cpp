#include "syncmatch/sampling.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "syncmatch/errors.hpp"

namespace syncmatch {

namespace {

constexpr std::size_t kSeg = kFramesPerStack;

// Placements of k non-overlapping length-5 segments in a run of r frames.
double placements(std::size_t r, std::size_t k) {
  if (k == 0) return 1.0;
  if (r < kSeg * k) return 0.0;
  const std::size_t m = r - (kSeg - 1) * k;  // C(m, k)
  double c = 1.0;
  for (std::size_t i = 1; i <= k; ++i) c = c * static_cast<double>(m - k + i) / static_cast<double>(i);
  return c;
}

// Uniform placement of k segments in frames [base, base + r).
void place_uniform(std::size_t base, std::size_t r, std::size_t k, std::mt19937_64& rng,
                   std::vector<std::size_t>& out) {
  if (k == 0) return;
  const std::size_t m = r - (kSeg - 1) * k;
  std::vector<std::size_t> pool(m);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(i, m - 1)(rng);
    std::swap(pool[i], pool[j]);
  }
  std::sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
  for (std::size_t i = 0; i < k; ++i) out.push_back(base + pool[i] + (kSeg - 1) * i);
}

std::size_t samples_per_frame(const dsp::Waveform& w) { return static_cast<std::size_t>(w.sample_rate / kVideoFps); }

}  // namespace

TrackView TrackView::of(const synth::Track& t) { return TrackView{&t, t.frames(), t.duration()}; }

bool usable_for_N(const TrackView& t, std::size_t n) {
  if (n < 2) throw std::invalid_argument("usable_for_N: N must be at least 2");
  return t.video_frames >= n * kSeg;
}

MultiwaySample sample_multiway(const TrackView& t, std::size_t n, std::mt19937_64& rng) {
  if (!usable_for_N(t, n)) {
    throw DataError("sample_multiway: track of " + std::to_string(t.video_frames) + " frames cannot host N=" +
                    std::to_string(n) + " non-overlapping 0.2 s segments (usable_for_N)");
  }
  const std::size_t f = t.video_frames;
  const std::size_t negatives = n - 1;
  std::vector<std::size_t> anchors;
  for (std::size_t a = 0; a + kSeg <= f; ++a) {
    if (a / kSeg + (f - kSeg - a) / kSeg >= negatives) anchors.push_back(a);
  }
  MultiwaySample s;
  s.track = t.track;
  s.anchor = anchors[std::uniform_int_distribution<std::size_t>(0, anchors.size() - 1)(rng)];

  const std::size_t left = s.anchor, right = f - kSeg - s.anchor;
  std::vector<double> weight(negatives + 1);
  for (std::size_t k = 0; k <= negatives; ++k) weight[k] = placements(left, k) * placements(right, negatives - k);
  const std::size_t k_left = std::discrete_distribution<std::size_t>(weight.begin(), weight.end())(rng);

  s.candidates.push_back(s.anchor);
  place_uniform(0, left, k_left, rng, s.candidates);
  place_uniform(s.anchor + kSeg, right, negatives - k_left, rng, s.candidates);
  std::shuffle(s.candidates.begin(), s.candidates.end(), rng);
  s.target = static_cast<std::size_t>(std::find(s.candidates.begin(), s.candidates.end(), s.anchor) -
                                      s.candidates.begin());
  return s;
}

PairSample sample_pair(const TrackView& t, std::mt19937_64& rng, double p_match) {
  if (t.video_frames < 2 * kSeg) {
    throw DataError("sample_pair: track of " + std::to_string(t.video_frames) +
                    " frames is shorter than the 0.4 s minimum");
  }
  if (p_match < 0.0 || p_match > 1.0) throw std::invalid_argument("sample_pair: p_match outside [0, 1]");
  PairSample s;
  s.track = t.track;
  const std::size_t last = t.video_frames - kSeg;
  s.anchor = std::uniform_int_distribution<std::size_t>(0, last)(rng);
  s.matching = std::bernoulli_distribution(p_match)(rng);
  if (s.matching) {
    s.audio = s.anchor;
  } else {
    std::size_t a = std::uniform_int_distribution<std::size_t>(0, last - 1)(rng);
    s.audio = a >= s.anchor ? a + 1 : a;
  }
  return s;
}

std::span<const double> audio_segment(const dsp::Waveform& w, std::size_t start_frame) {
  const std::size_t spf = samples_per_frame(w);
  const std::size_t begin = start_frame * spf, len = kSeg * spf;
  if (begin + len > w.samples.size()) {
    throw std::out_of_range("audio_segment: frames [" + std::to_string(start_frame) + ", " +
                            std::to_string(start_frame + kSeg) + ") run past the end of the audio");
  }
  return std::span<const double>(w.samples).subspan(begin, len);
}

MultiwayExample materialize(const MultiwaySample& s, const dsp::MfccExtractor& mfcc) {
  MultiwayExample e;
  e.video = stack_frames(s.track->video, s.anchor);
  for (std::size_t c : s.candidates) e.audio_candidates.push_back(mfcc(audio_segment(s.track->waveform, c)));
  e.target = s.target;
  return e;
}

PairExample materialize(const PairSample& s, const dsp::MfccExtractor& mfcc) {
  return PairExample{stack_frames(s.track->video, s.anchor), mfcc(audio_segment(s.track->waveform, s.audio)),
                     s.matching};
}

}  // namespace syncmatch
