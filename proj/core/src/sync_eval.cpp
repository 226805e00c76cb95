#include "syncmatch/sync_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>
#include <stdexcept>

#include "syncmatch/errors.hpp"
#include "syncmatch/parallel.hpp"
#include "syncmatch/rng.hpp"
#include "syncmatch/sampling.hpp"

namespace syncmatch {

namespace {

constexpr std::size_t kSeg = kFramesPerStack;

std::size_t audio_frames(const dsp::Waveform& w) {
  return w.samples.size() / static_cast<std::size_t>(w.sample_rate / kVideoFps);
}

double euclidean(const Embedding& a, const Embedding& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

// Embeddings of video windows [first, first + F) and of audio windows
// [first - 15, first + F - 1 + 15].
struct EmbeddingCache {
  std::size_t first = 0;
  std::vector<Embedding> video;
  std::vector<Embedding> audio;

  EmbeddingCache(const SyncModel& model, const VideoClip& v, const dsp::Waveform& a, std::size_t first_frame,
                 std::size_t features)
      : first(first_frame) {
    for (std::size_t j = 0; j < features; ++j) video.push_back(model.embed_video(v, first + j));
    for (std::size_t p = first - kMaxOffset; p <= first + features - 1 + kMaxOffset; ++p) {
      audio.push_back(model.embed_audio(a, p));
    }
  }

  DistanceCurve curve(std::size_t start, std::size_t features) const {
    DistanceCurve c;
    for (std::size_t i = 0; i < kOffsetCount; ++i) {
      double total = 0.0;
      for (std::size_t j = 0; j < features; ++j) {
        const std::size_t s = start + j;
        // audio index of frame s + offset, relative to first - 15
        total += euclidean(video[s - first], audio[s - first + i]);
      }
      c.mean_distance[i] = total / static_cast<double>(features);
    }
    return c;
  }
};

void check_context(const VideoClip& video, const dsp::Waveform& audio, std::size_t center, std::size_t k) {
  const std::ptrdiff_t first = context_start(center, k);
  const std::size_t features = context_features(k);
  const std::ptrdiff_t lo = first - kMaxOffset;
  const std::ptrdiff_t hi = first + static_cast<std::ptrdiff_t>(features - 1 + kMaxOffset + kSeg);
  const auto limit = static_cast<std::ptrdiff_t>(std::min(video.frames, audio_frames(audio)));
  if (lo < 0 || hi > limit || first + static_cast<std::ptrdiff_t>(k) > static_cast<std::ptrdiff_t>(video.frames)) {
    throw DataError("distance_curve: K=" + std::to_string(k) + " centred on frame " + std::to_string(center) +
                    " needs frames [" + std::to_string(lo) + ", " + std::to_string(hi) + "), i.e. a track of at least " +
                    std::to_string(k + 2 * kMaxOffset) + " frames with the query at least " +
                    std::to_string(kMaxOffset + (k - 1) / 2) + " frames from the start; track has " +
                    std::to_string(limit) + " frames");
  }
}

std::vector<std::vector<SyncResult>> run_trials(std::span<const synth::Track* const> tracks, const SyncModel& model,
                                                std::span<const std::size_t> ks, std::size_t trials,
                                                std::uint64_t seed) {
  if (trials == 0) throw std::invalid_argument("sync_accuracy: trials must be at least 1");
  if (ks.empty()) throw std::invalid_argument("sync_accuracy: no context lengths requested");
  const std::size_t k_max = *std::max_element(ks.begin(), ks.end());
  for (std::size_t k : ks) context_features(k);
  const std::size_t f_max = context_features(k_max);
  const std::size_t needed = k_max + 2 * kMaxOffset;

  const bool any = std::any_of(tracks.begin(), tracks.end(), [&](const synth::Track* t) {
    return t->frames() >= needed + kMaxOffset;
  });
  if (!any) {
    throw DataError("sync_accuracy: no usable tracks; K=" + std::to_string(k_max) + " needs at least one track of " +
                    std::to_string(needed + kMaxOffset) + " frames (" +
                    std::to_string((needed + kMaxOffset) / static_cast<double>(kVideoFps)) + " s)");
  }

  std::vector<std::vector<SyncResult>> results(trials);
  parallel_for(trials, [&](std::size_t trial) {
    std::mt19937_64 rng(derive_seed(seed, {trial}));
    const int delta = std::uniform_int_distribution<int>(-kMaxOffset, kMaxOffset)(rng);
    const std::size_t need = needed + static_cast<std::size_t>(std::abs(delta));
    std::vector<const synth::Track*> eligible;
    for (const auto* t : tracks)
      if (t->frames() >= need) eligible.push_back(t);
    const synth::Track& track = *eligible[std::uniform_int_distribution<std::size_t>(0, eligible.size() - 1)(rng)];

    const std::size_t lo = kMaxOffset + static_cast<std::size_t>(std::max(0, delta));
    const std::size_t hi = track.frames() - f_max - (kSeg - 1 + kMaxOffset) - static_cast<std::size_t>(std::max(0, -delta));
    const std::size_t first = std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    const std::size_t center = first + (k_max - 1) / 2;

    const dsp::Waveform shifted = shift_audio(track.waveform, delta);
    const EmbeddingCache cache(model, track.video, shifted, first, f_max);
    for (std::size_t k : ks) {
      const auto start = static_cast<std::size_t>(context_start(center, k));
      const int predicted = predict_offset(cache.curve(start, context_features(k)));
      results[trial].push_back(SyncResult{predicted, delta, within_one_frame(predicted, delta), k});
    }
  });
  return results;
}

}  // namespace

EncoderSyncModel::EncoderSyncModel(const Encoders& encoders, int sample_rate, bool normalize)
    : encoders_(encoders), mfcc_(sample_rate), normalize_(normalize) {}

namespace {

Embedding normalized(Embedding e) {
  double ss = 0.0;
  for (double v : e) ss += v * v;
  const double norm = std::max(std::sqrt(ss), ndgrad::kNormalizeEpsilon);
  for (double& v : e) v /= norm;
  return e;
}

}  // namespace

Embedding EncoderSyncModel::embed_video(const VideoClip& video, std::size_t start_frame) const {
  auto e = encoders_.embed_visual(stack_frames(video, start_frame));
  return normalize_ ? normalized(std::move(e)) : e;
}

Embedding EncoderSyncModel::embed_audio(const dsp::Waveform& audio, std::size_t start_frame) const {
  auto e = encoders_.embed_audio(mfcc_(audio_segment(audio, start_frame)));
  return normalize_ ? normalized(std::move(e)) : e;
}

std::size_t context_features(std::size_t context_frames) {
  if (context_frames < kSeg) {
    throw std::invalid_argument("context of " + std::to_string(context_frames) +
                                " frames is shorter than one 5-frame window");
  }
  return context_frames - (kSeg - 1);
}

std::ptrdiff_t context_start(std::size_t center, std::size_t context_frames) noexcept {
  return static_cast<std::ptrdiff_t>(center) - static_cast<std::ptrdiff_t>((context_frames - 1) / 2);
}

DistanceCurve distance_curve(const SyncModel& model, const VideoClip& video, const dsp::Waveform& audio,
                             std::size_t center, std::size_t context_frames) {
  const std::size_t features = context_features(context_frames);
  check_context(video, audio, center, context_frames);
  const auto first = static_cast<std::size_t>(context_start(center, context_frames));
  return EmbeddingCache(model, video, audio, first, features).curve(first, features);
}

int predict_offset(const DistanceCurve& curve) {
  std::size_t best = static_cast<std::size_t>(kMaxOffset);
  for (std::size_t i = 0; i < kOffsetCount; ++i) {
    const double d = curve.mean_distance[i], b = curve.mean_distance[best];
    const int o = DistanceCurve::offset_at(i), ob = DistanceCurve::offset_at(best);
    if (d < b || (d == b && (std::abs(o) < std::abs(ob) || (std::abs(o) == std::abs(ob) && o < ob)))) best = i;
  }
  return DistanceCurve::offset_at(best);
}

bool within_one_frame(int predicted, int truth) noexcept { return std::abs(predicted - truth) <= 1; }

dsp::Waveform shift_audio(const dsp::Waveform& audio, int offset) {
  dsp::Waveform out{std::vector<double>(audio.samples.size(), 0.0), audio.sample_rate};
  const auto n = static_cast<std::ptrdiff_t>(audio.samples.size());
  const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(offset) * (audio.sample_rate / kVideoFps);
  for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(0, shift); i < n && i - shift < n; ++i) {
    out.samples[static_cast<std::size_t>(i)] = audio.samples[static_cast<std::size_t>(i - shift)];
  }
  return out;
}

std::vector<SyncAccuracyRow> sync_accuracy_table(std::span<const synth::Track* const> tracks, const SyncModel& model,
                                                 std::span<const std::size_t> context_frames, std::size_t trials,
                                                 std::uint64_t seed) {
  const auto results = run_trials(tracks, model, context_frames, trials, seed);
  std::vector<SyncAccuracyRow> rows;
  for (std::size_t k = 0; k < context_frames.size(); ++k) {
    SyncAccuracyRow row{context_frames[k], trials, 0};
    for (const auto& r : results) row.correct += r[k].correct ? 1 : 0;
    rows.push_back(row);
  }
  return rows;
}

double sync_accuracy(std::span<const synth::Track* const> tracks, std::size_t context_frames, const SyncModel& model,
                     std::size_t trials, std::uint64_t seed) {
  const std::size_t ks[] = {context_frames};
  return sync_accuracy_table(tracks, model, ks, trials, seed).front().accuracy();
}

std::vector<SyncResult> sync_trials(std::span<const synth::Track* const> tracks, const SyncModel& model,
                                    std::size_t context_frames, std::size_t trials, std::uint64_t seed) {
  const std::size_t ks[] = {context_frames};
  const auto results = run_trials(tracks, model, ks, trials, seed);
  std::vector<SyncResult> out;
  for (const auto& r : results) out.push_back(r.front());
  return out;
}

}  // namespace syncmatch
