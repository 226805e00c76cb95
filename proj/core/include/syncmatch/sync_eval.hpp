#pragma once

// Offset search over +/-15 video frames with context averaging.
//
// K is the number of visual frames of context. A 5-frame window is the
// smallest unit, so K frames give K - 4 window positions at stride 1, and
// K = 5 means a single feature with no averaging. The K frames are centred
// on the query frame.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "syncmatch/dsp.hpp"
#include "syncmatch/encoders.hpp"
#include "syncmatch/synthdata.hpp"
#include "syncmatch/video.hpp"

namespace syncmatch {

inline constexpr int kMaxOffset = 15;
inline constexpr std::size_t kOffsetCount = 2 * kMaxOffset + 1;

struct DistanceCurve {
  std::array<double, kOffsetCount> mean_distance{};

  static constexpr int offset_at(std::size_t i) noexcept { return static_cast<int>(i) - kMaxOffset; }
  double at(int offset) const { return mean_distance.at(static_cast<std::size_t>(offset + kMaxOffset)); }
};

struct SyncResult {
  int predicted_offset = 0;
  int true_offset = 0;
  bool correct = false;
  std::size_t context_frames = 0;
};

/// Anything that maps 0.2 s windows of either stream to a shared space.
class SyncModel {
 public:
  virtual ~SyncModel() = default;
  virtual Embedding embed_video(const VideoClip& video, std::size_t start_frame) const = 0;
  virtual Embedding embed_audio(const dsp::Waveform& audio, std::size_t start_frame) const = 0;
};

class EncoderSyncModel final : public SyncModel {
 public:
  /// With `normalize`, embeddings are L2-normalized first (the AVE-Net geometry).
  explicit EncoderSyncModel(const Encoders& encoders, int sample_rate = 16000, bool normalize = false);

  Embedding embed_video(const VideoClip& video, std::size_t start_frame) const override;
  Embedding embed_audio(const dsp::Waveform& audio, std::size_t start_frame) const override;

 private:
  const Encoders& encoders_;
  dsp::MfccExtractor mfcc_;
  bool normalize_;
};

/// Number of 5-frame windows in K frames of context.
std::size_t context_features(std::size_t context_frames);

/// First frame of the K-frame context centred on `center`.
std::ptrdiff_t context_start(std::size_t center, std::size_t context_frames) noexcept;

/// Mean over the K - 4 video windows of the distance to the audio window
/// shifted by each offset in [-15, 15]. Each embedding is computed once.
DistanceCurve distance_curve(const SyncModel& model, const VideoClip& video, const dsp::Waveform& audio,
                             std::size_t center, std::size_t context_frames);

/// Argmin; ties go to the smallest |offset|, then to the negative offset.
int predict_offset(const DistanceCurve& curve);

bool within_one_frame(int predicted, int truth) noexcept;

/// Delays the audio by `offset` video frames (negative advances it), zero filling.
dsp::Waveform shift_audio(const dsp::Waveform& audio, int offset);

struct SyncAccuracyRow {
  std::size_t context_frames = 0;
  std::size_t trials = 0;
  std::size_t correct = 0;

  double accuracy() const noexcept { return trials ? static_cast<double>(correct) / trials : 0.0; }
};

/// Runs `trials` draws of (true offset uniform in [-15, 15], track, query
/// frame) and scores every requested K on the same draws. Trial i uses a
/// generator seeded from (seed, i).
std::vector<SyncAccuracyRow> sync_accuracy_table(std::span<const synth::Track* const> tracks, const SyncModel& model,
                                                 std::span<const std::size_t> context_frames, std::size_t trials,
                                                 std::uint64_t seed);

double sync_accuracy(std::span<const synth::Track* const> tracks, std::size_t context_frames, const SyncModel& model,
                     std::size_t trials, std::uint64_t seed);

/// Per-trial outcomes for one K (for inspection and tests).
std::vector<SyncResult> sync_trials(std::span<const synth::Track* const> tracks, const SyncModel& model,
                                    std::size_t context_frames, std::size_t trials, std::uint64_t seed);

}  // namespace syncmatch
