#pragma once

// Synthetic talking-face corpus. Each track is a sequence of latent symbols,
// one per 0.2 s unit. Symbol k drives audio samples [0.2k, 0.2(k+1)) s and
// video frames 5k..5k+4, so the audio-visual alignment is exact by
// construction. Symbol 0 is optionally a blank (silence, closed mouth), which
// gives the corpus non-informative windows.
//
// Audio template: three harmonics of a per-symbol gliding fundamental under a
// syllable-like envelope. Video template: a coloured blob ("mouth") moving
// along a per-symbol path, its radius following the same envelope.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "syncmatch/dsp.hpp"
#include "syncmatch/video.hpp"

namespace syncmatch::synth {

inline constexpr double kSymbolSeconds = 0.2;

struct GenConfig {
  int sample_rate = 16000;
  std::size_t alphabet_size = 12;
  bool blank_symbol = true;
  double min_duration = 1.6;
  double max_duration = 4.0;
  std::size_t resolution = 32;
  bool rgb = true;
  double audio_noise = 0.05;
  double video_noise = 0.1;
  std::size_t vocabulary = 10;
  std::size_t word_length = 2;

  void validate() const;
  std::size_t samples_per_frame() const noexcept { return static_cast<std::size_t>(sample_rate / kVideoFps); }

  bool operator==(const GenConfig&) const = default;
};

void to_json(nlohmann::json& j, const GenConfig& c);
void from_json(const nlohmann::json& j, GenConfig& c);

struct Track {
  std::string id;
  std::uint64_t seed = 0;
  dsp::Waveform waveform;
  VideoClip video;
  std::vector<int> latent;

  std::size_t frames() const noexcept { return video.frames; }
  double duration() const noexcept { return waveform.duration(); }
};

struct WordClip {
  std::string id;
  VideoClip video;
  std::size_t label = 0;
};

/// Renders a symbol sequence; deterministic in (symbols, seed).
Track render_track(const GenConfig& cfg, std::span<const int> latent, std::uint64_t seed, std::string id = {});

/// Draws i.i.d. uniform symbols for a duration drawn from the configured range.
Track gen_track(const GenConfig& cfg, std::uint64_t seed, std::string id = {});

/// V distinct non-blank symbol sequences of length word_length.
std::vector<std::vector<int>> word_definitions(const GenConfig& cfg, std::uint64_t seed);

WordClip gen_word_clip(const GenConfig& cfg, std::span<const int> word, std::size_t label, std::uint64_t seed,
                       std::string id = {});

/// Fixed 90/10 split keyed on a hash of the id.
bool in_test_split(std::string_view id) noexcept;

struct ManifestEntry {
  std::string id;
  std::string kind;  // "track" or "word"
  std::string split;
  std::uint64_t seed = 0;
  double duration = 0.0;
  std::vector<int> latent;
  std::size_t label = 0;  // words only

  bool operator==(const ManifestEntry&) const = default;
};

void to_json(nlohmann::json& j, const ManifestEntry& e);
void from_json(const nlohmann::json& j, ManifestEntry& e);

struct Corpus {
  GenConfig config;
  std::uint64_t seed = 0;
  std::vector<Track> tracks;
  std::vector<WordClip> words;
  std::vector<ManifestEntry> manifest;

  std::vector<const Track*> tracks_in(std::string_view split) const;
  std::vector<const WordClip*> words_in(std::string_view split) const;
};

Corpus gen_corpus(const GenConfig& cfg, std::size_t n_tracks, std::uint64_t seed, std::size_t n_word_clips = 0);

// On-disk layout: <dir>/manifest.jsonl, <dir>/tracks/<id>.wav,
// <dir>/tracks/<id>.frames, <dir>/words/<id>.frames.
void write_corpus(const std::filesystem::path& dir, const Corpus& corpus);
Corpus read_corpus(const std::filesystem::path& dir);

inline constexpr std::uint32_t kFrameFileMagic = 0x52464D53;  // "SMFR" little-endian

void write_frames(const std::filesystem::path& path, const VideoClip& clip);
VideoClip read_frames(const std::filesystem::path& path);

}  // namespace syncmatch::synth
