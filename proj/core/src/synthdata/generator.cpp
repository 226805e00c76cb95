#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <set>

#include "syncmatch/errors.hpp"
#include "syncmatch/rng.hpp"
#include "syncmatch/synthdata.hpp"

namespace syncmatch::synth {

namespace {

constexpr double kBackground = 0.15;
constexpr double kLowestFundamental = 180.0;
constexpr double kHighestFundamental = 1100.0;

bool is_symbol_multiple(double seconds) {
  const double units = seconds / kSymbolSeconds;
  return std::abs(units - std::round(units)) < 1e-9;
}

// Per-symbol template parameters. Symbol 0 is blank when configured.
struct Template {
  bool blank = false;
  double fundamental = 0.0;
  double glide = 0.0;
  double rgb[3] = {0, 0, 0};
  double gray = 0.0;
  double dir_x = 0.0;
  double dir_y = 0.0;
};

Template symbol_template(const GenConfig& cfg, int symbol) {
  Template t;
  if (cfg.blank_symbol && symbol == 0) {
    t.blank = true;
    return t;
  }
  const int first = cfg.blank_symbol ? 1 : 0;
  const int count = static_cast<int>(cfg.alphabet_size) - first;
  const int j = symbol - first;
  const double frac = count > 1 ? static_cast<double>(j) / (count - 1) : 0.0;
  t.fundamental = kLowestFundamental * std::pow(kHighestFundamental / kLowestFundamental, frac);
  t.glide = j % 2 == 0 ? 0.25 : -0.25;

  // HSV(h, 0.9, 0.95) -> RGB
  const double h = 6.0 * static_cast<double>(j) / count;
  const double v = 0.95, s = 0.9;
  const double c = v * s;
  const double x = c * (1.0 - std::abs(std::fmod(h, 2.0) - 1.0));
  const double m = v - c;
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(h) % 6) {
    case 0: r = c, g = x; break;
    case 1: r = x, g = c; break;
    case 2: g = c, b = x; break;
    case 3: g = x, b = c; break;
    case 4: r = x, b = c; break;
    default: r = c, b = x; break;
  }
  t.rgb[0] = r + m;
  t.rgb[1] = g + m;
  t.rgb[2] = b + m;
  t.gray = 0.4 + 0.6 * frac;
  const double theta = 2.0 * std::numbers::pi * j / count;
  t.dir_x = std::cos(theta);
  t.dir_y = std::sin(theta);
  return t;
}

double envelope(double tau) { return std::sin(std::numbers::pi * tau / kSymbolSeconds); }

void render_audio(const GenConfig& cfg, const Template& t, std::uint64_t noise_seed, std::span<double> out) {
  std::mt19937_64 rng(noise_seed);
  std::normal_distribution<double> noise(0.0, cfg.audio_noise > 0 ? cfg.audio_noise : 1.0);
  const double sr = cfg.sample_rate;
  static constexpr double kAmp[3] = {0.3, 0.15, 0.08};
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double tau = static_cast<double>(i) / sr;
    double x = 0.0;
    if (!t.blank) {
      // phase of a linear glide f(tau) = f0 * (1 + glide * (tau / T - 0.5))
      const double phase = 2.0 * std::numbers::pi * t.fundamental *
                           (tau + t.glide * (tau * tau / (2.0 * kSymbolSeconds) - 0.5 * tau));
      for (int h = 0; h < 3; ++h) x += kAmp[h] * std::sin((h + 1) * phase);
      x *= envelope(tau);
    }
    if (cfg.audio_noise > 0) x += noise(rng);
    out[i] = dsp::quantize_pcm16(x);
  }
}

void render_video(const GenConfig& cfg, const Template& t, std::uint64_t noise_seed, VideoClip& clip,
                  std::size_t first_frame) {
  std::mt19937_64 rng(noise_seed);
  std::normal_distribution<double> noise(0.0, cfg.video_noise > 0 ? cfg.video_noise : 1.0);
  const double res = static_cast<double>(cfg.resolution);
  const double centre = (res - 1.0) / 2.0;
  for (std::size_t f = 0; f < kFramesPerStack; ++f) {
    const double tau = (static_cast<double>(f) + 0.5) / kVideoFps;
    const double progress = static_cast<double>(f) / (kFramesPerStack - 1);
    const double travel = 0.22 * res * (1.0 - 2.0 * progress);
    const double cx = centre + travel * t.dir_x;
    const double cy = centre + travel * t.dir_y;
    const double radius = res * (0.06 + 0.12 * envelope(tau));
    for (std::size_t y = 0; y < cfg.resolution; ++y) {
      for (std::size_t x = 0; x < cfg.resolution; ++x) {
        double blob = 0.0;
        if (!t.blank) {
          const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
          blob = std::exp(-(dx * dx + dy * dy) / (2.0 * radius * radius));
        }
        for (std::size_t c = 0; c < clip.channels; ++c) {
          const double colour = cfg.rgb ? t.rgb[c] : t.gray;
          double v = kBackground + (colour - kBackground) * blob;
          if (cfg.video_noise > 0) v += noise(rng);
          v = std::clamp(v, 0.0, 1.0);
          const std::size_t idx = (((first_frame + f) * clip.channels + c) * clip.height + y) * clip.width + x;
          clip.pixels[idx] = static_cast<std::uint8_t>(std::lround(v * 255.0));
        }
      }
    }
  }
}

std::string make_id(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-%05zu", prefix, i);
  return buf;
}

}  // namespace

void GenConfig::validate() const {
  if (alphabet_size < 2) throw ConfigError("alphabet_size must be at least 2");
  if (blank_symbol && alphabet_size < 3) throw ConfigError("alphabet_size must be at least 3 with a blank symbol");
  if (sample_rate <= 0 || sample_rate % (kVideoFps * 5) != 0) {
    throw ConfigError("sample_rate must be a positive multiple of 125 Hz (whole samples per frame and symbol)");
  }
  if (!(min_duration >= kSymbolSeconds) || !(max_duration >= min_duration)) {
    throw ConfigError("track duration range must satisfy 0.2 <= min_duration <= max_duration");
  }
  if (!is_symbol_multiple(min_duration) || !is_symbol_multiple(max_duration)) {
    throw ConfigError("track durations must be multiples of 0.2 s");
  }
  if (resolution < 4) throw ConfigError("resolution must be at least 4");
  if (audio_noise < 0 || video_noise < 0) throw ConfigError("noise levels must be non-negative");
  if (word_length == 0) throw ConfigError("word_length must be positive");
}

void to_json(nlohmann::json& j, const GenConfig& c) {
  j = nlohmann::json{{"sample_rate", c.sample_rate},   {"alphabet_size", c.alphabet_size},
                     {"blank_symbol", c.blank_symbol}, {"min_duration", c.min_duration},
                     {"max_duration", c.max_duration}, {"resolution", c.resolution},
                     {"rgb", c.rgb},                   {"audio_noise", c.audio_noise},
                     {"video_noise", c.video_noise},   {"vocabulary", c.vocabulary},
                     {"word_length", c.word_length}};
}

void from_json(const nlohmann::json& j, GenConfig& c) {
  j.at("sample_rate").get_to(c.sample_rate);
  j.at("alphabet_size").get_to(c.alphabet_size);
  j.at("blank_symbol").get_to(c.blank_symbol);
  j.at("min_duration").get_to(c.min_duration);
  j.at("max_duration").get_to(c.max_duration);
  j.at("resolution").get_to(c.resolution);
  j.at("rgb").get_to(c.rgb);
  j.at("audio_noise").get_to(c.audio_noise);
  j.at("video_noise").get_to(c.video_noise);
  j.at("vocabulary").get_to(c.vocabulary);
  j.at("word_length").get_to(c.word_length);
}

Track render_track(const GenConfig& cfg, std::span<const int> latent, std::uint64_t seed, std::string id) {
  cfg.validate();
  if (latent.empty()) throw ConfigError("render_track: empty symbol sequence");
  const std::size_t samples_per_symbol = cfg.samples_per_frame() * kFramesPerStack;
  Track t;
  t.id = std::move(id);
  t.seed = seed;
  t.latent.assign(latent.begin(), latent.end());
  t.waveform.sample_rate = cfg.sample_rate;
  t.waveform.samples.assign(latent.size() * samples_per_symbol, 0.0);
  t.video.frames = latent.size() * kFramesPerStack;
  t.video.channels = cfg.rgb ? 3 : 1;
  t.video.height = t.video.width = cfg.resolution;
  t.video.pixels.assign(t.video.frames * t.video.frame_size(), 0);
  for (std::size_t k = 0; k < latent.size(); ++k) {
    if (latent[k] < 0 || static_cast<std::size_t>(latent[k]) >= cfg.alphabet_size) {
      throw ConfigError("render_track: symbol " + std::to_string(latent[k]) + " outside the alphabet");
    }
    const Template tpl = symbol_template(cfg, latent[k]);
    render_audio(cfg, tpl, derive_seed(seed, {k, 0}),
                 std::span<double>(t.waveform.samples).subspan(k * samples_per_symbol, samples_per_symbol));
    render_video(cfg, tpl, derive_seed(seed, {k, 1}), t.video, k * kFramesPerStack);
  }
  return t;
}

Track gen_track(const GenConfig& cfg, std::uint64_t seed, std::string id) {
  cfg.validate();
  std::mt19937_64 rng(derive_seed(seed, {0x5eed}));
  const auto lo = static_cast<int>(std::lround(cfg.min_duration / kSymbolSeconds));
  const auto hi = static_cast<int>(std::lround(cfg.max_duration / kSymbolSeconds));
  const int units = std::uniform_int_distribution<int>(lo, hi)(rng);
  std::uniform_int_distribution<int> symbol(0, static_cast<int>(cfg.alphabet_size) - 1);
  std::vector<int> latent(static_cast<std::size_t>(units));
  for (int& s : latent) s = symbol(rng);
  return render_track(cfg, latent, seed, std::move(id));
}

std::vector<std::vector<int>> word_definitions(const GenConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const int first = cfg.blank_symbol ? 1 : 0;
  const int last = static_cast<int>(cfg.alphabet_size) - 1;
  const double available = std::pow(static_cast<double>(last - first + 1), static_cast<double>(cfg.word_length));
  if (static_cast<double>(cfg.vocabulary) > available) {
    throw ConfigError("vocabulary of " + std::to_string(cfg.vocabulary) + " words exceeds the " +
                      std::to_string(static_cast<long long>(available)) + " distinct symbol sequences");
  }
  std::mt19937_64 rng(derive_seed(seed, {0x770d5}));
  std::uniform_int_distribution<int> symbol(first, last);
  std::set<std::vector<int>> seen;
  std::vector<std::vector<int>> words;
  while (words.size() < cfg.vocabulary) {
    std::vector<int> w(cfg.word_length);
    for (int& s : w) s = symbol(rng);
    if (seen.insert(w).second) words.push_back(std::move(w));
  }
  return words;
}

WordClip gen_word_clip(const GenConfig& cfg, std::span<const int> word, std::size_t label, std::uint64_t seed,
                       std::string id) {
  Track t = render_track(cfg, word, seed);
  return WordClip{std::move(id), std::move(t.video), label};
}

bool in_test_split(std::string_view id) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h % 10 == 0;
}

std::vector<const Track*> Corpus::tracks_in(std::string_view split) const {
  std::vector<const Track*> out;
  for (const auto& t : tracks) {
    if ((split == "test") == in_test_split(t.id)) out.push_back(&t);
  }
  return out;
}

std::vector<const WordClip*> Corpus::words_in(std::string_view split) const {
  std::vector<const WordClip*> out;
  for (const auto& w : words) {
    if ((split == "test") == in_test_split(w.id)) out.push_back(&w);
  }
  return out;
}

Corpus gen_corpus(const GenConfig& cfg, std::size_t n_tracks, std::uint64_t seed, std::size_t n_word_clips) {
  cfg.validate();
  if (n_tracks == 0 && n_word_clips == 0) throw ConfigError("gen_corpus: nothing to generate");
  Corpus c;
  c.config = cfg;
  c.seed = seed;
  c.tracks.reserve(n_tracks);
  for (std::size_t i = 0; i < n_tracks; ++i) {
    Track t = gen_track(cfg, derive_seed(seed, {1, i}), make_id("track", i));
    c.manifest.push_back(ManifestEntry{t.id, "track", in_test_split(t.id) ? "test" : "train", t.seed,
                                       t.duration(), t.latent, 0});
    c.tracks.push_back(std::move(t));
  }
  if (n_word_clips > 0) {
    const auto words = word_definitions(cfg, seed);
    for (std::size_t i = 0; i < n_word_clips; ++i) {
      std::mt19937_64 rng(derive_seed(seed, {2, i}));
      const auto label = std::uniform_int_distribution<std::size_t>(0, words.size() - 1)(rng);
      const std::uint64_t clip_seed = derive_seed(seed, {3, i});
      WordClip w = gen_word_clip(cfg, words[label], label, clip_seed, make_id("word", i));
      c.manifest.push_back(ManifestEntry{w.id, "word", in_test_split(w.id) ? "test" : "train", clip_seed,
                                         w.video.frames / static_cast<double>(kVideoFps), words[label], label});
      c.words.push_back(std::move(w));
    }
  }
  return c;
}

}  // namespace syncmatch::synth
