#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "syncmatch/dsp.hpp"

namespace syncmatch::dsp {

namespace {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t ms_to_samples(double ms, int sample_rate) {
  return static_cast<std::size_t>(std::lround(ms * sample_rate / 1000.0));
}

}  // namespace

double hz_to_mel(double hz) noexcept { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) noexcept { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Matrix frame_signal(const Waveform& w, double frame_len_ms, double hop_ms, double preemphasis) {
  if (w.samples.empty()) throw std::invalid_argument("frame_signal: empty waveform");
  if (w.sample_rate <= 0) throw std::invalid_argument("frame_signal: sample rate must be positive");
  const std::size_t len = ms_to_samples(frame_len_ms, w.sample_rate);
  const std::size_t hop = ms_to_samples(hop_ms, w.sample_rate);
  if (len == 0 || hop == 0) throw std::invalid_argument("frame_signal: frame and hop must span samples");
  const auto n = w.samples.size();
  const std::size_t frames =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(n) / hop)));

  std::vector<double> window(len);
  for (std::size_t i = 0; i < len; ++i) {
    window[i] = len == 1 ? 1.0
                         : 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / static_cast<double>(len - 1));
  }

  Matrix out(frames, len);
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t start = t * hop;
    double prev = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      const std::size_t idx = start + i;
      const double x = idx < n ? w.samples[idx] : 0.0;
      const double emphasized = i == 0 ? x : x - preemphasis * prev;
      prev = x;
      out(t, i) = emphasized * window[i];
    }
  }
  return out;
}

Matrix mel_filterbank(std::size_t n_filters, std::size_t n_fft, int sample_rate) {
  if (!is_power_of_two(n_fft)) {
    throw std::invalid_argument("mel_filterbank: n_fft " + std::to_string(n_fft) + " is not a power of two");
  }
  if (n_filters < 13) throw std::invalid_argument("mel_filterbank: need at least 13 filters");
  if (sample_rate <= 0) throw std::invalid_argument("mel_filterbank: sample rate must be positive");

  const double nyquist = sample_rate / 2.0;
  const double top = hz_to_mel(nyquist);
  std::vector<double> edges(n_filters + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(top * static_cast<double>(i) / static_cast<double>(n_filters + 1));
  }
  const std::size_t bins = n_fft / 2 + 1;
  Matrix fb(n_filters, bins);
  for (std::size_t m = 0; m < n_filters; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(n_fft);
      const double rise = (f - lo) / (mid - lo);
      const double fall = (hi - f) / (hi - mid);
      fb(m, k) = std::max(0.0, std::min(rise, fall));
    }
  }
  return fb;
}

void fft(std::vector<std::complex<double>>& x) {
  const std::size_t n = x.size();
  if (!is_power_of_two(n)) throw std::invalid_argument("fft: size " + std::to_string(n) + " is not a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    for (std::size_t k = 0; k < len / 2; ++k) {
      const std::complex<double> wk = std::polar(1.0, ang * static_cast<double>(k));
      for (std::size_t i = 0; i < n; i += len) {
        const auto u = x[i + k];
        const auto v = x[i + k + len / 2] * wk;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
      }
    }
  }
}

std::vector<double> power_spectrum(std::span<const double> frame, std::size_t n_fft) {
  if (frame.size() > n_fft) {
    throw std::invalid_argument("power_spectrum: frame of " + std::to_string(frame.size()) +
                                " samples exceeds n_fft " + std::to_string(n_fft));
  }
  std::vector<std::complex<double>> buf(n_fft);
  std::copy(frame.begin(), frame.end(), buf.begin());
  fft(buf);
  std::vector<double> p(n_fft / 2 + 1);
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = std::norm(buf[k]);
  return p;
}

Matrix dct2_matrix(std::size_t n_out, std::size_t n_in) {
  Matrix d(n_out, n_in);
  for (std::size_t k = 0; k < n_out; ++k) {
    const double s = std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(n_in));
    for (std::size_t n = 0; n < n_in; ++n) {
      d(k, n) = s * std::cos(std::numbers::pi * static_cast<double>(k) * (2.0 * n + 1.0) /
                             (2.0 * static_cast<double>(n_in)));
    }
  }
  return d;
}

MfccExtractor::MfccExtractor(int sample_rate, MfccOptions options)
    : sample_rate_(sample_rate),
      options_(options),
      filterbank_(mel_filterbank(options.n_filters, options.n_fft, sample_rate)),
      dct_(dct2_matrix(options.n_coeffs, options.n_filters)) {
  if (options.n_coeffs > options.n_filters) {
    throw std::invalid_argument("MfccExtractor: more coefficients than mel filters");
  }
}

MfccWindow MfccExtractor::operator()(std::span<const double> samples) const {
  Waveform w{std::vector<double>(samples.begin(), samples.end()), sample_rate_};
  return (*this)(w);
}

MfccWindow MfccExtractor::operator()(const Waveform& w) const {
  if (w.sample_rate != sample_rate_) {
    throw std::invalid_argument("MfccExtractor: waveform at " + std::to_string(w.sample_rate) +
                                " Hz, extractor built for " + std::to_string(sample_rate_) + " Hz");
  }
  const std::size_t frame_len = ms_to_samples(options_.frame_len_ms, sample_rate_);
  if (w.samples.size() < frame_len) {
    throw std::invalid_argument("compute_mfcc: waveform of " + std::to_string(w.samples.size()) +
                                " samples is shorter than one frame (" + std::to_string(frame_len) + ")");
  }
  const Matrix frames = frame_signal(w, options_.frame_len_ms, options_.hop_ms, options_.preemphasis);
  MfccWindow out{Matrix(options_.n_coeffs, frames.rows)};
  std::vector<double> logmel(options_.n_filters);
  for (std::size_t t = 0; t < frames.rows; ++t) {
    const auto power = power_spectrum(frames.row(t), options_.n_fft);
    for (std::size_t m = 0; m < options_.n_filters; ++m) {
      double e = 0.0;
      for (std::size_t k = 0; k < power.size(); ++k) e += filterbank_(m, k) * power[k];
      logmel[m] = std::log(e + options_.log_floor);
    }
    for (std::size_t c = 0; c < options_.n_coeffs; ++c) {
      double s = 0.0;
      for (std::size_t m = 0; m < options_.n_filters; ++m) s += dct_(c, m) * logmel[m];
      out.coeffs(c, t) = s;
    }
  }
  return out;
}

MfccWindow compute_mfcc(const Waveform& w, const MfccOptions& options) {
  return MfccExtractor(w.sample_rate, options)(w);
}

}  // namespace syncmatch::dsp
