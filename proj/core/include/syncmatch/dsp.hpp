#pragma once

// MFCC front-end for the audio stream: 13 cepstral coefficients every 10 ms
// over 25 ms frames, so a 0.2 s clip becomes a 13x20 "image".

#include <complex>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace syncmatch::dsp {

struct Waveform {
  std::vector<double> samples;  // mono, nominally in [-1, 1]
  int sample_rate = 16000;

  double duration() const noexcept {
    return static_cast<double>(samples.size()) / static_cast<double>(sample_rate);
  }
};

/// Dense row-major matrix used for frames, filterbanks and coefficient maps.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) noexcept { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const noexcept { return {data.data() + r * cols, cols}; }
};

struct MfccOptions {
  double frame_len_ms = 25.0;
  double hop_ms = 10.0;
  std::size_t n_filters = 40;
  std::size_t n_fft = 512;
  std::size_t n_coeffs = 13;
  double preemphasis = 0.97;
  double log_floor = 1e-10;
};

/// 13 x T cepstral map (coefficient index x time frame).
struct MfccWindow {
  Matrix coeffs;

  std::size_t frames() const noexcept { return coeffs.cols; }
};

double hz_to_mel(double hz) noexcept;
double mel_to_hz(double mel) noexcept;

/// Splits into T = round(duration / hop) frames of frame_len samples, zero
/// padding the tail; each frame is pre-emphasized then Hamming windowed.
Matrix frame_signal(const Waveform& w, double frame_len_ms, double hop_ms,
                    double preemphasis = 0.97);

/// Triangular filters equally spaced in mel between 0 Hz and Nyquist, evaluated
/// on the n_fft/2+1 FFT bin frequencies.
Matrix mel_filterbank(std::size_t n_filters, std::size_t n_fft, int sample_rate);

/// In-place iterative radix-2 FFT; size must be a power of two.
void fft(std::vector<std::complex<double>>& x);

/// |FFT|^2 of a zero-padded frame, bins 0..n_fft/2.
std::vector<double> power_spectrum(std::span<const double> frame, std::size_t n_fft);

/// Orthonormal DCT-II basis, n_out x n_in.
Matrix dct2_matrix(std::size_t n_out, std::size_t n_in);

/// Holds the filterbank and DCT tables for repeated extraction at one rate.
class MfccExtractor {
 public:
  explicit MfccExtractor(int sample_rate = 16000, MfccOptions options = {});

  MfccWindow operator()(const Waveform& w) const;
  MfccWindow operator()(std::span<const double> samples) const;

  const MfccOptions& options() const noexcept { return options_; }
  int sample_rate() const noexcept { return sample_rate_; }

 private:
  int sample_rate_;
  MfccOptions options_;
  Matrix filterbank_;
  Matrix dct_;
};

MfccWindow compute_mfcc(const Waveform& w, const MfccOptions& options = {});

void write_wav(const std::filesystem::path& path, const Waveform& w);
Waveform read_wav(const std::filesystem::path& path);

/// Rounds to the 16-bit PCM grid (s / 32767) so that WAV round trips are exact.
double quantize_pcm16(double x) noexcept;

}  // namespace syncmatch::dsp
