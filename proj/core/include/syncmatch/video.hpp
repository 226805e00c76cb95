#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace syncmatch {

inline constexpr int kVideoFps = 25;
inline constexpr std::size_t kFramesPerStack = 5;  // 0.2 s at 25 fps

/// Frame sequence stored as 8-bit pixels, layout [T, C, H, W].
struct VideoClip {
  std::size_t frames = 0;
  std::size_t channels = 3;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;

  std::size_t frame_size() const noexcept { return channels * height * width; }
  std::uint8_t at(std::size_t t, std::size_t c, std::size_t y, std::size_t x) const noexcept {
    return pixels[((t * channels + c) * height + y) * width + x];
  }
};

/// Five consecutive frames stacked along channels: [5 * C, H, W], with
/// channel index = frame * C + colour. Values in [0, 1].
struct FrameStack {
  std::size_t channels_per_frame = 3;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;

  std::size_t stacked_channels() const noexcept { return channels_per_frame * kFramesPerStack; }
};

/// Stacks frames [start, start + 5) of a clip.
FrameStack stack_frames(const VideoClip& clip, std::size_t start);

}  // namespace syncmatch
