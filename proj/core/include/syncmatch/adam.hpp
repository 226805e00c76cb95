#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "syncmatch/ndgrad.hpp"

namespace syncmatch::ndgrad {

struct AdamOptions {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment buffers for a fixed list of parameters.
class AdamState {
 public:
  AdamState(std::span<Parameter* const> params, AdamOptions options = {});

  const AdamOptions& options() const noexcept { return options_; }
  void set_learning_rate(double lr) noexcept { options_.learning_rate = lr; }
  std::uint64_t step_count() const noexcept { return step_; }

 private:
  friend void adam_step(std::span<Parameter* const> params, AdamState& state);

  AdamOptions options_;
  std::vector<Shape> shapes_;
  std::vector<std::vector<double>> first_;
  std::vector<std::vector<double>> second_;
  std::uint64_t step_ = 0;
};

/// Bias-corrected Adam update. Consumes the gradients: every parameter's grad
/// is zeroed afterwards. Throws if any parameter has no populated gradient.
void adam_step(std::span<Parameter* const> params, AdamState& state);

}  // namespace syncmatch::ndgrad
