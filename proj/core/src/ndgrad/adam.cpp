#include "syncmatch/adam.hpp"

#include <cmath>

namespace syncmatch::ndgrad {

AdamState::AdamState(std::span<Parameter* const> params, AdamOptions options)
    : options_(options) {
  for (const Parameter* p : params) {
    shapes_.push_back(p->shape());
    first_.emplace_back(p->size(), 0.0);
    second_.emplace_back(p->size(), 0.0);
  }
}

void adam_step(std::span<Parameter* const> params, AdamState& state) {
  if (params.size() != state.shapes_.size()) {
    throw GraphError("adam_step: optimizer state tracks " + std::to_string(state.shapes_.size()) +
                     " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k]->shape() != state.shapes_[k]) {
      throw ShapeError("adam_step: parameter '" + params[k]->name() + "' shape " +
                       to_string(params[k]->shape()) + " differs from optimizer state " +
                       to_string(state.shapes_[k]));
    }
    if (!params[k]->grad_populated()) {
      throw GraphError("adam_step: parameter '" + params[k]->name() + "' has no gradient");
    }
  }

  const auto& o = state.options_;
  ++state.step_;
  const double t = static_cast<double>(state.step_);
  const double c1 = 1.0 - std::pow(o.beta1, t);
  const double c2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto values = params[k]->values();
    auto grad = params[k]->grad();
    auto& m = state.first_[k];
    auto& v = state.second_[k];
    for (std::size_t i = 0; i < values.size(); ++i) {
      m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * grad[i];
      v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * grad[i] * grad[i];
      values[i] -= o.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + o.epsilon);
    }
    params[k]->zero_grad();
  }
}

}  // namespace syncmatch::ndgrad
