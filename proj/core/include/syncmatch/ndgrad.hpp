#pragma once

// Minimal reverse-mode differentiable array engine.
//
// A Graph is a single-use tape: operations append nodes in execution order,
// and backward() walks the tape once in reverse. Nodes only carry a gradient
// buffer when they depend on a trainable Parameter, so forward-only work
// (evaluation, frozen front-ends) records no backward closures at all.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace syncmatch::ndgrad {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string to_string(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class GraphError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct DiffArray {
  Shape shape;
  std::vector<double> values;  // row-major
  std::vector<double> grad;    // empty unless the node depends on a parameter
  std::uint32_t node_id = 0;

  bool has_grad() const noexcept { return !grad.empty(); }
  std::size_t size() const noexcept { return values.size(); }
};

/// Trainable tensor that outlives any single Graph.
class Parameter {
 public:
  Parameter(std::string name, Shape shape);

  const std::string& name() const noexcept { return name_; }
  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return values_.size(); }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> grad() noexcept { return grad_; }
  std::span<const double> grad() const noexcept { return grad_; }

  bool grad_populated() const noexcept { return grad_populated_; }
  void accumulate_grad(std::span<const double> g, double scale = 1.0);
  void zero_grad() noexcept;

 private:
  std::string name_;
  Shape shape_;
  std::vector<double> values_;
  std::vector<double> grad_;
  bool grad_populated_ = false;
};

/// Gradient sink keyed by parameter identity; lets independent graphs run on
/// separate workers and be merged in a fixed order afterwards.
class GradientBuffer {
 public:
  GradientBuffer() = default;
  explicit GradientBuffer(std::span<Parameter* const> params);

  void add(const Parameter* p, std::span<const double> g);
  void merge(const GradientBuffer& other, double scale = 1.0);
  /// Adds scale * buffer into each parameter's grad and marks it populated.
  void apply(double scale = 1.0) const;
  void clear() noexcept;

  std::span<const double> grad_of(const Parameter* p) const;

 private:
  std::vector<Parameter*> params_;
  std::vector<std::vector<double>> grads_;
  std::unordered_map<const Parameter*, std::size_t> index_;
};

struct Var {
  std::uint32_t id = UINT32_MAX;
};

struct Conv2dOptions {
  std::size_t stride_h = 1;
  std::size_t stride_w = 1;
  std::size_t pad_h = 0;
  std::size_t pad_w = 0;
};

struct Pool2dOptions {
  std::size_t window_h = 2;
  std::size_t window_w = 2;
  std::size_t stride_h = 2;
  std::size_t stride_w = 2;
};

inline constexpr double kNormalizeEpsilon = 1e-12;
inline constexpr double kDistanceEpsilon = 1e-8;

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  // Leaves.
  Var input(Shape shape, std::vector<double> values);
  Var param(Parameter& p);
  /// Binds a parameter as a constant; it receives no gradient.
  Var frozen(const Parameter& p);

  const DiffArray& array(Var v) const;
  std::span<const double> values(Var v) const { return array(v).values; }
  std::span<const double> grad(Var v) const { return array(v).grad; }
  const Shape& shape(Var v) const { return array(v).shape; }
  double item(Var v) const;
  std::size_t node_count() const noexcept { return nodes_.size(); }

  // Layer operations.
  Var conv2d(Var input, Var kernel, Var bias, const Conv2dOptions& opts = {});
  Var max_pool2d(Var input, const Pool2dOptions& opts = {});
  Var dense(Var input, Var weight, Var bias);
  Var relu(Var x);
  Var l2_normalize(Var x);
  Var pairwise_euclidean(Var video, Var audio_set);
  Var softmax_cross_entropy(Var logits, std::size_t target);

  // Structural and elementwise helpers.
  Var reshape(Var x, Shape shape);
  Var stack(std::span<const Var> rows);
  Var transpose(Var x);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var scale(Var x, double c);
  Var add_scalar(Var x, double c);
  Var square(Var x);
  Var reciprocal(Var x);
  Var sum(Var x);
  Var mean_last_axis(Var x);

  /// Populates gradients of every bound Parameter; may be called once.
  void backward(Var loss);
  /// As backward(loss), but parameter gradients go to `sink`.
  void backward(Var loss, GradientBuffer& sink);

 private:
  using BackwardFn = std::function<void(Graph&)>;

  Var push(Shape shape, std::vector<double> values, bool requires_grad);
  DiffArray& node(Var v);
  bool requires_grad(Var v) const { return array(v).has_grad(); }
  void record(BackwardFn fn) { tape_.push_back(std::move(fn)); }
  void run_backward(Var loss);

  std::vector<DiffArray> nodes_;
  std::vector<BackwardFn> tape_;
  std::vector<std::pair<Var, Parameter*>> bindings_;
  bool backward_done_ = false;
};

/// softmax(logits) in the numerically stable max-shifted form.
std::vector<double> softmax(std::span<const double> logits);

}  // namespace syncmatch::ndgrad
