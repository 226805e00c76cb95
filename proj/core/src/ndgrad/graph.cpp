#include "syncmatch/ndgrad.hpp"

#include <algorithm>
#include <sstream>

namespace syncmatch::ndgrad {

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

void check_shape(const Shape& shape) {
  if (shape.empty()) throw ShapeError("shape must have at least one dimension");
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("shape " + to_string(shape) + " has a zero dimension");
  }
}

}  // namespace

Parameter::Parameter(std::string name, Shape shape)
    : name_(std::move(name)), shape_(std::move(shape)) {
  check_shape(shape_);
  values_.assign(element_count(shape_), 0.0);
  grad_.assign(values_.size(), 0.0);
}

void Parameter::accumulate_grad(std::span<const double> g, double scale) {
  if (g.size() != grad_.size()) {
    throw ShapeError("gradient size mismatch for parameter '" + name_ + "'");
  }
  for (std::size_t i = 0; i < g.size(); ++i) grad_[i] += scale * g[i];
  grad_populated_ = true;
}

void Parameter::zero_grad() noexcept {
  std::fill(grad_.begin(), grad_.end(), 0.0);
  grad_populated_ = false;
}

GradientBuffer::GradientBuffer(std::span<Parameter* const> params)
    : params_(params.begin(), params.end()) {
  grads_.reserve(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    grads_.emplace_back(params_[i]->size(), 0.0);
    index_.emplace(params_[i], i);
  }
}

void GradientBuffer::add(const Parameter* p, std::span<const double> g) {
  auto it = index_.find(p);
  if (it == index_.end()) return;
  auto& dst = grads_[it->second];
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[i];
}

void GradientBuffer::merge(const GradientBuffer& other, double scale) {
  if (other.params_ != params_) throw GraphError("merging gradient buffers over different parameters");
  for (std::size_t k = 0; k < grads_.size(); ++k) {
    for (std::size_t i = 0; i < grads_[k].size(); ++i) grads_[k][i] += scale * other.grads_[k][i];
  }
}

void GradientBuffer::apply(double scale) const {
  for (std::size_t k = 0; k < params_.size(); ++k) params_[k]->accumulate_grad(grads_[k], scale);
}

void GradientBuffer::clear() noexcept {
  for (auto& g : grads_) std::fill(g.begin(), g.end(), 0.0);
}

std::span<const double> GradientBuffer::grad_of(const Parameter* p) const {
  auto it = index_.find(p);
  if (it == index_.end()) throw GraphError("parameter not tracked by this gradient buffer");
  return grads_[it->second];
}

Var Graph::push(Shape shape, std::vector<double> values, bool requires_grad) {
  check_shape(shape);
  if (element_count(shape) != values.size()) {
    throw ShapeError("buffer of " + std::to_string(values.size()) + " values does not match shape " +
                     to_string(shape));
  }
  DiffArray arr;
  arr.shape = std::move(shape);
  arr.values = std::move(values);
  if (requires_grad) arr.grad.assign(arr.values.size(), 0.0);
  arr.node_id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back(std::move(arr));
  return Var{nodes_.back().node_id};
}

const DiffArray& Graph::array(Var v) const {
  if (v.id >= nodes_.size()) throw GraphError("variable does not belong to this graph");
  return nodes_[v.id];
}

DiffArray& Graph::node(Var v) {
  if (v.id >= nodes_.size()) throw GraphError("variable does not belong to this graph");
  return nodes_[v.id];
}

double Graph::item(Var v) const {
  const auto& a = array(v);
  if (a.size() != 1) throw ShapeError("item() on non-scalar of shape " + to_string(a.shape));
  return a.values[0];
}

Var Graph::input(Shape shape, std::vector<double> values) {
  return push(std::move(shape), std::move(values), false);
}

Var Graph::param(Parameter& p) {
  auto values = p.values();
  Var v = push(p.shape(), std::vector<double>(values.begin(), values.end()), true);
  bindings_.emplace_back(v, &p);
  return v;
}

Var Graph::frozen(const Parameter& p) {
  auto values = p.values();
  return push(p.shape(), std::vector<double>(values.begin(), values.end()), false);
}

void Graph::run_backward(Var loss) {
  if (backward_done_) throw GraphError("backward already ran on this graph; build a new forward pass");
  const auto& l = array(loss);
  if (l.size() != 1) throw ShapeError("backward needs a scalar loss, got shape " + to_string(l.shape));
  backward_done_ = true;
  if (!l.has_grad()) return;
  node(loss).grad[0] = 1.0;
  for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) (*it)(*this);
}

void Graph::backward(Var loss) {
  run_backward(loss);
  for (auto& [v, p] : bindings_) p->accumulate_grad(nodes_[v.id].grad);
}

void Graph::backward(Var loss, GradientBuffer& sink) {
  run_backward(loss);
  for (auto& [v, p] : bindings_) sink.add(p, nodes_[v.id].grad);
}

}  // namespace syncmatch::ndgrad
