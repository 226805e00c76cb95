#include <algorithm>
#include <cmath>
#include <limits>

#include "syncmatch/ndgrad.hpp"

namespace syncmatch::ndgrad {

namespace {

void expect_rank(const DiffArray& a, std::size_t rank, const char* op, const char* what) {
  if (a.shape.size() != rank) {
    throw ShapeError(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) +
                     ", got " + to_string(a.shape));
  }
}

// Output extent range [lo, hi) whose input coordinate o*stride + k - pad lies in [0, n).
struct Span1d {
  std::size_t lo;
  std::size_t hi;
};

Span1d valid_outputs(std::size_t n, std::size_t out, std::size_t stride, std::size_t k,
                     std::size_t pad) {
  // need o*stride + k >= pad and o*stride + k - pad <= n - 1
  std::size_t lo = 0;
  if (k < pad) lo = (pad - k + stride - 1) / stride;
  std::size_t hi = 0;
  if (n - 1 + pad >= k) hi = std::min(out, (n - 1 + pad - k) / stride + 1);
  if (hi < lo) hi = lo;
  return {lo, hi};
}

}  // namespace

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double m = *std::max_element(p.begin(), p.end());
  double z = 0.0;
  for (double& x : p) {
    x = std::exp(x - m);
    z += x;
  }
  for (double& x : p) x /= z;
  return p;
}

Var Graph::conv2d(Var input, Var kernel, Var bias, const Conv2dOptions& o) {
  const auto& in = array(input);
  const auto& k = array(kernel);
  const auto& b = array(bias);
  expect_rank(in, 3, "conv2d", "input");
  expect_rank(k, 4, "conv2d", "kernel");
  expect_rank(b, 1, "conv2d", "bias");
  if (o.stride_h == 0 || o.stride_w == 0) throw ShapeError("conv2d: stride must be positive");
  const std::size_t cin = in.shape[0], h = in.shape[1], w = in.shape[2];
  const std::size_t cout = k.shape[0], kh = k.shape[2], kw = k.shape[3];
  if (k.shape[1] != cin) {
    throw ShapeError("conv2d: input " + to_string(in.shape) + " has " + std::to_string(cin) +
                     " channels but kernel " + to_string(k.shape) + " expects " +
                     std::to_string(k.shape[1]));
  }
  if (b.shape[0] != cout) {
    throw ShapeError("conv2d: bias " + to_string(b.shape) + " does not match " +
                     std::to_string(cout) + " output channels");
  }
  if (h + 2 * o.pad_h < kh || w + 2 * o.pad_w < kw) {
    throw ShapeError("conv2d: kernel " + to_string(k.shape) + " larger than padded input " +
                     to_string(in.shape));
  }
  const std::size_t oh = (h + 2 * o.pad_h - kh) / o.stride_h + 1;
  const std::size_t ow = (w + 2 * o.pad_w - kw) / o.stride_w + 1;

  std::vector<double> out(cout * oh * ow);
  const double* x = in.values.data();
  const double* kv = k.values.data();
  for (std::size_t co = 0; co < cout; ++co) {
    double* dst = out.data() + co * oh * ow;
    std::fill(dst, dst + oh * ow, b.values[co]);
    for (std::size_t ci = 0; ci < cin; ++ci) {
      const double* src = x + ci * h * w;
      for (std::size_t i = 0; i < kh; ++i) {
        const Span1d ry = valid_outputs(h, oh, o.stride_h, i, o.pad_h);
        for (std::size_t j = 0; j < kw; ++j) {
          const double wv = kv[((co * cin + ci) * kh + i) * kw + j];
          const Span1d rx = valid_outputs(w, ow, o.stride_w, j, o.pad_w);
          for (std::size_t oy = ry.lo; oy < ry.hi; ++oy) {
            const double* row = src + (oy * o.stride_h + i - o.pad_h) * w;
            double* orow = dst + oy * ow;
            for (std::size_t ox = rx.lo; ox < rx.hi; ++ox) {
              orow[ox] += wv * row[ox * o.stride_w + j - o.pad_w];
            }
          }
        }
      }
    }
  }

  const bool rg = in.has_grad() || k.has_grad() || b.has_grad();
  Var y = push({cout, oh, ow}, std::move(out), rg);
  if (rg) {
    record([=](Graph& g) {
      const auto& dy = g.nodes_[y.id].grad;
      auto& xin = g.nodes_[input.id];
      auto& ker = g.nodes_[kernel.id];
      auto& bs = g.nodes_[bias.id];
      if (bs.has_grad()) {
        for (std::size_t co = 0; co < cout; ++co) {
          double s = 0.0;
          for (std::size_t p = 0; p < oh * ow; ++p) s += dy[co * oh * ow + p];
          bs.grad[co] += s;
        }
      }
      const bool gk = ker.has_grad(), gx = xin.has_grad();
      if (!gk && !gx) return;
      for (std::size_t co = 0; co < cout; ++co) {
        const double* dyc = dy.data() + co * oh * ow;
        for (std::size_t ci = 0; ci < cin; ++ci) {
          const double* src = xin.values.data() + ci * h * w;
          double* dsrc = gx ? xin.grad.data() + ci * h * w : nullptr;
          for (std::size_t i = 0; i < kh; ++i) {
            const Span1d ry = valid_outputs(h, oh, o.stride_h, i, o.pad_h);
            for (std::size_t j = 0; j < kw; ++j) {
              const std::size_t kidx = ((co * cin + ci) * kh + i) * kw + j;
              const double wv = ker.values[kidx];
              const Span1d rx = valid_outputs(w, ow, o.stride_w, j, o.pad_w);
              double acc = 0.0;
              for (std::size_t oy = ry.lo; oy < ry.hi; ++oy) {
                const std::size_t row_off = (oy * o.stride_h + i - o.pad_h) * w;
                const double* drow = dyc + oy * ow;
                if (gk) {
                  const double* row = src + row_off;
                  for (std::size_t ox = rx.lo; ox < rx.hi; ++ox) {
                    acc += drow[ox] * row[ox * o.stride_w + j - o.pad_w];
                  }
                }
                if (gx) {
                  double* grow = dsrc + row_off;
                  for (std::size_t ox = rx.lo; ox < rx.hi; ++ox) {
                    grow[ox * o.stride_w + j - o.pad_w] += wv * drow[ox];
                  }
                }
              }
              if (gk) ker.grad[kidx] += acc;
            }
          }
        }
      }
    });
  }
  return y;
}

Var Graph::max_pool2d(Var input, const Pool2dOptions& o) {
  const auto& in = array(input);
  expect_rank(in, 3, "max_pool2d", "input");
  if (o.window_h == 0 || o.window_w == 0 || o.stride_h == 0 || o.stride_w == 0) {
    throw ShapeError("max_pool2d: window and stride must be positive");
  }
  const std::size_t c = in.shape[0], h = in.shape[1], w = in.shape[2];
  if (h < o.window_h || w < o.window_w) {
    throw ShapeError("max_pool2d: window " + std::to_string(o.window_h) + "x" +
                     std::to_string(o.window_w) + " larger than input " + to_string(in.shape));
  }
  const std::size_t oh = (h - o.window_h) / o.stride_h + 1;
  const std::size_t ow = (w - o.window_w) / o.stride_w + 1;
  std::vector<double> out(c * oh * ow);
  std::vector<std::size_t> argmax(out.size());
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        std::size_t best = ch * h * w + (oy * o.stride_h) * w + ox * o.stride_w;
        for (std::size_t i = 0; i < o.window_h; ++i) {
          for (std::size_t j = 0; j < o.window_w; ++j) {
            const std::size_t idx = ch * h * w + (oy * o.stride_h + i) * w + ox * o.stride_w + j;
            if (in.values[idx] > in.values[best]) best = idx;  // strict: first occurrence wins ties
          }
        }
        const std::size_t oidx = (ch * oh + oy) * ow + ox;
        out[oidx] = in.values[best];
        argmax[oidx] = best;
      }
    }
  }
  const bool rg = in.has_grad();
  Var y = push({c, oh, ow}, std::move(out), rg);
  if (rg) {
    record([=, argmax = std::move(argmax)](Graph& g) {
      const auto& dy = g.nodes_[y.id].grad;
      auto& dx = g.nodes_[input.id].grad;
      for (std::size_t i = 0; i < dy.size(); ++i) dx[argmax[i]] += dy[i];
    });
  }
  return y;
}

Var Graph::dense(Var input, Var weight, Var bias) {
  const auto& x = array(input);
  const auto& wt = array(weight);
  const auto& b = array(bias);
  expect_rank(x, 1, "dense", "input");
  expect_rank(wt, 2, "dense", "weight");
  expect_rank(b, 1, "dense", "bias");
  const std::size_t dout = wt.shape[0], din = wt.shape[1];
  if (x.shape[0] != din) {
    throw ShapeError("dense: input " + to_string(x.shape) + " does not match weight " +
                     to_string(wt.shape));
  }
  if (b.shape[0] != dout) {
    throw ShapeError("dense: bias " + to_string(b.shape) + " does not match weight " +
                     to_string(wt.shape));
  }
  std::vector<double> out(dout);
  for (std::size_t r = 0; r < dout; ++r) {
    double s = b.values[r];
    const double* row = wt.values.data() + r * din;
    for (std::size_t c = 0; c < din; ++c) s += row[c] * x.values[c];
    out[r] = s;
  }
  const bool rg = x.has_grad() || wt.has_grad() || b.has_grad();
  Var y = push({dout}, std::move(out), rg);
  if (rg) {
    record([=](Graph& g) {
      const auto& dy = g.nodes_[y.id].grad;
      auto& xn = g.nodes_[input.id];
      auto& wn = g.nodes_[weight.id];
      auto& bn = g.nodes_[bias.id];
      for (std::size_t r = 0; r < dout; ++r) {
        if (bn.has_grad()) bn.grad[r] += dy[r];
        if (wn.has_grad()) {
          double* grow = wn.grad.data() + r * din;
          for (std::size_t c = 0; c < din; ++c) grow[c] += dy[r] * xn.values[c];
        }
        if (xn.has_grad()) {
          const double* row = wn.values.data() + r * din;
          for (std::size_t c = 0; c < din; ++c) xn.grad[c] += dy[r] * row[c];
        }
      }
    });
  }
  return y;
}

Var Graph::relu(Var xv) {
  const auto& x = array(xv);
  std::vector<double> out(x.values);
  for (double& v : out) v = v > 0.0 ? v : 0.0;
  const bool rg = x.has_grad();
  Var y = push(x.shape, std::move(out), rg);
  if (rg) {
    record([=](Graph& g) {
      const auto& dy = g.nodes_[y.id].grad;
      auto& xn = g.nodes_[xv.id];
      for (std::size_t i = 0; i < dy.size(); ++i) {
        if (xn.values[i] > 0.0) xn.grad[i] += dy[i];
      }
    });
  }
  return y;
}

Var Graph::l2_normalize(Var xv) {
  const auto& x = array(xv);
  expect_rank(x, 1, "l2_normalize", "input");
  double ss = 0.0;
  for (double v : x.values) ss += v * v;
  const double norm = std::sqrt(ss);
  const bool floored = !(norm > kNormalizeEpsilon);
  const double denom = floored ? kNormalizeEpsilon : norm;
  std::vector<double> out(x.values);
  for (double& v : out) v /= denom;
  const bool rg = x.has_grad();
  Var y = push(x.shape, std::move(out), rg);
  if (rg && !floored) {
    record([=](Graph& g) {
      const auto& dy = g.nodes_[y.id].grad;
      const auto& yv = g.nodes_[y.id].values;
      auto& dx = g.nodes_[xv.id].grad;
      double dot = 0.0;
      for (std::size_t i = 0; i < dy.size(); ++i) dot += dy[i] * yv[i];
      for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += (dy[i] - dot * yv[i]) / norm;
    });
  }
  return y;
}

Var Graph::pairwise_euclidean(Var video, Var audio_set) {
  const auto& v = array(video);
  const auto& a = array(audio_set);
  expect_rank(v, 1, "pairwise_euclidean", "video");
  expect_rank(a, 2, "pairwise_euclidean", "audio_set");
  const std::size_t n = a.shape[0], d = a.shape[1];
  if (v.shape[0] != d) {
    throw ShapeError("pairwise_euclidean: video " + to_string(v.shape) + " vs audio_set " +
                     to_string(a.shape));
  }
  constexpr double floor_sq = kDistanceEpsilon * kDistanceEpsilon;
  std::vector<double> out(n);
  std::vector<bool> live(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double diff = v.values[k] - a.values[i * d + k];
      s += diff * diff;
    }
    live[i] = s > floor_sq;
    out[i] = std::sqrt(std::max(s, floor_sq));
  }
  const bool rg = v.has_grad() || a.has_grad();
  Var y = push({n}, std::move(out), rg);
  if (rg) {
    record([=, live = std::move(live)](Graph& g) {
      const auto& yn = g.nodes_[y.id];
      auto& vn = g.nodes_[video.id];
      auto& an = g.nodes_[audio_set.id];
      for (std::size_t i = 0; i < n; ++i) {
        if (!live[i]) continue;
        const double coef = yn.grad[i] / yn.values[i];
        for (std::size_t k = 0; k < d; ++k) {
          const double diff = vn.values[k] - an.values[i * d + k];
          if (vn.has_grad()) vn.grad[k] += coef * diff;
          if (an.has_grad()) an.grad[i * d + k] -= coef * diff;
        }
      }
    });
  }
  return y;
}

Var Graph::softmax_cross_entropy(Var logits, std::size_t target) {
  const auto& l = array(logits);
  expect_rank(l, 1, "softmax_cross_entropy", "logits");
  const std::size_t n = l.shape[0];
  if (target >= n) {
    throw std::out_of_range("softmax_cross_entropy: target " + std::to_string(target) +
                            " outside [0, " + std::to_string(n) + ")");
  }
  const double m = *std::max_element(l.values.begin(), l.values.end());
  double z = 0.0;
  for (double v : l.values) z += std::exp(v - m);
  const double loss = m + std::log(z) - l.values[target];
  const bool rg = l.has_grad();
  Var y = push({1}, {loss}, rg);
  if (rg) {
    record([=](Graph& g) {
      const double dy = g.nodes_[y.id].grad[0];
      auto& ln = g.nodes_[logits.id];
      const auto p = softmax(ln.values);
      for (std::size_t i = 0; i < n; ++i) ln.grad[i] += dy * (p[i] - (i == target ? 1.0 : 0.0));
    });
  }
  return y;
}

Var Graph::reshape(Var xv, Shape shape) {
  const auto& x = array(xv);
  if (element_count(shape) != x.size()) {
    throw ShapeError("reshape: cannot view " + to_string(x.shape) + " as " + to_string(shape));
  }
  const bool rg = x.has_grad();
  Var y = push(std::move(shape), x.values, rg);
  if (rg) {
    record([=](Graph& g) {
      const auto& dy = g.nodes_[y.id].grad;
      auto& dx = g.nodes_[xv.id].grad;
      for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
    });
  }
  return y;
}

Var Graph::stack(std::span<const Var> rows) {
  if (rows.empty()) throw ShapeError("stack: no rows");
  const Shape row_shape = array(rows[0]).shape;
  const std::size_t d = element_count(row_shape);
  std::vector<double> out;
  out.reserve(rows.size() * d);
  bool rg = false;
  for (Var r : rows) {
    const auto& a = array(r);
    if (a.shape != row_shape) {
      throw ShapeError("stack: row shape " + to_string(a.shape) + " differs from " + to_string(row_shape));
    }
    out.insert(out.end(), a.values.begin(), a.values.end());
    rg = rg || a.has_grad();
  }
  Shape shape{rows.size()};
  shape.insert(shape.end(), row_shape.begin(), row_shape.end());
  Var y = push(std::move(shape), std::move(out), rg);
  if (rg) {
    std::vector<Var> ids(rows.begin(), rows.end());
    record([=, ids = std::move(ids)](Graph& g) {
      const auto& dy = g.nodes_[y.id].grad;
      for (std::size_t r = 0; r < ids.size(); ++r) {
        auto& xn = g.nodes_[ids[r].id];
        if (!xn.has_grad()) continue;
        for (std::size_t k = 0; k < d; ++k) xn.grad[k] += dy[r * d + k];
      }
    });
  }
  return y;
}

Var Graph::transpose(Var xv) {
  const auto& x = array(xv);
  expect_rank(x, 2, "transpose", "input");
  const std::size_t r = x.shape[0], c = x.shape[1];
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = x.values[i * c + j];
  const bool rg = x.has_grad();
  Var y = push({c, r}, std::move(out), rg);
  if (rg) {
    record([=](Graph& g) {
      const auto& dy = g.nodes_[y.id].grad;
      auto& dx = g.nodes_[xv.id].grad;
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) dx[i * c + j] += dy[j * r + i];
    });
  }
  return y;
}

Var Graph::add(Var av, Var bv) {
  const auto& a = array(av);
  const auto& b = array(bv);
  if (a.shape != b.shape) throw ShapeError("add: " + to_string(a.shape) + " vs " + to_string(b.shape));
  std::vector<double> out(a.values);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.values[i];
  const bool rg = a.has_grad() || b.has_grad();
  Var y = push(a.shape, std::move(out), rg);
  if (rg) {
    record([=](Graph& g) {
      const auto& dy = g.nodes_[y.id].grad;
      for (Var v : {av, bv}) {
        auto& n = g.nodes_[v.id];
        if (!n.has_grad()) continue;
        for (std::size_t i = 0; i < dy.size(); ++i) n.grad[i] += dy[i];
      }
    });
  }
  return y;
}

Var Graph::sub(Var av, Var bv) {
  const auto& a = array(av);
  const auto& b = array(bv);
  if (a.shape != b.shape) throw ShapeError("sub: " + to_string(a.shape) + " vs " + to_string(b.shape));
  std::vector<double> out(a.values);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.values[i];
  const bool rg = a.has_grad() || b.has_grad();
  Var y = push(a.shape, std::move(out), rg);
  if (rg) {
    record([=](Graph& g) {
      const auto& dy = g.nodes_[y.id].grad;
      auto& an = g.nodes_[av.id];
      auto& bn = g.nodes_[bv.id];
      for (std::size_t i = 0; i < dy.size(); ++i) {
        if (an.has_grad()) an.grad[i] += dy[i];
        if (bn.has_grad()) bn.grad[i] -= dy[i];
      }
    });
  }
  return y;
}

Var Graph::scale(Var xv, double c) {
  const auto& x = array(xv);
  std::vector<double> out(x.values);
  for (double& v : out) v *= c;
  const bool rg = x.has_grad();
  Var y = push(x.shape, std::move(out), rg);
  if (rg) {
    record([=](Graph& g) {
      const auto& dy = g.nodes_[y.id].grad;
      auto& dx = g.nodes_[xv.id].grad;
      for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += c * dy[i];
    });
  }
  return y;
}

Var Graph::add_scalar(Var xv, double c) {
  const auto& x = array(xv);
  std::vector<double> out(x.values);
  for (double& v : out) v += c;
  const bool rg = x.has_grad();
  Var y = push(x.shape, std::move(out), rg);
  if (rg) {
    record([=](Graph& g) {
      const auto& dy = g.nodes_[y.id].grad;
      auto& dx = g.nodes_[xv.id].grad;
      for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
    });
  }
  return y;
}

Var Graph::square(Var xv) {
  const auto& x = array(xv);
  std::vector<double> out(x.values);
  for (double& v : out) v *= v;
  const bool rg = x.has_grad();
  Var y = push(x.shape, std::move(out), rg);
  if (rg) {
    record([=](Graph& g) {
      const auto& dy = g.nodes_[y.id].grad;
      auto& xn = g.nodes_[xv.id];
      for (std::size_t i = 0; i < dy.size(); ++i) xn.grad[i] += 2.0 * xn.values[i] * dy[i];
    });
  }
  return y;
}

Var Graph::reciprocal(Var xv) {
  const auto& x = array(xv);
  std::vector<double> out(x.values);
  for (double& v : out) {
    if (v == 0.0) throw std::domain_error("reciprocal of zero");
    v = 1.0 / v;
  }
  const bool rg = x.has_grad();
  Var y = push(x.shape, std::move(out), rg);
  if (rg) {
    record([=](Graph& g) {
      const auto& yn = g.nodes_[y.id];
      auto& dx = g.nodes_[xv.id].grad;
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] -= yn.grad[i] * yn.values[i] * yn.values[i];
    });
  }
  return y;
}

Var Graph::sum(Var xv) {
  const auto& x = array(xv);
  double s = 0.0;
  for (double v : x.values) s += v;
  const bool rg = x.has_grad();
  Var y = push({1}, {s}, rg);
  if (rg) {
    record([=](Graph& g) {
      const double dy = g.nodes_[y.id].grad[0];
      auto& dx = g.nodes_[xv.id].grad;
      for (double& v : dx) v += dy;
    });
  }
  return y;
}

Var Graph::mean_last_axis(Var xv) {
  const auto& x = array(xv);
  if (x.shape.size() < 2) throw ShapeError("mean_last_axis: need rank >= 2, got " + to_string(x.shape));
  const std::size_t t = x.shape.back();
  const std::size_t rows = x.size() / t;
  std::vector<double> out(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t i = 0; i < t; ++i) s += x.values[r * t + i];
    out[r] = s / static_cast<double>(t);
  }
  Shape shape(x.shape.begin(), x.shape.end() - 1);
  const bool rg = x.has_grad();
  Var y = push(std::move(shape), std::move(out), rg);
  if (rg) {
    record([=](Graph& g) {
      const auto& dy = g.nodes_[y.id].grad;
      auto& dx = g.nodes_[xv.id].grad;
      const double inv = 1.0 / static_cast<double>(t);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t i = 0; i < t; ++i) dx[r * t + i] += dy[r] * inv;
    });
  }
  return y;
}

}  // namespace syncmatch::ndgrad
