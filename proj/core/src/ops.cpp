// Copyright 2026 The spikegate Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "spikegate/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "spikegate/error.hpp"

namespace spikegate {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

ConstMap as_matrix(const Tensor& t) {
  return ConstMap(t.data(), static_cast<Eigen::Index>(t.dim(0)),
                  static_cast<Eigen::Index>(t.dim(1)));
}
MutMap as_matrix(Tensor& t) {
  return MutMap(t.data(), static_cast<Eigen::Index>(t.dim(0)),
                static_cast<Eigen::Index>(t.dim(1)));
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_str(t.shape()));
  }
}

bool is_suffix(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  return std::equal(small.rbegin(), small.rend(), big.rbegin());
}

// Which operand broadcasts: 0 = same shape, 1 = b repeats over a, 2 = a over b.
int broadcast_mode(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return 0;
  if (b.size() == 1 || (is_suffix(b.shape(), a.shape()) && b.size() > 0)) return 1;
  if (a.size() == 1 || is_suffix(a.shape(), b.shape())) return 2;
  throw ShapeError(std::string(op) + ": cannot broadcast " + shape_str(a.shape()) + " with " +
                   shape_str(b.shape()));
}

// Sums an output-shaped gradient down to the broadcast operand's size.
void reduce_into(const Tensor& g, Tensor& acc) {
  const std::size_t n = acc.size();
  for (std::size_t i = 0; i < g.size(); ++i) acc[i % n] += g[i];
}

// Records an elementwise op whose derivative is a function of the input.
template <typename F, typename D>
Var elementwise(const char* op, Var a, F f, D dfdx) {
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  Tape* tape = &a.tape();
  const int ain = a.id();
  auto fn = [tape, ain, dfdx](const Tensor& g, std::span<Tensor* const> in) {
    const Tensor& xv = tape->value(ain);
    Tensor& ga = *in[0];
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * dfdx(xv[i]);
  };
  return tape->record(op, std::move(y), {a}, fn);
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

}  // namespace

namespace kernels {

Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = trans_a ? a.dim(1) : a.dim(0);
  const std::size_t ka = trans_a ? a.dim(0) : a.dim(1);
  const std::size_t kb = trans_b ? b.dim(1) : b.dim(0);
  const std::size_t n = trans_b ? b.dim(0) : b.dim(1);
  if (ka != kb) {
    throw ShapeError("matmul: inner extents differ: " + shape_str(a.shape()) +
                     (trans_a ? "^T" : "") + " * " + shape_str(b.shape()) + (trans_b ? "^T" : ""));
  }
  Tensor c(Shape{m, n});
  auto cm = as_matrix(c);
  auto am = as_matrix(a);
  auto bm = as_matrix(b);
  if (!trans_a && !trans_b) {
    cm.noalias() = am * bm;
  } else if (trans_a && !trans_b) {
    cm.noalias() = am.transpose() * bm;
  } else if (!trans_a && trans_b) {
    cm.noalias() = am * bm.transpose();
  } else {
    cm.noalias() = am.transpose() * bm.transpose();
  }
  return c;
}

Tensor conv2d(const Tensor& x, const Tensor& w, std::size_t stride, std::size_t pad) {
  require_rank(x, 4, "conv2d");
  require_rank(w, 4, "conv2d");
  const std::size_t n = x.dim(0), h = x.dim(1), wd = x.dim(2), cin = x.dim(3);
  const std::size_t cout = w.dim(0), k = w.dim(1);
  if (w.dim(2) != k || w.dim(3) != cin) {
    throw ShapeError("conv2d: weight " + shape_str(w.shape()) + " does not match input " +
                     shape_str(x.shape()));
  }
  if (stride == 0 || h + 2 * pad < k || wd + 2 * pad < k) {
    throw ShapeError("conv2d: invalid stride/padding for input " + shape_str(x.shape()));
  }
  const std::size_t ho = (h + 2 * pad - k) / stride + 1;
  const std::size_t wo = (wd + 2 * pad - k) / stride + 1;
  Tensor y(Shape{n, ho, wo, cout});
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t oy = 0; oy < ho; ++oy) {
      for (std::size_t ox = 0; ox < wo; ++ox) {
        double* out = &y[((b * ho + oy) * wo + ox) * cout];
        for (std::size_t ky = 0; ky < k; ++ky) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) -
                                    static_cast<std::ptrdiff_t>(pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t kx = 0; kx < k; ++kx) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                                      static_cast<std::ptrdiff_t>(pad);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(wd)) continue;
            const double* in = x.data() + (((b * h + iy) * wd + ix) * cin);
            for (std::size_t co = 0; co < cout; ++co) {
              const double* wk = w.data() + (((co * k + ky) * k + kx) * cin);
              double s = 0.0;
              for (std::size_t ci = 0; ci < cin; ++ci) s += wk[ci] * in[ci];
              out[co] += s;
            }
          }
        }
      }
    }
  }
  return y;
}

Tensor depthwise_conv2d(const Tensor& x, const Tensor& w, std::size_t stride, std::size_t pad) {
  require_rank(x, 4, "depthwise_conv2d");
  require_rank(w, 3, "depthwise_conv2d");
  const std::size_t n = x.dim(0), h = x.dim(1), wd = x.dim(2), c = x.dim(3);
  const std::size_t k = w.dim(1);
  if (w.dim(0) != c || w.dim(2) != k) {
    throw ShapeError("depthwise_conv2d: weight " + shape_str(w.shape()) +
                     " does not match input " + shape_str(x.shape()));
  }
  if (stride == 0 || h + 2 * pad < k || wd + 2 * pad < k) {
    throw ShapeError("depthwise_conv2d: invalid stride/padding");
  }
  const std::size_t ho = (h + 2 * pad - k) / stride + 1;
  const std::size_t wo = (wd + 2 * pad - k) / stride + 1;
  Tensor y(Shape{n, ho, wo, c});
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t oy = 0; oy < ho; ++oy) {
      for (std::size_t ox = 0; ox < wo; ++ox) {
        double* out = &y[((b * ho + oy) * wo + ox) * c];
        for (std::size_t ky = 0; ky < k; ++ky) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) -
                                    static_cast<std::ptrdiff_t>(pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t kx = 0; kx < k; ++kx) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                                      static_cast<std::ptrdiff_t>(pad);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(wd)) continue;
            const double* in = x.data() + (((b * h + iy) * wd + ix) * c);
            for (std::size_t ch = 0; ch < c; ++ch) out[ch] += w[(ch * k + ky) * k + kx] * in[ch];
          }
        }
      }
    }
  }
  return y;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

}  // namespace kernels

Var add(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  const int mode = broadcast_mode(x, y, "add");
  const Tensor& big = mode == 2 ? y : x;
  const Tensor& small = mode == 2 ? x : y;
  Tensor out = big;
  const std::size_t n = small.size();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += small[i % n];
  auto fn = [mode](const Tensor& g, std::span<Tensor* const> in) {
    for (int k = 0; k < 2; ++k) {
      if (!in[k]) continue;
      const bool reduced = (mode == 1 && k == 1) || (mode == 2 && k == 0);
      if (reduced) {
        reduce_into(g, *in[k]);
      } else {
        for (std::size_t i = 0; i < g.size(); ++i) (*in[k])[i] += g[i];
      }
    }
  };
  return a.tape().record("add", std::move(out), {a, b}, fn);
}

Var sub(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  const int mode = broadcast_mode(x, y, "sub");
  Tensor out(mode == 2 ? y.shape() : x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = x[i % x.size()] - y[i % y.size()];
  }
  auto fn = [mode](const Tensor& g, std::span<Tensor* const> in) {
    for (int k = 0; k < 2; ++k) {
      if (!in[k]) continue;
      const double sign = k == 0 ? 1.0 : -1.0;
      Tensor& acc = *in[k];
      const bool reduced = (mode == 1 && k == 1) || (mode == 2 && k == 0);
      if (reduced) {
        const std::size_t n = acc.size();
        for (std::size_t i = 0; i < g.size(); ++i) acc[i % n] += sign * g[i];
      } else {
        for (std::size_t i = 0; i < g.size(); ++i) acc[i] += sign * g[i];
      }
    }
  };
  return a.tape().record("sub", std::move(out), {a, b}, fn);
}

Var mul(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  const int mode = broadcast_mode(x, y, "mul");
  Tensor out(mode == 2 ? y.shape() : x.shape());
  const std::size_t nx = x.size(), ny = y.size();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i % nx] * y[i % ny];
  Tape* tape = &a.tape();
  const int ia = a.id(), ib = b.id();
  auto fn = [tape, ia, ib](const Tensor& g, std::span<Tensor* const> in) {
    const Tensor& xv = tape->value(ia);
    const Tensor& yv = tape->value(ib);
    const std::size_t nxv = xv.size(), nyv = yv.size();
    if (in[0]) {
      Tensor& acc = *in[0];
      for (std::size_t i = 0; i < g.size(); ++i) acc[i % nxv] += g[i] * yv[i % nyv];
    }
    if (in[1]) {
      Tensor& acc = *in[1];
      for (std::size_t i = 0; i < g.size(); ++i) acc[i % nyv] += g[i] * xv[i % nxv];
    }
  };
  return tape->record("mul", std::move(out), {a, b}, fn);
}

Var scale(Var a, double c) {
  Tensor y = a.value();
  for (double& v : y.values()) v *= c;
  auto fn = [c](const Tensor& g, std::span<Tensor* const> in) {
    for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += c * g[i];
  };
  return a.tape().record("scale", std::move(y), {a}, fn);
}

Var add_scalar(Var a, double c) {
  Tensor y = a.value();
  for (double& v : y.values()) v += c;
  auto fn = [](const Tensor& g, std::span<Tensor* const> in) {
    for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += g[i];
  };
  return a.tape().record("add_scalar", std::move(y), {a}, fn);
}

Var neg(Var a) { return scale(a, -1.0); }

Var square(Var a) {
  return elementwise("square", a, [](double x) { return x * x; },
                     [](double x) { return 2.0 * x; });
}

Var matmul(Var a, Var b, bool trans_a, bool trans_b) {
  Tensor c = kernels::matmul(a.value(), b.value(), trans_a, trans_b);
  Tape* tape = &a.tape();
  const int ia = a.id(), ib = b.id();
  auto fn = [tape, ia, ib, trans_a, trans_b](const Tensor& g, std::span<Tensor* const> in) {
    const Tensor& av = tape->value(ia);
    const Tensor& bv = tape->value(ib);
    auto gm = as_matrix(g);
    if (in[0]) {
      auto ga = as_matrix(*in[0]);
      auto bm = as_matrix(bv);
      // C = A B: dA = G B^T; C = A^T B: dA = B G^T; with B transposed analogously.
      if (!trans_a) {
        if (!trans_b) ga.noalias() += gm * bm.transpose();
        else ga.noalias() += gm * bm;
      } else {
        if (!trans_b) ga.noalias() += bm * gm.transpose();
        else ga.noalias() += bm.transpose() * gm.transpose();
      }
    }
    if (in[1]) {
      auto gb = as_matrix(*in[1]);
      auto am = as_matrix(av);
      if (!trans_b) {
        if (!trans_a) gb.noalias() += am.transpose() * gm;
        else gb.noalias() += am * gm;
      } else {
        if (!trans_a) gb.noalias() += gm.transpose() * am;
        else gb.noalias() += gm.transpose() * am.transpose();
      }
    }
  };
  return tape->record("matmul", std::move(c), {a, b}, fn);
}

Var conv2d(Var x, Var w, std::size_t stride, std::size_t pad) {
  Tensor y = kernels::conv2d(x.value(), w.value(), stride, pad);
  Tape* tape = &x.tape();
  const int ix = x.id(), iw = w.id();
  auto fn = [tape, ix, iw, stride, pad](const Tensor& g, std::span<Tensor* const> in) {
    const Tensor& xv = tape->value(ix);
    const Tensor& wv = tape->value(iw);
    const std::size_t n = xv.dim(0), h = xv.dim(1), wd = xv.dim(2), cin = xv.dim(3);
    const std::size_t cout = wv.dim(0), k = wv.dim(1);
    const std::size_t ho = g.dim(1), wo = g.dim(2);
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t oy = 0; oy < ho; ++oy) {
        for (std::size_t ox = 0; ox < wo; ++ox) {
          const double* go = g.data() + (((b * ho + oy) * wo + ox) * cout);
          for (std::size_t ky = 0; ky < k; ++ky) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) -
                                      static_cast<std::ptrdiff_t>(pad);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
            for (std::size_t kx = 0; kx < k; ++kx) {
              const std::ptrdiff_t ixx = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                                         static_cast<std::ptrdiff_t>(pad);
              if (ixx < 0 || ixx >= static_cast<std::ptrdiff_t>(wd)) continue;
              const std::size_t in_off = ((b * h + iy) * wd + ixx) * cin;
              for (std::size_t co = 0; co < cout; ++co) {
                const std::size_t w_off = ((co * k + ky) * k + kx) * cin;
                if (in[0]) {
                  for (std::size_t ci = 0; ci < cin; ++ci)
                    (*in[0])[in_off + ci] += go[co] * wv[w_off + ci];
                }
                if (in[1]) {
                  for (std::size_t ci = 0; ci < cin; ++ci)
                    (*in[1])[w_off + ci] += go[co] * xv[in_off + ci];
                }
              }
            }
          }
        }
      }
    }
  };
  return tape->record("conv2d", std::move(y), {x, w}, fn);
}

Var depthwise_conv2d(Var x, Var w, std::size_t stride, std::size_t pad) {
  Tensor y = kernels::depthwise_conv2d(x.value(), w.value(), stride, pad);
  Tape* tape = &x.tape();
  const int ix = x.id(), iw = w.id();
  auto fn = [tape, ix, iw, stride, pad](const Tensor& g, std::span<Tensor* const> in) {
    const Tensor& xv = tape->value(ix);
    const Tensor& wv = tape->value(iw);
    const std::size_t n = xv.dim(0), h = xv.dim(1), wd = xv.dim(2), c = xv.dim(3);
    const std::size_t k = wv.dim(1);
    const std::size_t ho = g.dim(1), wo = g.dim(2);
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t oy = 0; oy < ho; ++oy) {
        for (std::size_t ox = 0; ox < wo; ++ox) {
          const double* go = g.data() + (((b * ho + oy) * wo + ox) * c);
          for (std::size_t ky = 0; ky < k; ++ky) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) -
                                      static_cast<std::ptrdiff_t>(pad);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
            for (std::size_t kx = 0; kx < k; ++kx) {
              const std::ptrdiff_t ixx = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                                         static_cast<std::ptrdiff_t>(pad);
              if (ixx < 0 || ixx >= static_cast<std::ptrdiff_t>(wd)) continue;
              const std::size_t in_off = ((b * h + iy) * wd + ixx) * c;
              for (std::size_t ch = 0; ch < c; ++ch) {
                const std::size_t w_off = (ch * k + ky) * k + kx;
                if (in[0]) (*in[0])[in_off + ch] += go[ch] * wv[w_off];
                if (in[1]) (*in[1])[w_off] += go[ch] * xv[in_off + ch];
              }
            }
          }
        }
      }
    }
  };
  return tape->record("depthwise_conv2d", std::move(y), {x, w}, fn);
}

Var sigmoid(Var a) {
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = kernels::sigmoid(x[i]);
  Tape* tape = &a.tape();
  // record() appends exactly one node, so the output id is the current size.
  const int self_id = static_cast<int>(tape->size());
  auto bw = [tape, self_id](const Tensor& g, std::span<Tensor* const> in) {
    const Tensor& yv = tape->value(self_id);
    for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += g[i] * yv[i] * (1.0 - yv[i]);
  };
  return tape->record("sigmoid", std::move(y), {a}, bw);
}

Var softplus(Var a) {
  return elementwise("softplus", a, kernels::softplus,
                     [](double x) { return kernels::sigmoid(x); });
}

Var exp(Var a) {
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::exp(x[i]);
  Tape* tape = &a.tape();
  const int self_id = static_cast<int>(tape->size());
  auto bw = [tape, self_id](const Tensor& g, std::span<Tensor* const> in) {
    const Tensor& yv = tape->value(self_id);
    for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += g[i] * yv[i];
  };
  return tape->record("exp", std::move(y), {a}, bw);
}

Var log(Var a) {
  for (double v : a.value().values()) {
    if (!(v > 0.0)) throw NumericError("log of non-positive value " + std::to_string(v));
  }
  return elementwise("log", a, [](double x) { return std::log(x); },
                     [](double x) { return 1.0 / x; });
}

Var gelu(Var a) {
  return elementwise(
      "gelu", a,
      [](double x) {
        return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
      },
      [](double x) {
        const double t = std::tanh(kGeluC * (x + kGeluA * x * x * x));
        return 0.5 * (1.0 + t) +
               0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * x * x);
      });
}

Var clamp(Var a, double lo, double hi) {
  if (lo > hi) throw ArgumentError("clamp: lo > hi");
  return elementwise("clamp", a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
                     [lo, hi](double x) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Var sum_all(Var a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  auto fn = [](const Tensor& g, std::span<Tensor* const> in) {
    const double gv = g[0];
    for (double& v : in[0]->values()) v += gv;
  };
  return a.tape().record("sum_all", Tensor::scalar(s), {a}, fn);
}

Var mean_all(Var a) {
  const std::size_t n = a.size();
  if (n == 0) throw ShapeError("mean_all: empty tensor");
  return scale(sum_all(a), 1.0 / static_cast<double>(n));
}

namespace {

Shape drop_last(const Shape& s, const char* op) {
  if (s.empty()) throw ShapeError(std::string(op) + ": scalar has no last axis");
  return Shape(s.begin(), s.end() - 1);
}

}  // namespace

Var sum_last(Var a) {
  const Tensor& x = a.value();
  Shape out_shape = drop_last(x.shape(), "sum_last");
  const std::size_t n = x.shape().back();
  Tensor y(out_shape);
  for (std::size_t r = 0; r < y.size(); ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += x[r * n + j];
    y[r] = s;
  }
  auto fn = [n](const Tensor& g, std::span<Tensor* const> in) {
    Tensor& acc = *in[0];
    for (std::size_t r = 0; r < g.size(); ++r)
      for (std::size_t j = 0; j < n; ++j) acc[r * n + j] += g[r];
  };
  return a.tape().record("sum_last", std::move(y), {a}, fn);
}

Var mean_last(Var a) {
  const std::size_t n = a.shape().empty() ? 0 : a.shape().back();
  if (n == 0) throw ShapeError("mean_last: empty last axis");
  return scale(sum_last(a), 1.0 / static_cast<double>(n));
}

Var max_last(Var a) {
  const Tensor& x = a.value();
  Shape out_shape = drop_last(x.shape(), "max_last");
  const std::size_t n = x.shape().back();
  if (n == 0) throw ShapeError("max_last: empty last axis");
  Tensor y(out_shape);
  std::vector<std::size_t> arg(y.size());
  for (std::size_t r = 0; r < y.size(); ++r) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < n; ++j) {
      if (x[r * n + j] > x[r * n + best]) best = j;
    }
    arg[r] = best;
    y[r] = x[r * n + best];
  }
  auto fn = [n, arg = std::move(arg)](const Tensor& g, std::span<Tensor* const> in) {
    for (std::size_t r = 0; r < g.size(); ++r) (*in[0])[r * n + arg[r]] += g[r];
  };
  return a.tape().record("max_last", std::move(y), {a}, fn);
}

Var concat(const std::vector<Var>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& s0 = parts[0].shape();
  if (axis >= s0.size()) throw ShapeError("concat: axis out of range for " + shape_str(s0));
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s0[i];
  for (std::size_t i = axis + 1; i < s0.size(); ++i) inner *= s0[i];
  std::vector<std::size_t> extents;
  std::size_t total = 0;
  for (const Var& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == s0.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = (i == axis) || s[i] == s0[i];
    if (!ok) {
      throw ShapeError("concat: " + shape_str(s) + " incompatible with " + shape_str(s0) +
                       " along axis " + std::to_string(axis));
    }
    extents.push_back(s[axis]);
    total += s[axis];
  }
  Shape out_shape = s0;
  out_shape[axis] = total;
  Tensor y(out_shape);
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const Tensor& x = parts[p].value();
    const std::size_t chunk = extents[p] * inner;
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(x.data() + o * chunk, chunk, y.data() + o * total * inner + offset * inner);
    }
    offset += extents[p];
  }
  auto fn = [extents, outer, inner, total](const Tensor& g, std::span<Tensor* const> in) {
    std::size_t off = 0;
    for (std::size_t p = 0; p < extents.size(); ++p) {
      const std::size_t chunk = extents[p] * inner;
      if (in[p]) {
        Tensor& acc = *in[p];
        for (std::size_t o = 0; o < outer; ++o) {
          const double* src = g.data() + o * total * inner + off * inner;
          for (std::size_t j = 0; j < chunk; ++j) acc[o * chunk + j] += src[j];
        }
      }
      off += extents[p];
    }
  };
  return parts[0].tape().record("concat", std::move(y), parts, fn);
}

Var stack(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("stack: no inputs");
  std::vector<Var> lifted;
  lifted.reserve(parts.size());
  for (const Var& p : parts) {
    Shape s = p.shape();
    s.insert(s.begin(), 1);
    lifted.push_back(reshape(p, std::move(s)));
  }
  return concat(lifted, 0);
}

Var select(Var a, std::size_t i) {
  const Tensor& x = a.value();
  if (x.rank() == 0 || i >= x.dim(0)) {
    throw ShapeError("select: index " + std::to_string(i) + " out of range for " +
                     shape_str(x.shape()));
  }
  Shape out_shape(x.shape().begin() + 1, x.shape().end());
  const std::size_t chunk = shape_numel(out_shape);
  std::vector<double> vals(x.data() + i * chunk, x.data() + (i + 1) * chunk);
  auto fn = [i, chunk](const Tensor& g, std::span<Tensor* const> in) {
    double* dst = in[0]->data() + i * chunk;
    for (std::size_t j = 0; j < chunk; ++j) dst[j] += g[j];
  };
  return a.tape().record("select", Tensor(std::move(out_shape), std::move(vals)), {a}, fn);
}

Var detach(Var a) { return a.tape().constant(a.value()); }

Var reshape(Var a, Shape shape) {
  Tensor y = a.value().reshaped(std::move(shape));
  auto fn = [](const Tensor& g, std::span<Tensor* const> in) {
    for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += g[i];
  };
  return a.tape().record("reshape", std::move(y), {a}, fn);
}

Var l2_normalize(Var a, double eps) {
  const Tensor& x = a.value();
  if (x.rank() == 0) throw ShapeError("l2_normalize: scalar input");
  const std::size_t n = x.shape().back();
  const std::size_t rows = n == 0 ? 0 : x.size() / n;
  Tensor y(x.shape());
  std::vector<double> norms(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double sq = 0.0;
    for (std::size_t j = 0; j < n; ++j) sq += x[r * n + j] * x[r * n + j];
    norms[r] = std::sqrt(sq);
    for (std::size_t j = 0; j < n; ++j) y[r * n + j] = x[r * n + j] / (norms[r] + eps);
  }
  Tape* tape = &a.tape();
  const int ia = a.id();
  auto fn = [tape, ia, n, eps, norms = std::move(norms)](const Tensor& g,
                                                        std::span<Tensor* const> in) {
    const Tensor& xv = tape->value(ia);
    Tensor& acc = *in[0];
    for (std::size_t r = 0; r < norms.size(); ++r) {
      const double nr = norms[r];
      const double d = nr + eps;
      double gx = 0.0;
      for (std::size_t j = 0; j < n; ++j) gx += g[r * n + j] * xv[r * n + j];
      for (std::size_t j = 0; j < n; ++j) {
        double v = g[r * n + j] / d;
        if (nr > 0.0) v -= gx * xv[r * n + j] / (nr * d * d);
        acc[r * n + j] += v;
      }
    }
  };
  return tape->record("l2_normalize", std::move(y), {a}, fn);
}

}  // namespace spikegate
