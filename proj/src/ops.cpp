// Copyright 2026 The hflic Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hflic/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>

#include "hflic/errors.hpp"
#include "hflic/gaussian.hpp"

namespace hflic {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

// ---- broadcasting -------------------------------------------------------

struct Broadcast {
  Shape out;
  std::array<std::size_t, 4> sa{}, sb{};
};

std::array<std::size_t, 4> strides_for(const Shape& s, const Shape& out) {
  std::array<int, 4> dims{s.n, s.c, s.h, s.w};
  std::array<int, 4> od{out.n, out.c, out.h, out.w};
  std::array<std::size_t, 4> st{};
  std::size_t stride = 1;
  for (int d = 3; d >= 0; --d) {
    st[d] = dims[d] == 1 && od[d] != 1 ? 0 : stride;
    stride *= dims[d];
  }
  return st;
}

Broadcast broadcast(const Shape& a, const Shape& b) {
  auto dim = [&](int x, int y) {
    if (x == y || y == 1) return x;
    if (x == 1) return y;
    throw ConfigError("cannot broadcast " + a.str() + " with " + b.str());
  };
  Broadcast bc;
  bc.out = Shape{dim(a.n, b.n), dim(a.c, b.c), dim(a.h, b.h), dim(a.w, b.w)};
  bc.sa = strides_for(a, bc.out);
  bc.sb = strides_for(b, bc.out);
  return bc;
}

// Calls f(out_index, a_index, b_index) for every output element.
template <class F>
void for_each_broadcast(const Broadcast& bc, F&& f) {
  const Shape& o = bc.out;
  std::size_t oi = 0;
  for (int n = 0; n < o.n; ++n)
    for (int c = 0; c < o.c; ++c)
      for (int h = 0; h < o.h; ++h) {
        std::size_t ia = n * bc.sa[0] + c * bc.sa[1] + h * bc.sa[2];
        std::size_t ib = n * bc.sb[0] + c * bc.sb[1] + h * bc.sb[2];
        for (int w = 0; w < o.w; ++w, ++oi) f(oi, ia + w * bc.sa[3], ib + w * bc.sb[3]);
      }
}

// Binary elementwise op. `fwd(a, b)`, `da(a, b)`, `db(a, b)` are scalar lambdas.
template <class Fwd, class Da, class Db>
Var binary(const Var& a, const Var& b, Fwd fwd, Da da, Db db) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out;
  if (av.shape() == bv.shape()) {
    out = Tensor(av.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = fwd(av[i], bv[i]);
    return make_result(std::move(out), {a, b}, [da, db](detail::Node& self) {
      detail::Node& na = *self.inputs[0];
      detail::Node& nb = *self.inputs[1];
      const Tensor& g = self.grad;
      if (na.requires_grad) {
        Tensor& ga = na.grad_buffer();
        for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * da(na.value[i], nb.value[i]);
      }
      if (nb.requires_grad) {
        Tensor& gb = nb.grad_buffer();
        for (std::size_t i = 0; i < g.numel(); ++i) gb[i] += g[i] * db(na.value[i], nb.value[i]);
      }
    });
  }
  Broadcast bc = broadcast(av.shape(), bv.shape());
  out = Tensor(bc.out);
  for_each_broadcast(bc, [&](std::size_t o, std::size_t ia, std::size_t ib) {
    out[o] = fwd(av[ia], bv[ib]);
  });
  return make_result(std::move(out), {a, b}, [bc, da, db](detail::Node& self) {
    detail::Node& na = *self.inputs[0];
    detail::Node& nb = *self.inputs[1];
    const Tensor& g = self.grad;
    Tensor* ga = na.requires_grad ? &na.grad_buffer() : nullptr;
    Tensor* gb = nb.requires_grad ? &nb.grad_buffer() : nullptr;
    for_each_broadcast(bc, [&](std::size_t o, std::size_t ia, std::size_t ib) {
      const double x = na.value[ia];
      const double y = nb.value[ib];
      if (ga) (*ga)[ia] += g[o] * da(x, y);
      if (gb) (*gb)[ib] += g[o] * db(x, y);
    });
  });
}

// Unary op whose derivative is expressed through the input x and output y.
template <class Fwd, class Deriv>
Var unary(const Var& x, Fwd fwd, Deriv deriv) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = fwd(xv[i]);
  return make_result(std::move(out), {x}, [deriv](detail::Node& self) {
    detail::Node& in = *self.inputs[0];
    Tensor& gx = in.grad_buffer();
    for (std::size_t i = 0; i < gx.numel(); ++i) {
      gx[i] += self.grad[i] * deriv(in.value[i], self.value[i]);
    }
  });
}

// ---- convolution helpers ---------------------------------------------------

struct ConvGeom {
  int channels, h, w, k, stride, pad, oh, ow;
  int rows() const { return channels * k * k; }
  int cols() const { return oh * ow; }
  bool pointwise() const { return k == 1 && stride == 1 && pad == 0; }
};

void im2col(const double* x, const ConvGeom& g, double* col) {
  for (int c = 0; c < g.channels; ++c) {
    const double* xc = x + static_cast<std::size_t>(c) * g.h * g.w;
    for (int ki = 0; ki < g.k; ++ki)
      for (int kj = 0; kj < g.k; ++kj) {
        double* row = col + (static_cast<std::size_t>(c * g.k + ki) * g.k + kj) * g.cols();
        for (int oi = 0; oi < g.oh; ++oi) {
          const int ii = oi * g.stride - g.pad + ki;
          double* dst = row + oi * g.ow;
          if (ii < 0 || ii >= g.h) {
            std::fill_n(dst, g.ow, 0.0);
            continue;
          }
          const double* src = xc + ii * g.w;
          for (int oj = 0; oj < g.ow; ++oj) {
            const int jj = oj * g.stride - g.pad + kj;
            dst[oj] = (jj >= 0 && jj < g.w) ? src[jj] : 0.0;
          }
        }
      }
  }
}

void col2im_add(const double* col, const ConvGeom& g, double* x) {
  for (int c = 0; c < g.channels; ++c) {
    double* xc = x + static_cast<std::size_t>(c) * g.h * g.w;
    for (int ki = 0; ki < g.k; ++ki)
      for (int kj = 0; kj < g.k; ++kj) {
        const double* row = col + (static_cast<std::size_t>(c * g.k + ki) * g.k + kj) * g.cols();
        for (int oi = 0; oi < g.oh; ++oi) {
          const int ii = oi * g.stride - g.pad + ki;
          if (ii < 0 || ii >= g.h) continue;
          const double* src = row + oi * g.ow;
          double* dst = xc + ii * g.w;
          for (int oj = 0; oj < g.ow; ++oj) {
            const int jj = oj * g.stride - g.pad + kj;
            if (jj >= 0 && jj < g.w) dst[jj] += src[oj];
          }
        }
      }
  }
}

void add_bias(Tensor& out, const Tensor& bias) {
  const Shape& s = out.shape();
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      double* p = out.plane(n, c);
      const double b = bias[c];
      for (std::size_t i = 0; i < s.plane(); ++i) p[i] += b;
    }
}

void bias_grad(const Tensor& g, detail::Node& bias) {
  if (!bias.requires_grad) return;
  Tensor& gb = bias.grad_buffer();
  const Shape& s = g.shape();
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const double* p = g.plane(n, c);
      double acc = 0.0;
      for (std::size_t i = 0; i < s.plane(); ++i) acc += p[i];
      gb[c] += acc;
    }
}

}  // namespace

// ---- arithmetic --------------------------------------------------------------

Var operator+(const Var& a, const Var& b) {
  return binary(
      a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Var operator-(const Var& a, const Var& b) {
  return binary(
      a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Var operator*(const Var& a, const Var& b) {
  return binary(
      a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Var operator/(const Var& a, const Var& b) {
  return binary(
      a, b, [](double x, double y) { return x / y; }, [](double, double y) { return 1.0 / y; },
      [](double x, double y) { return -x / (y * y); });
}

Var operator*(const Var& a, double s) {
  return unary(
      a, [s](double x) { return x * s; }, [s](double, double) { return s; });
}

Var operator*(double s, const Var& a) { return a * s; }

Var operator+(const Var& a, double s) {
  return unary(
      a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Var operator-(const Var& a) { return a * -1.0; }

Var square(const Var& x) {
  return unary(
      x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Var sqrt(const Var& x) {
  return unary(
      x, [](double v) { return std::sqrt(v); }, [](double, double y) { return 0.5 / y; });
}

Var exp(const Var& x) {
  return unary(
      x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Var log(const Var& x) {
  return unary(
      x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Var relu(const Var& x) {
  return unary(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var leaky_relu(const Var& x, double slope) {
  return unary(
      x, [slope](double v) { return v > 0.0 ? v : slope * v; },
      [slope](double v, double) { return v > 0.0 ? 1.0 : slope; });
}

Var gelu(const Var& x) {
  // tanh approximation; smooth everywhere.
  constexpr double k = 0.79788456080286535588;  // sqrt(2/pi)
  constexpr double c = 0.044715;
  return unary(
      x,
      [](double v) { return 0.5 * v * (1.0 + std::tanh(k * (v + c * v * v * v))); },
      [](double v, double) {
        const double u = k * (v + c * v * v * v);
        const double t = std::tanh(u);
        const double du = k * (1.0 + 3.0 * c * v * v);
        return 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du;
      });
}

Var softplus(const Var& x) {
  return unary(
      x, [](double v) { return v > 30.0 ? v : std::log1p(std::exp(v)); },
      [](double v, double) { return 1.0 / (1.0 + std::exp(-v)); });
}

Var sigmoid(const Var& x) {
  return unary(
      x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(const Var& x) {
  return unary(
      x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

// ---- reductions and reshaping ----------------------------------------------

Var sum(const Var& x) {
  return make_result(Tensor::scalar(x.value().sum()), {x}, [](detail::Node& self) {
    detail::Node& in = *self.inputs[0];
    Tensor& gx = in.grad_buffer();
    const double g = self.grad[0];
    for (double& v : gx.values()) v += g;
  });
}

Var mean(const Var& x) { return sum(x) * (1.0 / static_cast<double>(x.value().numel())); }

Var sum_channels(const Var& x) {
  const Shape s = x.shape();
  Tensor out(Shape{s.n, 1, s.h, s.w});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const double* p = x.value().plane(n, c);
      double* o = out.plane(n, 0);
      for (std::size_t i = 0; i < s.plane(); ++i) o[i] += p[i];
    }
  return make_result(std::move(out), {x}, [s](detail::Node& self) {
    Tensor& gx = self.inputs[0]->grad_buffer();
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < s.c; ++c) {
        double* p = gx.plane(n, c);
        const double* g = self.grad.plane(n, 0);
        for (std::size_t i = 0; i < s.plane(); ++i) p[i] += g[i];
      }
  });
}

Var concat_channels(std::span<const Var> parts) {
  std::vector<Tensor> values;
  std::vector<Var> inputs(parts.begin(), parts.end());
  values.reserve(parts.size());
  for (const auto& p : parts) values.push_back(p.value());
  Tensor out = hflic::concat_channels(values);
  return make_result(std::move(out), inputs, [](detail::Node& self) {
    const Shape& s = self.value.shape();
    int c0 = 0;
    for (auto& in : self.inputs) {
      const int c = in->value.shape().c;
      if (in->requires_grad) {
        Tensor& g = in->grad_buffer();
        for (int n = 0; n < s.n; ++n) {
          const double* src = self.grad.plane(n, c0);
          double* dst = g.plane(n, 0);
          for (std::size_t i = 0; i < c * s.plane(); ++i) dst[i] += src[i];
        }
      }
      c0 += c;
    }
  });
}

Var slice_channels(const Var& x, int begin, int count) {
  Tensor out = x.value().channels(begin, count);
  return make_result(std::move(out), {x}, [begin, count](detail::Node& self) {
    Tensor& g = self.inputs[0]->grad_buffer();
    const Shape& s = self.value.shape();
    for (int n = 0; n < s.n; ++n) {
      const double* src = self.grad.plane(n, 0);
      double* dst = g.plane(n, begin);
      for (std::size_t i = 0; i < count * s.plane(); ++i) dst[i] += src[i];
    }
  });
}

Var detach(const Var& x) { return Var::constant(x.value()); }

Var straight_through(const Var& x, Tensor forward) {
  if (!(forward.shape() == x.shape())) throw ConfigError("straight_through shape mismatch");
  return make_result(std::move(forward), {x},
                     [](detail::Node& self) { accumulate(*self.inputs[0], self.grad); });
}

// ---- convolution -------------------------------------------------------------

Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  if (ws.c != xs.c || ws.h != ws.w) {
    throw ConfigError("conv2d: input " + xs.str() + " incompatible with weight " + ws.str());
  }
  const int k = ws.h;
  ConvGeom g{xs.c, xs.h, xs.w, k, stride, pad, (xs.h + 2 * pad - k) / stride + 1,
             (xs.w + 2 * pad - k) / stride + 1};
  if (g.oh < 1 || g.ow < 1) throw ConfigError("conv2d: empty output for input " + xs.str());
  const int out_c = ws.n;
  Tensor out(Shape{xs.n, out_c, g.oh, g.ow});
  CMapMat wmat(weight.value().data(), out_c, g.rows());
  std::vector<double> col(g.pointwise() ? 0 : static_cast<std::size_t>(g.rows()) * g.cols());
  for (int n = 0; n < xs.n; ++n) {
    const double* src = x.value().plane(n, 0);
    if (!g.pointwise()) {
      im2col(src, g, col.data());
      src = col.data();
    }
    MapMat(out.plane(n, 0), out_c, g.cols()).noalias() = wmat * CMapMat(src, g.rows(), g.cols());
  }
  std::vector<Var> inputs{x, weight};
  if (bias.defined()) {
    add_bias(out, bias.value());
    inputs.push_back(bias);
  }
  return make_result(std::move(out), inputs, [g, out_c](detail::Node& self) {
    detail::Node& nx = *self.inputs[0];
    detail::Node& nw = *self.inputs[1];
    const int batch = nx.value.shape().n;
    CMapMat wmat(nw.value.data(), out_c, g.rows());
    std::vector<double> col(g.pointwise() ? 0 : static_cast<std::size_t>(g.rows()) * g.cols());
    std::vector<double> gcol(static_cast<std::size_t>(g.rows()) * g.cols());
    for (int n = 0; n < batch; ++n) {
      CMapMat gout(self.grad.plane(n, 0), out_c, g.cols());
      if (nw.requires_grad) {
        const double* src = nx.value.plane(n, 0);
        if (!g.pointwise()) {
          im2col(src, g, col.data());
          src = col.data();
        }
        MapMat(nw.grad_buffer().data(), out_c, g.rows()).noalias() +=
            gout * CMapMat(src, g.rows(), g.cols()).transpose();
      }
      if (nx.requires_grad) {
        if (g.pointwise()) {
          MapMat(nx.grad_buffer().plane(n, 0), g.rows(), g.cols()).noalias() +=
              wmat.transpose() * gout;
        } else {
          MapMat(gcol.data(), g.rows(), g.cols()).noalias() = wmat.transpose() * gout;
          col2im_add(gcol.data(), g, nx.grad_buffer().plane(n, 0));
        }
      }
    }
    if (self.inputs.size() > 2) bias_grad(self.grad, *self.inputs[2]);
  });
}

Var conv_transpose2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad,
                     int output_pad) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  if (ws.n != xs.c || ws.h != ws.w) {
    throw ConfigError("conv_transpose2d: input " + xs.str() + " incompatible with weight " +
                      ws.str());
  }
  const int k = ws.h;
  const int out_c = ws.c;
  const int oh = (xs.h - 1) * stride - 2 * pad + k + output_pad;
  const int ow = (xs.w - 1) * stride - 2 * pad + k + output_pad;
  // Geometry of the forward conv that maps the output back to the input grid.
  ConvGeom g{out_c, oh, ow, k, stride, pad, xs.h, xs.w};
  if ((oh + 2 * pad - k) / stride + 1 != xs.h || (ow + 2 * pad - k) / stride + 1 != xs.w) {
    throw ConfigError("conv_transpose2d: inconsistent geometry for " + xs.str());
  }
  Tensor out(Shape{xs.n, out_c, oh, ow});
  CMapMat wmat(weight.value().data(), xs.c, g.rows());
  std::vector<double> col(static_cast<std::size_t>(g.rows()) * g.cols());
  for (int n = 0; n < xs.n; ++n) {
    CMapMat xin(x.value().plane(n, 0), xs.c, g.cols());
    if (g.pointwise()) {
      MapMat(out.plane(n, 0), g.rows(), g.cols()).noalias() = wmat.transpose() * xin;
    } else {
      MapMat(col.data(), g.rows(), g.cols()).noalias() = wmat.transpose() * xin;
      col2im_add(col.data(), g, out.plane(n, 0));
    }
  }
  std::vector<Var> inputs{x, weight};
  if (bias.defined()) {
    add_bias(out, bias.value());
    inputs.push_back(bias);
  }
  return make_result(std::move(out), inputs, [g](detail::Node& self) {
    detail::Node& nx = *self.inputs[0];
    detail::Node& nw = *self.inputs[1];
    const Shape xs = nx.value.shape();
    CMapMat wmat(nw.value.data(), xs.c, g.rows());
    std::vector<double> gcol(static_cast<std::size_t>(g.rows()) * g.cols());
    for (int n = 0; n < xs.n; ++n) {
      const double* src = self.grad.plane(n, 0);
      if (!g.pointwise()) {
        im2col(src, g, gcol.data());
        src = gcol.data();
      }
      CMapMat gc(src, g.rows(), g.cols());
      if (nx.requires_grad) {
        MapMat(nx.grad_buffer().plane(n, 0), xs.c, g.cols()).noalias() += wmat * gc;
      }
      if (nw.requires_grad) {
        MapMat(nw.grad_buffer().data(), xs.c, g.rows()).noalias() +=
            CMapMat(nx.value.plane(n, 0), xs.c, g.cols()) * gc.transpose();
      }
    }
    if (self.inputs.size() > 2) bias_grad(self.grad, *self.inputs[2]);
  });
}

// ---- pooling / resampling ----------------------------------------------------

Var avg_pool(const Var& x, int k) {
  const Shape s = x.shape();
  if (k < 1 || s.h % k != 0 || s.w % k != 0) {
    throw ConfigError("avg_pool: " + s.str() + " not divisible by " + std::to_string(k));
  }
  const int oh = s.h / k, ow = s.w / k;
  const double inv = 1.0 / (k * k);
  Tensor out(Shape{s.n, s.c, oh, ow});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int i = 0; i < s.h; ++i)
        for (int j = 0; j < s.w; ++j) out.at(n, c, i / k, j / k) += x.value().at(n, c, i, j) * inv;
  return make_result(std::move(out), {x}, [k, inv](detail::Node& self) {
    Tensor& gx = self.inputs[0]->grad_buffer();
    const Shape& s = gx.shape();
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < s.c; ++c)
        for (int i = 0; i < s.h; ++i)
          for (int j = 0; j < s.w; ++j) gx.at(n, c, i, j) += self.grad.at(n, c, i / k, j / k) * inv;
  });
}

Var max_pool2(const Var& x) {
  const Shape s = x.shape();
  const int oh = s.h / 2, ow = s.w / 2;
  Tensor out(Shape{s.n, s.c, oh, ow});
  std::vector<std::size_t> arg(out.numel());
  std::size_t o = 0;
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int i = 0; i < oh; ++i)
        for (int j = 0; j < ow; ++j, ++o) {
          std::size_t best = x.value().index(n, c, 2 * i, 2 * j);
          for (int di = 0; di < 2; ++di)
            for (int dj = 0; dj < 2; ++dj) {
              const std::size_t idx = x.value().index(n, c, 2 * i + di, 2 * j + dj);
              if (x.value()[idx] > x.value()[best]) best = idx;
            }
          arg[o] = best;
          out[o] = x.value()[best];
        }
  return make_result(std::move(out), {x}, [arg = std::move(arg)](detail::Node& self) {
    Tensor& gx = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < arg.size(); ++i) gx[arg[i]] += self.grad[i];
  });
}

Var upsample_nearest(const Var& x, int factor) {
  const Shape s = x.shape();
  Tensor out(Shape{s.n, s.c, s.h * factor, s.w * factor});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int i = 0; i < s.h * factor; ++i)
        for (int j = 0; j < s.w * factor; ++j)
          out.at(n, c, i, j) = x.value().at(n, c, i / factor, j / factor);
  return make_result(std::move(out), {x}, [factor](detail::Node& self) {
    Tensor& gx = self.inputs[0]->grad_buffer();
    const Shape& o = self.grad.shape();
    for (int n = 0; n < o.n; ++n)
      for (int c = 0; c < o.c; ++c)
        for (int i = 0; i < o.h; ++i)
          for (int j = 0; j < o.w; ++j)
            gx.at(n, c, i / factor, j / factor) += self.grad.at(n, c, i, j);
  });
}

Var crop(const Var& x, int h, int w) {
  const Shape s = x.shape();
  if (h < 1 || w < 1 || h > s.h || w > s.w) throw ConfigError("crop: bad window for " + s.str());
  if (h == s.h && w == s.w) return x;
  Tensor out = hflic::crop(x.value(), h, w);
  return make_result(std::move(out), {x}, [h, w](detail::Node& self) {
    Tensor& gx = self.inputs[0]->grad_buffer();
    const Shape& s = gx.shape();
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < s.c; ++c)
        for (int i = 0; i < h; ++i)
          for (int j = 0; j < w; ++j) gx.at(n, c, i, j) += self.grad.at(n, c, i, j);
  });
}

// ---- style statistics --------------------------------------------------------

Var patch_gram(const Var& features, int patch) {
  const Shape s = features.shape();
  if (patch < 1 || s.h % patch != 0 || s.w % patch != 0) {
    throw ConfigError("patch_gram: patch " + std::to_string(patch) + " does not divide " +
                      s.str());
  }
  const int wh = s.h / patch, ww = s.w / patch;
  const int area = patch * patch;
  const double norm = 1.0 / (static_cast<double>(s.c) * area);
  Tensor out(Shape{s.n, wh * ww, s.c, s.c});
  RowMat fw(s.c, area);
  auto gather = [s, patch](const Tensor& t, int n, int a, int b, RowMat& dst) {
    for (int c = 0; c < s.c; ++c)
      for (int i = 0; i < patch; ++i)
        for (int j = 0; j < patch; ++j) dst(c, i * patch + j) = t.at(n, c, a * patch + i, b * patch + j);
  };
  for (int n = 0; n < s.n; ++n)
    for (int a = 0; a < wh; ++a)
      for (int b = 0; b < ww; ++b) {
        gather(features.value(), n, a, b, fw);
        MapMat(out.plane(n, a * ww + b), s.c, s.c).noalias() = norm * fw * fw.transpose();
      }
  return make_result(std::move(out), {features}, [=](detail::Node& self) {
    detail::Node& in = *self.inputs[0];
    Tensor& gx = in.grad_buffer();
    RowMat f(s.c, area);
    RowMat gf(s.c, area);
    for (int n = 0; n < s.n; ++n)
      for (int a = 0; a < wh; ++a)
        for (int b = 0; b < ww; ++b) {
          gather(in.value, n, a, b, f);
          CMapMat gg(self.grad.plane(n, a * ww + b), s.c, s.c);
          gf.noalias() = norm * (gg + gg.transpose()) * f;
          for (int c = 0; c < s.c; ++c)
            for (int i = 0; i < patch; ++i)
              for (int j = 0; j < patch; ++j)
                gx.at(n, c, a * patch + i, b * patch + j) += gf(c, i * patch + j);
        }
  });
}

// ---- rate ------------------------------------------------------------------------

Var gaussian_bits(const Var& y, const Var& mu, const Var& sigma) {
  const Shape s = y.shape();
  if (!(mu.shape() == s) || !(sigma.shape() == s)) {
    throw ConfigError("gaussian_bits: shape mismatch " + s.str());
  }
  Tensor out(s);
  for (std::size_t i = 0; i < out.numel(); ++i) {
    out[i] = floored_bits(
        gaussian_bin_probability(y.value()[i] - mu.value()[i], sigma.value()[i]));
  }
  return make_result(std::move(out), {y, mu, sigma}, [](detail::Node& self) {
    detail::Node& ny = *self.inputs[0];
    detail::Node& nm = *self.inputs[1];
    detail::Node& ns = *self.inputs[2];
    Tensor* gy = ny.requires_grad ? &ny.grad_buffer() : nullptr;
    Tensor* gm = nm.requires_grad ? &nm.grad_buffer() : nullptr;
    Tensor* gs = ns.requires_grad ? &ns.grad_buffer() : nullptr;
    constexpr double inv_ln2 = 1.4426950408889634074;
    for (std::size_t i = 0; i < self.grad.numel(); ++i) {
      const double v = ny.value[i] - nm.value[i];
      const double sig = ns.value[i];
      const double a = std::abs(v);
      const double u = (0.5 - a) / sig;
      const double l = (-0.5 - a) / sig;
      const double p = std_normal_cdf(u) - std_normal_cdf(l);
      if (p < kProbabilityFloor) continue;  // floored: constant 16 bits
      const double pu = std_normal_pdf(u), pl = std_normal_pdf(l);
      const double dp_da = (pl - pu) / sig;
      const double dp_dv = v > 0 ? dp_da : (v < 0 ? -dp_da : 0.0);
      const double dp_ds = -(u * pu - l * pl) / sig;
      const double scale = -self.grad[i] * inv_ln2 / p;
      if (gy) (*gy)[i] += scale * dp_dv;
      if (gm) (*gm)[i] -= scale * dp_dv;
      if (gs) (*gs)[i] += scale * dp_ds;
    }
  });
}

}  // namespace hflic
