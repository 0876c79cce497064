/* Copyright 2026 The IRSN Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "irsn/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace irsn {
namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

ConstMatMap cmap(const float* p, int64_t rows, int64_t cols) { return ConstMatMap(p, rows, cols); }
MatMap mmap(float* p, int64_t rows, int64_t cols) { return MatMap(p, rows, cols); }

bool wants_grad(const Tensor& t) { return t.defined() && t.requires_grad(); }

std::vector<int64_t> contiguous_strides(const Shape& shape) {
  std::vector<int64_t> strides(shape.size(), 1);
  for (int i = static_cast<int>(shape.size()) - 2; i >= 0; --i) strides[i] = strides[i + 1] * shape[i + 1];
  return strides;
}

// Strides of `shape` viewed inside a right-aligned broadcast to `out`.
std::vector<int64_t> broadcast_strides(const Shape& shape, const Shape& out) {
  std::vector<int64_t> own = contiguous_strides(shape);
  std::vector<int64_t> strides(out.size(), 0);
  const size_t offset = out.size() - shape.size();
  for (size_t i = 0; i < shape.size(); ++i) strides[offset + i] = shape[i] == 1 ? 0 : own[i];
  return strides;
}

Shape broadcast_shape(const Shape& a, const Shape& b) {
  const size_t rank = std::max(a.size(), b.size());
  Shape out(rank);
  for (size_t i = 0; i < rank; ++i) {
    const int64_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
    const int64_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw ShapeError("shape mismatch: cannot broadcast " + shape_str(a) + " with " + shape_str(b));
    }
    out[i] = std::max(da, db);
  }
  return out;
}

// Visits every output element of a broadcast as (out, ia, ib) flat offsets,
// in row-major order.
template <typename Fn>
void for_each_broadcast(const Shape& out, const std::vector<int64_t>& sa, const std::vector<int64_t>& sb, Fn&& fn) {
  const size_t rank = out.size();
  const int64_t inner = out[rank - 1];
  const int64_t ia_step = sa[rank - 1];
  const int64_t ib_step = sb[rank - 1];
  const int64_t outer = shape_numel(out) / inner;
  std::vector<int64_t> idx(rank, 0);
  int64_t ia = 0, ib = 0, o = 0;
  for (int64_t row = 0; row < outer; ++row) {
    for (int64_t j = 0; j < inner; ++j) fn(o + j, ia + j * ia_step, ib + j * ib_step);
    o += inner;
    for (int axis = static_cast<int>(rank) - 2; axis >= 0; --axis) {
      ia += sa[axis];
      ib += sb[axis];
      if (++idx[axis] < out[axis]) break;
      ia -= sa[axis] * out[axis];
      ib -= sb[axis] * out[axis];
      idx[axis] = 0;
    }
  }
}

}  // namespace

Tensor ew_binary(const Tensor& a, const Tensor& b, BinaryKind kind) {
  const Shape out_shape = broadcast_shape(a.shape(), b.shape());
  const int64_t n = shape_numel(out_shape);
  std::vector<float> out(static_cast<size_t>(n));
  const float* pa = a.data().data();
  const float* pb = b.data().data();
  const bool same = a.shape() == b.shape();
  auto apply = [kind](float x, float y) {
    switch (kind) {
      case BinaryKind::kAdd: return x + y;
      case BinaryKind::kSub: return x - y;
      case BinaryKind::kMul: return x * y;
    }
    return 0.0f;
  };
  std::vector<int64_t> sa, sb;
  if (same) {
    for (int64_t i = 0; i < n; ++i) out[i] = apply(pa[i], pb[i]);
  } else {
    sa = broadcast_strides(a.shape(), out_shape);
    sb = broadcast_strides(b.shape(), out_shape);
    for_each_broadcast(out_shape, sa, sb, [&](int64_t o, int64_t i, int64_t j) { out[o] = apply(pa[i], pb[j]); });
  }
  const char* name = kind == BinaryKind::kAdd ? "add" : kind == BinaryKind::kSub ? "sub" : "mul";
  return detail::make_result(
      out_shape, std::move(out), {a, b},
      [a, b, kind, same, out_shape, sa, sb](TensorImpl& res) {
        const float* g = res.grad.data();
        TensorImpl* ai = a.impl();
        TensorImpl* bi = b.impl();
        float* ga = ai->requires_grad ? ai->grad_buffer() : nullptr;
        float* gb = bi->requires_grad ? bi->grad_buffer() : nullptr;
        const float* pa = ai->data.data();
        const float* pb = bi->data.data();
        const float sign_b = kind == BinaryKind::kSub ? -1.0f : 1.0f;
        auto step = [&](int64_t o, int64_t i, int64_t j) {
          if (kind == BinaryKind::kMul) {
            if (ga) ga[i] += g[o] * pb[j];
            if (gb) gb[j] += g[o] * pa[i];
          } else {
            if (ga) ga[i] += g[o];
            if (gb) gb[j] += sign_b * g[o];
          }
        };
        if (same) {
          const int64_t n = static_cast<int64_t>(res.data.size());
          for (int64_t i = 0; i < n; ++i) step(i, i, i);
        } else {
          for_each_broadcast(out_shape, sa, sb, step);
        }
      },
      name);
}

Tensor scale(const Tensor& x, float factor) {
  std::vector<float> out(x.data().begin(), x.data().end());
  for (float& v : out) v *= factor;
  return detail::make_result(
      x.shape(), std::move(out), {x},
      [x, factor](TensorImpl& res) {
        float* gx = x.impl()->grad_buffer();
        for (size_t i = 0; i < res.grad.size(); ++i) gx[i] += factor * res.grad[i];
      },
      "scale");
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  const int ra = a.rank();
  const int rb = b.rank();
  if (ra < 2 || ra > 3 || rb < 2 || rb > 3 || (ra == 2 && rb == 3)) {
    throw ShapeError("matmul: unsupported ranks " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  const int64_t m = a.dim(-2), k = a.dim(-1);
  const int64_t kb = b.dim(-2), n = b.dim(-1);
  if (k != kb) throw ShapeError("matmul: inner dimension mismatch " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  const bool batched_rhs = rb == 3;
  const int64_t batch = ra == 3 ? a.dim(0) : 1;
  if (batched_rhs && b.dim(0) != batch) {
    throw ShapeError("matmul: batch mismatch " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  Shape out_shape = ra == 3 ? Shape{batch, m, n} : Shape{m, n};
  std::vector<float> out(static_cast<size_t>(batch * m * n));
  if (!batched_rhs) {
    // Shared rhs: fold the batch into the rows.
    mmap(out.data(), batch * m, n).noalias() = cmap(a.data().data(), batch * m, k) * cmap(b.data().data(), k, n);
  } else {
    for (int64_t s = 0; s < batch; ++s) {
      mmap(out.data() + s * m * n, m, n).noalias() =
          cmap(a.data().data() + s * m * k, m, k) * cmap(b.data().data() + s * k * n, k, n);
    }
  }
  return detail::make_result(
      std::move(out_shape), std::move(out), {a, b},
      [a, b, batch, m, k, n, batched_rhs](TensorImpl& res) {
        TensorImpl* ai = a.impl();
        TensorImpl* bi = b.impl();
        const float* g = res.grad.data();
        if (!batched_rhs) {
          auto gm = cmap(g, batch * m, n);
          if (ai->requires_grad) mmap(ai->grad_buffer(), batch * m, k).noalias() += gm * cmap(bi->data.data(), k, n).transpose();
          if (bi->requires_grad) mmap(bi->grad_buffer(), k, n).noalias() += cmap(ai->data.data(), batch * m, k).transpose() * gm;
          return;
        }
        for (int64_t s = 0; s < batch; ++s) {
          auto gm = cmap(g + s * m * n, m, n);
          if (ai->requires_grad) {
            mmap(ai->grad_buffer() + s * m * k, m, k).noalias() += gm * cmap(bi->data.data() + s * k * n, k, n).transpose();
          }
          if (bi->requires_grad) {
            mmap(bi->grad_buffer() + s * k * n, k, n).noalias() += cmap(ai->data.data() + s * m * k, m, k).transpose() * gm;
          }
        }
      },
      "matmul");
}

namespace {

struct ConvGeometry {
  int64_t batch, cin, h, w, cout, kh, kw, oh, ow;
  int stride, pad;
  int64_t patch() const { return cin * kh * kw; }
  int64_t positions() const { return oh * ow; }
};

// cols is [cin*kh*kw, batch*oh*ow]
void im2col(const float* x, const ConvGeometry& g, float* cols) {
  const int64_t total = g.batch * g.positions();
  for (int64_t c = 0; c < g.cin; ++c) {
    for (int64_t ki = 0; ki < g.kh; ++ki) {
      for (int64_t kj = 0; kj < g.kw; ++kj) {
        float* row = cols + ((c * g.kh + ki) * g.kw + kj) * total;
        for (int64_t s = 0; s < g.batch; ++s) {
          const float* plane = x + (s * g.cin + c) * g.h * g.w;
          float* dst = row + s * g.positions();
          for (int64_t oy = 0; oy < g.oh; ++oy) {
            const int64_t iy = oy * g.stride - g.pad + ki;
            for (int64_t ox = 0; ox < g.ow; ++ox) {
              const int64_t ix = ox * g.stride - g.pad + kj;
              dst[oy * g.ow + ox] = (iy >= 0 && iy < g.h && ix >= 0 && ix < g.w) ? plane[iy * g.w + ix] : 0.0f;
            }
          }
        }
      }
    }
  }
}

void col2im(const float* cols, const ConvGeometry& g, float* dx) {
  const int64_t total = g.batch * g.positions();
  for (int64_t c = 0; c < g.cin; ++c) {
    for (int64_t ki = 0; ki < g.kh; ++ki) {
      for (int64_t kj = 0; kj < g.kw; ++kj) {
        const float* row = cols + ((c * g.kh + ki) * g.kw + kj) * total;
        for (int64_t s = 0; s < g.batch; ++s) {
          float* plane = dx + (s * g.cin + c) * g.h * g.w;
          const float* src = row + s * g.positions();
          for (int64_t oy = 0; oy < g.oh; ++oy) {
            const int64_t iy = oy * g.stride - g.pad + ki;
            if (iy < 0 || iy >= g.h) continue;
            for (int64_t ox = 0; ox < g.ow; ++ox) {
              const int64_t ix = ox * g.stride - g.pad + kj;
              if (ix >= 0 && ix < g.w) plane[iy * g.w + ix] += src[oy * g.ow + ox];
            }
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& kernels, const Tensor& bias, int stride, int padding) {
  if (x.rank() != 3 && x.rank() != 4) throw ShapeError("conv2d: input must be [C,H,W] or [B,C,H,W], got " + shape_str(x.shape()));
  if (kernels.rank() != 4) throw ShapeError("conv2d: kernels must be [O,C,kh,kw], got " + shape_str(kernels.shape()));
  if (stride < 1 || padding < 0) throw ShapeError("conv2d: stride must be >= 1 and padding >= 0");
  const bool batched = x.rank() == 4;
  ConvGeometry g{};
  g.batch = batched ? x.dim(0) : 1;
  g.cin = x.dim(-3);
  g.h = x.dim(-2);
  g.w = x.dim(-1);
  g.cout = kernels.dim(0);
  g.kh = kernels.dim(2);
  g.kw = kernels.dim(3);
  g.stride = stride;
  g.pad = padding;
  if (kernels.dim(1) != g.cin) {
    throw ShapeError("conv2d: channel mismatch " + shape_str(x.shape()) + " vs kernels " + shape_str(kernels.shape()));
  }
  if (g.kh > g.h + 2 * padding || g.kw > g.w + 2 * padding) {
    throw ShapeError("conv2d: kernel " + shape_str(kernels.shape()) + " larger than padded input " + shape_str(x.shape()));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != g.cout)) {
    throw ShapeError("conv2d: bias must be [" + std::to_string(g.cout) + "], got " + shape_str(bias.shape()));
  }
  g.oh = (g.h + 2 * padding - g.kh) / stride + 1;
  g.ow = (g.w + 2 * padding - g.kw) / stride + 1;

  const int64_t total = g.batch * g.positions();
  auto cols = std::make_shared<std::vector<float>>(static_cast<size_t>(g.patch() * total));
  im2col(x.data().data(), g, cols->data());

  std::vector<float> flat(static_cast<size_t>(g.cout * total));
  auto fm = mmap(flat.data(), g.cout, total);
  fm.noalias() = cmap(kernels.data().data(), g.cout, g.patch()) * cmap(cols->data(), g.patch(), total);
  if (bias.defined()) fm.colwise() += Eigen::Map<const Eigen::VectorXf>(bias.data().data(), g.cout);

  // [O, B*P] -> [B, O, P]
  std::vector<float> out(flat.size());
  for (int64_t s = 0; s < g.batch; ++s) {
    for (int64_t o = 0; o < g.cout; ++o) {
      std::copy_n(flat.data() + o * total + s * g.positions(), g.positions(), out.data() + (s * g.cout + o) * g.positions());
    }
  }
  Shape out_shape = batched ? Shape{g.batch, g.cout, g.oh, g.ow} : Shape{g.cout, g.oh, g.ow};
  std::vector<Tensor> inputs{x, kernels};
  if (bias.defined()) inputs.push_back(bias);
  if (!grad_enabled() || !(wants_grad(x) || wants_grad(kernels) || wants_grad(bias))) cols.reset();
  return detail::make_result(
      std::move(out_shape), std::move(out), inputs,
      [x, kernels, bias, g, cols](TensorImpl& res) {
        const int64_t total = g.batch * g.positions();
        std::vector<float> gflat(static_cast<size_t>(g.cout * total));
        for (int64_t s = 0; s < g.batch; ++s) {
          for (int64_t o = 0; o < g.cout; ++o) {
            std::copy_n(res.grad.data() + (s * g.cout + o) * g.positions(), g.positions(), gflat.data() + o * total + s * g.positions());
          }
        }
        auto gm = cmap(gflat.data(), g.cout, total);
        if (kernels.requires_grad()) {
          mmap(kernels.impl()->grad_buffer(), g.cout, g.patch()).noalias() += gm * cmap(cols->data(), g.patch(), total).transpose();
        }
        if (bias.defined() && bias.requires_grad()) {
          float* gb = bias.impl()->grad_buffer();
          for (int64_t o = 0; o < g.cout; ++o) {
            double acc = 0.0;
            for (int64_t p = 0; p < total; ++p) acc += gflat[o * total + p];
            gb[o] += static_cast<float>(acc);
          }
        }
        if (x.requires_grad()) {
          std::vector<float> dcols(static_cast<size_t>(g.patch() * total));
          mmap(dcols.data(), g.patch(), total).noalias() = cmap(kernels.data().data(), g.cout, g.patch()).transpose() * gm;
          col2im(dcols.data(), g, x.impl()->grad_buffer());
        }
      },
      "conv2d");
}

Tensor activation(const Tensor& x, Activation kind) {
  const auto in = x.data();
  const int64_t n = x.numel();
  std::vector<float> out(static_cast<size_t>(n));
  switch (kind) {
    case Activation::kSigmoid:
      for (int64_t i = 0; i < n; ++i) out[i] = 1.0f / (1.0f + std::exp(-in[i]));
      break;
    case Activation::kGelu:
      for (int64_t i = 0; i < n; ++i) out[i] = 0.5f * in[i] * (1.0f + std::erf(in[i] * static_cast<float>(M_SQRT1_2)));
      break;
    case Activation::kRelu:
      for (int64_t i = 0; i < n; ++i) out[i] = in[i] > 0.0f ? in[i] : 0.0f;
      break;
    case Activation::kSoftmaxLastDim: {
      if (x.rank() < 1) throw ShapeError("softmax needs rank >= 1");
      const int64_t cols = x.dim(-1);
      for (int64_t r = 0; r < n / cols; ++r) {
        const float* src = in.data() + r * cols;
        float* dst = out.data() + r * cols;
        const float mx = *std::max_element(src, src + cols);
        double total = 0.0;
        for (int64_t j = 0; j < cols; ++j) {
          dst[j] = std::exp(src[j] - mx);
          total += dst[j];
        }
        const float inv = static_cast<float>(1.0 / total);
        for (int64_t j = 0; j < cols; ++j) dst[j] *= inv;
      }
      break;
    }
  }
  static constexpr const char* kNames[] = {"sigmoid", "gelu", "relu", "softmax"};
  return detail::make_result(
      x.shape(), std::move(out), {x},
      [x, kind](TensorImpl& res) {
        float* gx = x.impl()->grad_buffer();
        const float* g = res.grad.data();
        const float* y = res.data.data();
        const float* xin = x.impl()->data.data();
        const int64_t n = static_cast<int64_t>(res.data.size());
        switch (kind) {
          case Activation::kSigmoid:
            for (int64_t i = 0; i < n; ++i) gx[i] += g[i] * y[i] * (1.0f - y[i]);
            break;
          case Activation::kGelu: {
            const float inv_sqrt_2pi = 0.3989422804014327f;
            for (int64_t i = 0; i < n; ++i) {
              const float v = xin[i];
              const float cdf = 0.5f * (1.0f + std::erf(v * static_cast<float>(M_SQRT1_2)));
              gx[i] += g[i] * (cdf + v * inv_sqrt_2pi * std::exp(-0.5f * v * v));
            }
            break;
          }
          case Activation::kRelu:
            for (int64_t i = 0; i < n; ++i) gx[i] += xin[i] > 0.0f ? g[i] : 0.0f;
            break;
          case Activation::kSoftmaxLastDim: {
            const int64_t cols = res.shape.back();
            for (int64_t r = 0; r < n / cols; ++r) {
              const int64_t base = r * cols;
              double dot = 0.0;
              for (int64_t j = 0; j < cols; ++j) dot += static_cast<double>(g[base + j]) * y[base + j];
              for (int64_t j = 0; j < cols; ++j) gx[base + j] += y[base + j] * (g[base + j] - static_cast<float>(dot));
            }
            break;
          }
        }
      },
      kNames[static_cast<int>(kind)]);
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps) {
  if (!(eps > 0.0f)) throw std::invalid_argument("layer_norm: eps must be positive");
  const int64_t cols = x.dim(-1);
  if (gamma.numel() != cols || beta.numel() != cols) {
    throw ShapeError("layer_norm: gamma/beta must have " + std::to_string(cols) + " entries, got " + shape_str(gamma.shape()) +
                     " and " + shape_str(beta.shape()));
  }
  const int64_t rows = x.numel() / cols;
  std::vector<float> out(static_cast<size_t>(x.numel()));
  auto xhat = std::make_shared<std::vector<float>>(out.size());
  auto inv_std = std::make_shared<std::vector<float>>(static_cast<size_t>(rows));
  const float* in = x.data().data();
  const float* gm = gamma.data().data();
  const float* bt = beta.data().data();
  for (int64_t r = 0; r < rows; ++r) {
    const float* row = in + r * cols;
    double mu = 0.0;
    for (int64_t j = 0; j < cols; ++j) mu += row[j];
    mu /= static_cast<double>(cols);
    double var = 0.0;
    for (int64_t j = 0; j < cols; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(cols);
    const double istd = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = static_cast<float>(istd);
    for (int64_t j = 0; j < cols; ++j) {
      const float xh = static_cast<float>((row[j] - mu) * istd);
      (*xhat)[r * cols + j] = xh;
      out[r * cols + j] = gm[j] * xh + bt[j];
    }
  }
  return detail::make_result(
      x.shape(), std::move(out), {x, gamma, beta},
      [x, gamma, beta, xhat, inv_std, rows, cols](TensorImpl& res) {
        const float* g = res.grad.data();
        const float* gm = gamma.data().data();
        if (gamma.requires_grad() || beta.requires_grad()) {
          float* gg = gamma.requires_grad() ? gamma.impl()->grad_buffer() : nullptr;
          float* gb = beta.requires_grad() ? beta.impl()->grad_buffer() : nullptr;
          for (int64_t j = 0; j < cols; ++j) {
            double sg = 0.0, sb = 0.0;
            for (int64_t r = 0; r < rows; ++r) {
              sg += static_cast<double>(g[r * cols + j]) * (*xhat)[r * cols + j];
              sb += g[r * cols + j];
            }
            if (gg) gg[j] += static_cast<float>(sg);
            if (gb) gb[j] += static_cast<float>(sb);
          }
        }
        if (!x.requires_grad()) return;
        float* gx = x.impl()->grad_buffer();
        for (int64_t r = 0; r < rows; ++r) {
          double mean_d = 0.0, mean_dx = 0.0;
          for (int64_t j = 0; j < cols; ++j) {
            const double d = static_cast<double>(g[r * cols + j]) * gm[j];
            mean_d += d;
            mean_dx += d * (*xhat)[r * cols + j];
          }
          mean_d /= static_cast<double>(cols);
          mean_dx /= static_cast<double>(cols);
          for (int64_t j = 0; j < cols; ++j) {
            const double d = static_cast<double>(g[r * cols + j]) * gm[j];
            gx[r * cols + j] += static_cast<float>((*inv_std)[r] * (d - mean_d - (*xhat)[r * cols + j] * mean_dx));
          }
        }
      },
      "layer_norm");
}

namespace {
int64_t window_start(int64_t i, int64_t in, int64_t out) { return (i * in) / out; }
int64_t window_end(int64_t i, int64_t in, int64_t out) { return ((i + 1) * in + out - 1) / out; }
}  // namespace

Tensor adaptive_avg_pool2d(const Tensor& x, int64_t out_h, int64_t out_w) {
  if (x.rank() < 2) throw ShapeError("adaptive_avg_pool2d: need spatial axes, got " + shape_str(x.shape()));
  const int64_t h = x.dim(-2), w = x.dim(-1);
  if (out_h < 1 || out_w < 1 || out_h > h || out_w > w) {
    throw ShapeError("adaptive_avg_pool2d: output " + std::to_string(out_h) + "x" + std::to_string(out_w) +
                     " larger than input " + shape_str(x.shape()));
  }
  const int64_t planes = x.numel() / (h * w);
  Shape out_shape = x.shape();
  out_shape[out_shape.size() - 2] = out_h;
  out_shape.back() = out_w;
  std::vector<float> out(static_cast<size_t>(planes * out_h * out_w));
  const float* in = x.data().data();
  for (int64_t p = 0; p < planes; ++p) {
    const float* plane = in + p * h * w;
    for (int64_t i = 0; i < out_h; ++i) {
      const int64_t y0 = window_start(i, h, out_h), y1 = window_end(i, h, out_h);
      for (int64_t j = 0; j < out_w; ++j) {
        const int64_t x0 = window_start(j, w, out_w), x1 = window_end(j, w, out_w);
        double acc = 0.0;
        for (int64_t yy = y0; yy < y1; ++yy) {
          for (int64_t xx = x0; xx < x1; ++xx) acc += plane[yy * w + xx];
        }
        out[(p * out_h + i) * out_w + j] = static_cast<float>(acc / static_cast<double>((y1 - y0) * (x1 - x0)));
      }
    }
  }
  return detail::make_result(
      std::move(out_shape), std::move(out), {x},
      [x, planes, h, w, out_h, out_w](TensorImpl& res) {
        float* gx = x.impl()->grad_buffer();
        const float* g = res.grad.data();
        for (int64_t p = 0; p < planes; ++p) {
          for (int64_t i = 0; i < out_h; ++i) {
            const int64_t y0 = window_start(i, h, out_h), y1 = window_end(i, h, out_h);
            for (int64_t j = 0; j < out_w; ++j) {
              const int64_t x0 = window_start(j, w, out_w), x1 = window_end(j, w, out_w);
              const float share = g[(p * out_h + i) * out_w + j] / static_cast<float>((y1 - y0) * (x1 - x0));
              for (int64_t yy = y0; yy < y1; ++yy) {
                for (int64_t xx = x0; xx < x1; ++xx) gx[p * h * w + yy * w + xx] += share;
              }
            }
          }
        }
      },
      "adaptive_avg_pool2d");
}

Tensor pad2d(const Tensor& x, int64_t top, int64_t bottom, int64_t left, int64_t right) {
  if (x.rank() < 2) throw ShapeError("pad2d: need spatial axes, got " + shape_str(x.shape()));
  if (top < 0 || bottom < 0 || left < 0 || right < 0) throw ShapeError("pad2d: negative padding");
  const int64_t h = x.dim(-2), w = x.dim(-1);
  const int64_t nh = h + top + bottom, nw = w + left + right;
  const int64_t planes = x.numel() / (h * w);
  Shape out_shape = x.shape();
  out_shape[out_shape.size() - 2] = nh;
  out_shape.back() = nw;
  std::vector<float> out(static_cast<size_t>(planes * nh * nw), 0.0f);
  const float* in = x.data().data();
  for (int64_t p = 0; p < planes; ++p) {
    for (int64_t y = 0; y < h; ++y) std::copy_n(in + (p * h + y) * w, w, out.data() + (p * nh + y + top) * nw + left);
  }
  return detail::make_result(
      std::move(out_shape), std::move(out), {x},
      [x, planes, h, w, nh, nw, top, left](TensorImpl& res) {
        float* gx = x.impl()->grad_buffer();
        for (int64_t p = 0; p < planes; ++p) {
          for (int64_t y = 0; y < h; ++y) {
            const float* src = res.grad.data() + (p * nh + y + top) * nw + left;
            float* dst = gx + (p * h + y) * w;
            for (int64_t xx = 0; xx < w; ++xx) dst[xx] += src[xx];
          }
        }
      },
      "pad2d");
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  }
  std::vector<float> out(x.data().begin(), x.data().end());
  return detail::make_result(
      std::move(shape), std::move(out), {x},
      [x](TensorImpl& res) {
        float* gx = x.impl()->grad_buffer();
        for (size_t i = 0; i < res.grad.size(); ++i) gx[i] += res.grad[i];
      },
      "reshape");
}

Tensor permute(const Tensor& x, const std::vector<int>& order) {
  const int r = x.rank();
  if (static_cast<int>(order.size()) != r) throw ShapeError("permute: order rank mismatch for " + shape_str(x.shape()));
  std::vector<bool> used(r, false);
  for (int a : order) {
    if (a < 0 || a >= r || used[a]) throw ShapeError("permute: invalid axis order for " + shape_str(x.shape()));
    used[a] = true;
  }
  const auto in_strides = contiguous_strides(x.shape());
  Shape out_shape(r);
  std::vector<int64_t> src_strides(r);
  for (int i = 0; i < r; ++i) {
    out_shape[i] = x.shape()[order[i]];
    src_strides[i] = in_strides[order[i]];
  }
  // gather[o] = flat source offset of output element o
  auto gather = std::make_shared<std::vector<int64_t>>(static_cast<size_t>(x.numel()));
  std::vector<int64_t> zero(r, 0);
  for_each_broadcast(out_shape, src_strides, zero, [&](int64_t o, int64_t src, int64_t) { (*gather)[o] = src; });
  std::vector<float> out(gather->size());
  const float* in = x.data().data();
  for (size_t o = 0; o < out.size(); ++o) out[o] = in[(*gather)[o]];
  return detail::make_result(
      std::move(out_shape), std::move(out), {x},
      [x, gather](TensorImpl& res) {
        float* gx = x.impl()->grad_buffer();
        for (size_t o = 0; o < res.grad.size(); ++o) gx[(*gather)[o]] += res.grad[o];
      },
      "permute");
}

Tensor transpose_last2(const Tensor& x) {
  std::vector<int> order(static_cast<size_t>(x.rank()));
  std::iota(order.begin(), order.end(), 0);
  std::swap(order[order.size() - 1], order[order.size() - 2]);
  return permute(x, order);
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const int r = parts[0].rank();
  if (axis < 0) axis += r;
  if (axis < 0 || axis >= r) throw ShapeError("concat: axis out of range");
  Shape out_shape = parts[0].shape();
  out_shape[axis] = 0;
  for (const Tensor& p : parts) {
    Shape probe = p.shape();
    if (static_cast<int>(probe.size()) != r) throw ShapeError("concat: rank mismatch " + shape_str(p.shape()));
    for (int i = 0; i < r; ++i) {
      if (i != axis && probe[i] != parts[0].shape()[i]) {
        throw ShapeError("concat: shape mismatch " + shape_str(parts[0].shape()) + " vs " + shape_str(p.shape()));
      }
    }
    out_shape[axis] += probe[axis];
  }
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= out_shape[i];
  for (int i = axis + 1; i < r; ++i) inner *= out_shape[i];
  const int64_t row = out_shape[axis] * inner;
  std::vector<float> out(static_cast<size_t>(outer * row));
  std::vector<int64_t> offsets;
  int64_t off = 0;
  for (const Tensor& p : parts) {
    offsets.push_back(off);
    const int64_t chunk = p.shape()[axis] * inner;
    for (int64_t o = 0; o < outer; ++o) std::copy_n(p.data().data() + o * chunk, chunk, out.data() + o * row + off);
    off += chunk;
  }
  return detail::make_result(
      std::move(out_shape), std::move(out), parts,
      [parts, offsets, outer, inner, row, axis](TensorImpl& res) {
        for (size_t k = 0; k < parts.size(); ++k) {
          if (!parts[k].requires_grad()) continue;
          float* gp = parts[k].impl()->grad_buffer();
          const int64_t chunk = parts[k].shape()[axis] * inner;
          for (int64_t o = 0; o < outer; ++o) {
            const float* src = res.grad.data() + o * row + offsets[k];
            for (int64_t i = 0; i < chunk; ++i) gp[o * chunk + i] += src[i];
          }
        }
      },
      "concat");
}

Tensor slice(const Tensor& x, int axis, int64_t start, int64_t length) {
  const int r = x.rank();
  if (axis < 0) axis += r;
  if (axis < 0 || axis >= r) throw ShapeError("slice: axis out of range");
  const int64_t extent = x.shape()[axis];
  if (start < 0 || length < 1 || start + length > extent) {
    throw ShapeError("slice: range [" + std::to_string(start) + ", " + std::to_string(start + length) + ") outside " +
                     shape_str(x.shape()));
  }
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= x.shape()[i];
  for (int i = axis + 1; i < r; ++i) inner *= x.shape()[i];
  Shape out_shape = x.shape();
  out_shape[axis] = length;
  const int64_t chunk = length * inner;
  std::vector<float> out(static_cast<size_t>(outer * chunk));
  for (int64_t o = 0; o < outer; ++o) std::copy_n(x.data().data() + o * extent * inner + start * inner, chunk, out.data() + o * chunk);
  return detail::make_result(
      std::move(out_shape), std::move(out), {x},
      [x, outer, inner, extent, start, chunk](TensorImpl& res) {
        float* gx = x.impl()->grad_buffer();
        for (int64_t o = 0; o < outer; ++o) {
          float* dst = gx + o * extent * inner + start * inner;
          for (int64_t i = 0; i < chunk; ++i) dst[i] += res.grad[o * chunk + i];
        }
      },
      "slice");
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (float v : x.data()) acc += v;
  return detail::make_result(
      {1}, {static_cast<float>(acc)}, {x},
      [x](TensorImpl& res) {
        float* gx = x.impl()->grad_buffer();
        const float g = res.grad[0];
        for (int64_t i = 0; i < x.numel(); ++i) gx[i] += g;
      },
      "sum");
}

Tensor mean(const Tensor& x) {
  double acc = 0.0;
  for (float v : x.data()) acc += v;
  const double n = static_cast<double>(x.numel());
  return detail::make_result(
      {1}, {static_cast<float>(acc / n)}, {x},
      [x, n](TensorImpl& res) {
        float* gx = x.impl()->grad_buffer();
        const float g = static_cast<float>(res.grad[0] / n);
        for (int64_t i = 0; i < x.numel(); ++i) gx[i] += g;
      },
      "mean");
}

Tensor cross_entropy_label_smooth(const Tensor& logits, std::span<const int> labels, float eps) {
  if (!(eps >= 0.0f && eps < 1.0f)) throw std::invalid_argument("label smoothing eps must lie in [0, 1)");
  if (logits.rank() != 1 && logits.rank() != 2) throw ShapeError("cross entropy: logits must be [B,K] or [K], got " + shape_str(logits.shape()));
  const int64_t k = logits.dim(-1);
  const int64_t batch = logits.rank() == 2 ? logits.dim(0) : 1;
  if (static_cast<int64_t>(labels.size()) != batch) {
    throw ShapeError("cross entropy: " + std::to_string(labels.size()) + " labels for batch of " + std::to_string(batch));
  }
  for (int y : labels) {
    if (y < 0 || y >= k) throw std::out_of_range("cross entropy: label " + std::to_string(y) + " outside [0, " + std::to_string(k) + ")");
  }
  const double off = static_cast<double>(eps) / static_cast<double>(k);
  const double on = 1.0 - static_cast<double>(eps) + off;
  auto probs = std::make_shared<std::vector<float>>(static_cast<size_t>(batch * k));
  double total = 0.0;
  const float* z = logits.data().data();
  for (int64_t b = 0; b < batch; ++b) {
    const float* row = z + b * k;
    const double mx = *std::max_element(row, row + k);
    double se = 0.0;
    for (int64_t j = 0; j < k; ++j) se += std::exp(row[j] - mx);
    const double lse = mx + std::log(se);
    for (int64_t j = 0; j < k; ++j) {
      const double logp = row[j] - lse;
      (*probs)[b * k + j] = static_cast<float>(std::exp(logp));
      total -= (j == labels[b] ? on : off) * logp;
    }
  }
  std::vector<int> label_copy(labels.begin(), labels.end());
  return detail::make_result(
      {1}, {static_cast<float>(total / static_cast<double>(batch))}, {logits},
      [logits, probs, label_copy, batch, k, on, off](TensorImpl& res) {
        float* gz = logits.impl()->grad_buffer();
        const double g = res.grad[0] / static_cast<double>(batch);
        for (int64_t b = 0; b < batch; ++b) {
          for (int64_t j = 0; j < k; ++j) {
            const double q = j == label_copy[b] ? on : off;
            gz[b * k + j] += static_cast<float>(g * ((*probs)[b * k + j] - q));
          }
        }
      },
      "cross_entropy");
}

double smoothed_target_entropy(int num_classes, float eps) {
  const double off = static_cast<double>(eps) / num_classes;
  const double on = 1.0 - static_cast<double>(eps) + off;
  double h = -on * std::log(on);
  if (off > 0.0) h -= (num_classes - 1) * off * std::log(off);
  return h;
}

}  // namespace irsn
