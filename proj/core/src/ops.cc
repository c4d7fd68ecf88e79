/* Copyright 2026 The FPENet Authors. All Rights Reserved.

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

#include "fpenet/ops.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

namespace fpenet {

namespace {

int floor_div(int a, int b) {
  int q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

int ceil_div(int a, int b) { return -floor_div(-a, b); }

// Output indices o in [0, out_extent) whose input index o*stride + offset
// falls inside [0, in_extent).
std::pair<int, int> valid_range(int offset, int stride, int in_extent,
                                int out_extent) {
  int lo = std::max(0, ceil_div(-offset, stride));
  int hi = std::min(out_extent, floor_div(in_extent - 1 - offset, stride) + 1);
  return {lo, std::max(lo, hi)};
}

void require_same_shape(const char* context, const Shape& a, const Shape& b) {
  if (a.n != b.n) throw DimensionError(context, "batch", a.n, b.n);
  if (a.c != b.c) throw DimensionError(context, "channels", a.c, b.c);
  if (a.h != b.h) throw DimensionError(context, "height", a.h, b.h);
  if (a.w != b.w) throw DimensionError(context, "width", a.w, b.w);
}

}  // namespace

void ConvSpec::validate() const {
  if (in_channels < 1 || out_channels < 1 || kernel_h < 1 || kernel_w < 1 ||
      stride < 1 || dilation < 1 || groups < 1 || padding < 0) {
    throw ConfigError("ConvSpec: extents, stride, dilation and groups must be "
                      "positive and padding non-negative");
  }
  if (in_channels % groups != 0 || out_channels % groups != 0) {
    throw ConfigError("ConvSpec: groups (" + std::to_string(groups) +
                      ") must divide in_channels (" +
                      std::to_string(in_channels) + ") and out_channels (" +
                      std::to_string(out_channels) + ")");
  }
}

int ConvSpec::output_extent(int in, int kernel) const {
  int numer = in + 2 * padding - dilation * (kernel - 1) - 1;
  int out = floor_div(numer, stride) + 1;
  if (out < 1) {
    throw ConfigError("ConvSpec: non-positive output extent for input " +
                      std::to_string(in));
  }
  return out;
}

Shape ConvSpec::output_shape(const Shape& in) const {
  return Shape{in.n, out_channels, output_extent(in.h, kernel_h),
               output_extent(in.w, kernel_w)};
}

ConvSpec ConvSpec::depthwise3x3(int channels, int dilation, int stride) {
  ConvSpec s;
  s.in_channels = s.out_channels = s.groups = channels;
  s.kernel_h = s.kernel_w = 3;
  s.stride = stride;
  s.dilation = dilation;
  s.padding = dilation;
  return s;
}

ConvSpec ConvSpec::pointwise(int in, int out, bool bias) {
  ConvSpec s;
  s.in_channels = in;
  s.out_channels = out;
  s.has_bias = bias;
  return s;
}

template <typename T>
void BatchNormState<T>::update_running(const Tensor<T>& batch_mean,
                                       const Tensor<T>& batch_var_unbiased) {
  for (int c = 0; c < channels(); ++c) {
    running_mean[c] = (T(1) - momentum) * running_mean[c] +
                      momentum * batch_mean[c];
    running_var[c] = (T(1) - momentum) * running_var[c] +
                     momentum * std::max(T(0), batch_var_unbiased[c]);
  }
}

namespace ops {

namespace {

template <typename T>
void check_conv_args(const Tensor<T>& x, const Tensor<T>& weight,
                     const Tensor<T>* bias, const ConvSpec& spec) {
  spec.validate();
  if (x.c() != spec.in_channels) {
    throw DimensionError("conv2d input", "channels", spec.in_channels, x.c());
  }
  const Shape ws = spec.weight_shape();
  const Shape& got = weight.shape();
  if (got.n != ws.n) throw DimensionError("conv2d weight", "out_channels", ws.n, got.n);
  if (got.c != ws.c) throw DimensionError("conv2d weight", "in_channels/groups", ws.c, got.c);
  if (got.h != ws.h) throw DimensionError("conv2d weight", "kernel_h", ws.h, got.h);
  if (got.w != ws.w) throw DimensionError("conv2d weight", "kernel_w", ws.w, got.w);
  if (spec.has_bias) {
    if (bias == nullptr) {
      throw ConfigError("conv2d: spec requests a bias but none was given");
    }
    if (bias->size() != static_cast<std::size_t>(spec.out_channels)) {
      throw DimensionError("conv2d bias", "length", spec.out_channels,
                           static_cast<long>(bias->size()));
    }
  } else if (bias != nullptr) {
    throw ConfigError("conv2d: bias given for a bias-free spec");
  }
}

}  // namespace

namespace {

// Columns kept in registers by the dense kernels.
constexpr int kLanes = 16;

// c[M x N] += A * b[K x N] where A(i, k) = a[i * si + k * sk]. Covers both
// a and its transpose. Each output strip accumulates in registers over K.
template <typename T>
void gemm_acc_strided(int M, int N, int K, const T* a, std::size_t si,
                      std::size_t sk, const T* b, T* c) {
  for (int i = 0; i < M; ++i) {
    T* ci = c + static_cast<std::size_t>(i) * N;
    const T* ai = a + i * si;
    int j0 = 0;
    for (; j0 + kLanes <= N; j0 += kLanes) {
      T acc[kLanes];
      for (int l = 0; l < kLanes; ++l) acc[l] = ci[j0 + l];
      for (int k = 0; k < K; ++k) {
        const T av = ai[k * sk];
        const T* bk = b + static_cast<std::size_t>(k) * N + j0;
        for (int l = 0; l < kLanes; ++l) acc[l] += av * bk[l];
      }
      for (int l = 0; l < kLanes; ++l) ci[j0 + l] = acc[l];
    }
    for (; j0 < N; ++j0) {
      T acc = ci[j0];
      for (int k = 0; k < K; ++k) {
        acc += ai[k * sk] * b[static_cast<std::size_t>(k) * N + j0];
      }
      ci[j0] = acc;
    }
  }
}

// c[M x N] += a[M x K] * b[K x N], all row-major and dense.
template <typename T>
void gemm_acc(int M, int N, int K, const T* a, const T* b, T* c) {
  gemm_acc_strided(M, N, K, a, static_cast<std::size_t>(K), 1, b, c);
}

// c[K x N] += a[M x K]^T * b[M x N].
template <typename T>
void gemm_at_acc(int M, int N, int K, const T* a, const T* b, T* c) {
  gemm_acc_strided(K, N, M, a, 1, static_cast<std::size_t>(K), b, c);
}

template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
  T acc[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (int l = 0; l < 8; ++l) acc[l] += a[i + l] * b[i + l];
  }
  T s = T(0);
  for (int l = 0; l < 8; ++l) s += acc[l];
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

// c[M x K] += a[M x N] * b[K x N]^T.
template <typename T>
void gemm_bt_acc(int M, int N, int K, const T* a, const T* b, T* c) {
  for (int m = 0; m < M; ++m) {
    for (int k = 0; k < K; ++k) {
      c[static_cast<std::size_t>(m) * K + k] +=
          dot(a + static_cast<std::size_t>(m) * N,
              b + static_cast<std::size_t>(k) * N, static_cast<std::size_t>(N));
    }
  }
}

bool is_plain_pointwise(const ConvSpec& s) {
  return s.kernel_h == 1 && s.kernel_w == 1 && s.stride == 1 &&
         s.padding == 0;
}

// Unfolds the channels [c0, c0 + channels) of image n into rows
// (c, ky, kx) x columns (oy, ox).
template <typename T>
void im2col(const Tensor<T>& x, int n, int c0, int channels,
            const ConvSpec& spec, int OH, int OW, T* col) {
  const int H = x.h(), W = x.w(), s = spec.stride;
  const std::size_t P = static_cast<std::size_t>(OH) * OW;
  std::fill(col, col + P * channels * spec.kernel_h * spec.kernel_w, T(0));
  for (int c = 0; c < channels; ++c) {
    const T* xp = x.plane(n, c0 + c);
    for (int ky = 0; ky < spec.kernel_h; ++ky) {
      const int y_off = ky * spec.dilation - spec.padding;
      const auto [y0, y1] = valid_range(y_off, s, H, OH);
      for (int kx = 0; kx < spec.kernel_w; ++kx) {
        const int x_off = kx * spec.dilation - spec.padding;
        const auto [x0, x1] = valid_range(x_off, s, W, OW);
        T* row = col + ((static_cast<std::size_t>(c) * spec.kernel_h + ky) *
                            spec.kernel_w + kx) * P;
        for (int oy = y0; oy < y1; ++oy) {
          const T* xr = xp + static_cast<std::size_t>(oy * s + y_off) * W;
          T* dst = row + static_cast<std::size_t>(oy) * OW;
          for (int ox = x0; ox < x1; ++ox) dst[ox] = xr[ox * s + x_off];
        }
      }
    }
  }
}

// Adjoint of im2col: accumulates columns back into the gradient planes.
template <typename T>
void col2im_acc(const T* col, int n, int c0, int channels,
                const ConvSpec& spec, int OH, int OW, Tensor<T>& gx) {
  const int H = gx.h(), W = gx.w(), s = spec.stride;
  const std::size_t P = static_cast<std::size_t>(OH) * OW;
  for (int c = 0; c < channels; ++c) {
    T* gp = gx.plane(n, c0 + c);
    for (int ky = 0; ky < spec.kernel_h; ++ky) {
      const int y_off = ky * spec.dilation - spec.padding;
      const auto [y0, y1] = valid_range(y_off, s, H, OH);
      for (int kx = 0; kx < spec.kernel_w; ++kx) {
        const int x_off = kx * spec.dilation - spec.padding;
        const auto [x0, x1] = valid_range(x_off, s, W, OW);
        const T* row = col + ((static_cast<std::size_t>(c) * spec.kernel_h +
                               ky) * spec.kernel_w + kx) * P;
        for (int oy = y0; oy < y1; ++oy) {
          T* gr = gp + static_cast<std::size_t>(oy * s + y_off) * W;
          const T* src = row + static_cast<std::size_t>(oy) * OW;
          for (int ox = x0; ox < x1; ++ox) gr[ox * s + x_off] += src[ox];
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight,
                 const Tensor<T>* bias, const ConvSpec& spec) {
  check_conv_args(x, weight, bias, spec);
  const Shape out_shape = spec.output_shape(x.shape());
  Tensor<T> out(out_shape);
  const int icg = spec.in_channels / spec.groups;
  const int ocg = spec.out_channels / spec.groups;
  const int OH = out_shape.h, OW = out_shape.w;
  const int P = OH * OW;
  const int K = icg * spec.kernel_h * spec.kernel_w;
  const bool direct = is_plain_pointwise(spec);
  std::vector<T> col(direct ? 0 : static_cast<std::size_t>(K) * P);

  for (int n = 0; n < x.n(); ++n) {
    if (bias != nullptr) {
      for (int oc = 0; oc < spec.out_channels; ++oc) {
        T* op = out.plane(n, oc);
        std::fill(op, op + P, (*bias)[oc]);
      }
    }
    for (int g = 0; g < spec.groups; ++g) {
      const T* b = x.plane(n, g * icg);
      if (!direct) {
        im2col(x, n, g * icg, icg, spec, OH, OW, col.data());
        b = col.data();
      }
      const T* a = weight.ptr() + static_cast<std::size_t>(g) * ocg * K;
      gemm_acc(ocg, P, K, a, b, out.plane(n, g * ocg));
    }
  }
  return out;
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& weight,
                             const Tensor<T>& grad_out, const ConvSpec& spec) {
  const Shape out_shape = spec.output_shape(x.shape());
  require_same_shape("conv2d_backward grad_out", out_shape, grad_out.shape());
  ConvGrads<T> g{Tensor<T>(x.shape()), Tensor<T>(weight.shape()),
                 std::nullopt};
  const int icg = spec.in_channels / spec.groups;
  const int ocg = spec.out_channels / spec.groups;
  const int OH = out_shape.h, OW = out_shape.w;
  const int P = OH * OW;
  const int K = icg * spec.kernel_h * spec.kernel_w;
  const bool direct = is_plain_pointwise(spec);
  std::vector<T> col(direct ? 0 : static_cast<std::size_t>(K) * P);
  std::vector<T> dcol(direct ? 0 : static_cast<std::size_t>(K) * P);

  for (int n = 0; n < x.n(); ++n) {
    for (int grp = 0; grp < spec.groups; ++grp) {
      const T* dy = grad_out.plane(n, grp * ocg);
      const T* w = weight.ptr() + static_cast<std::size_t>(grp) * ocg * K;
      T* dw = g.weight.ptr() + static_cast<std::size_t>(grp) * ocg * K;
      if (direct) {
        gemm_bt_acc(ocg, P, K, dy, x.plane(n, grp * icg), dw);
        gemm_at_acc(ocg, P, K, w, dy, g.input.plane(n, grp * icg));
      } else {
        im2col(x, n, grp * icg, icg, spec, OH, OW, col.data());
        gemm_bt_acc(ocg, P, K, dy, col.data(), dw);
        std::fill(dcol.begin(), dcol.end(), T(0));
        gemm_at_acc(ocg, P, K, w, dy, dcol.data());
        col2im_acc(dcol.data(), n, grp * icg, icg, spec, OH, OW, g.input);
      }
    }
  }

  if (spec.has_bias) {
    Tensor<T> gb(Shape{1, spec.out_channels, 1, 1});
    for (int n = 0; n < grad_out.n(); ++n) {
      for (int oc = 0; oc < spec.out_channels; ++oc) {
        const T* gp = grad_out.plane(n, oc);
        T acc = T(0);
        for (std::size_t i = 0; i < grad_out.shape().plane(); ++i) acc += gp[i];
        gb[oc] += acc;
      }
    }
    g.bias = std::move(gb);
  }
  return g;
}

namespace {

template <typename T>
void check_channel_vector(const char* context, const Tensor<T>& v, int c) {
  if (v.size() != static_cast<std::size_t>(c)) {
    throw DimensionError(context, "channels", c, static_cast<long>(v.size()));
  }
}

}  // namespace

template <typename T>
BatchNormTrainResult<T> batch_norm_train(const Tensor<T>& x,
                                         const Tensor<T>& gamma,
                                         const Tensor<T>& beta, T eps) {
  const int C = x.c();
  check_channel_vector("batch_norm gamma", gamma, C);
  check_channel_vector("batch_norm beta", beta, C);
  BatchNormTrainResult<T> r{Tensor<T>(x.shape()), Tensor<T>(x.shape()),
                            channel_vector<T>(C, T(0)),
                            channel_vector<T>(C, T(0)),
                            channel_vector<T>(C, T(0)), 0};
  const std::size_t plane = x.shape().plane();
  r.count = static_cast<long>(plane) * x.n();
  for (int c = 0; c < C; ++c) {
    double sum = 0.0;
    for (int n = 0; n < x.n(); ++n) {
      const T* p = x.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) sum += p[i];
    }
    const double mean = sum / static_cast<double>(r.count);
    double sq = 0.0;
    for (int n = 0; n < x.n(); ++n) {
      const T* p = x.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) {
        const double d = p[i] - mean;
        sq += d * d;
      }
    }
    const double var = sq / static_cast<double>(r.count);
    const T inv_std = static_cast<T>(1.0 / std::sqrt(var + eps));
    r.mean[c] = static_cast<T>(mean);
    r.var[c] = static_cast<T>(var);
    r.inv_std[c] = inv_std;
    const T m = static_cast<T>(mean);
    for (int n = 0; n < x.n(); ++n) {
      const T* p = x.plane(n, c);
      T* xh = r.normalized.plane(n, c);
      T* o = r.output.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) {
        xh[i] = (p[i] - m) * inv_std;
        o[i] = gamma[c] * xh[i] + beta[c];
      }
    }
  }
  return r;
}

template <typename T>
Tensor<T> batch_norm_infer(const Tensor<T>& x, const Tensor<T>& gamma,
                           const Tensor<T>& beta,
                           const Tensor<T>& running_mean,
                           const Tensor<T>& running_var, T eps) {
  const int C = x.c();
  check_channel_vector("batch_norm gamma", gamma, C);
  check_channel_vector("batch_norm beta", beta, C);
  check_channel_vector("batch_norm running_mean", running_mean, C);
  check_channel_vector("batch_norm running_var", running_var, C);
  Tensor<T> out(x.shape());
  const std::size_t plane = x.shape().plane();
  for (int c = 0; c < C; ++c) {
    const T scale = gamma[c] / std::sqrt(running_var[c] + eps);
    const T shift = beta[c] - running_mean[c] * scale;
    for (int n = 0; n < x.n(); ++n) {
      const T* p = x.plane(n, c);
      T* o = out.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) o[i] = p[i] * scale + shift;
    }
  }
  return out;
}

template <typename T>
BatchNormGrads<T> batch_norm_train_backward(const Tensor<T>& normalized,
                                            const Tensor<T>& inv_std,
                                            const Tensor<T>& gamma,
                                            const Tensor<T>& grad_out) {
  require_same_shape("batch_norm_backward", normalized.shape(),
                     grad_out.shape());
  const int C = normalized.c();
  BatchNormGrads<T> g{Tensor<T>(normalized.shape()),
                      channel_vector<T>(C, T(0)), channel_vector<T>(C, T(0))};
  const std::size_t plane = normalized.shape().plane();
  const double count = static_cast<double>(plane) * normalized.n();
  for (int c = 0; c < C; ++c) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (int n = 0; n < normalized.n(); ++n) {
      const T* gp = grad_out.plane(n, c);
      const T* xh = normalized.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) {
        sum_g += gp[i];
        sum_gx += static_cast<double>(gp[i]) * xh[i];
      }
    }
    g.beta[c] = static_cast<T>(sum_g);
    g.gamma[c] = static_cast<T>(sum_gx);
    const T k = gamma[c] * inv_std[c];
    const T mean_g = static_cast<T>(sum_g / count);
    const T mean_gx = static_cast<T>(sum_gx / count);
    for (int n = 0; n < normalized.n(); ++n) {
      const T* gp = grad_out.plane(n, c);
      const T* xh = normalized.plane(n, c);
      T* gi = g.input.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) {
        gi[i] = k * (gp[i] - mean_g - xh[i] * mean_gx);
      }
    }
  }
  return g;
}

template <typename T>
BatchNormGrads<T> batch_norm_infer_backward(const Tensor<T>& x,
                                            const Tensor<T>& gamma,
                                            const Tensor<T>& running_mean,
                                            const Tensor<T>& running_var,
                                            T eps, const Tensor<T>& grad_out) {
  require_same_shape("batch_norm_backward", x.shape(), grad_out.shape());
  const int C = x.c();
  BatchNormGrads<T> g{Tensor<T>(x.shape()), channel_vector<T>(C, T(0)),
                      channel_vector<T>(C, T(0))};
  const std::size_t plane = x.shape().plane();
  for (int c = 0; c < C; ++c) {
    const T inv = T(1) / std::sqrt(running_var[c] + eps);
    T sum_g = T(0), sum_gx = T(0);
    for (int n = 0; n < x.n(); ++n) {
      const T* gp = grad_out.plane(n, c);
      const T* xp = x.plane(n, c);
      T* gi = g.input.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) {
        sum_g += gp[i];
        sum_gx += gp[i] * (xp[i] - running_mean[c]) * inv;
        gi[i] = gp[i] * gamma[c] * inv;
      }
    }
    g.beta[c] = sum_g;
    g.gamma[c] = sum_gx;
  }
  return g;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = x[i] > T(0) ? x[i] : T(0);
  }
  return out;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& grad_out) {
  require_same_shape("relu_backward", x.shape(), grad_out.shape());
  Tensor<T> g(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    g[i] = x[i] > T(0) ? grad_out[i] : T(0);
  }
  return g;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape("add", a.shape(), b.shape());
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

namespace {

enum class Broadcast { kChannel, kSpatial };

Broadcast classify_broadcast(const Shape& a, const Shape& b) {
  if (b.n != a.n) throw DimensionError("mul_broadcast", "batch", a.n, b.n);
  if (b.c == a.c && b.h == 1 && b.w == 1) return Broadcast::kChannel;
  if (b.c == 1 && b.h == a.h && b.w == a.w) return Broadcast::kSpatial;
  if (b.c != 1 && b.c != a.c) {
    throw DimensionError("mul_broadcast", "channels", a.c, b.c);
  }
  if (b.h != 1 && b.h != a.h) {
    throw DimensionError("mul_broadcast", "height", a.h, b.h);
  }
  throw DimensionError("mul_broadcast", "width", a.w, b.w);
}

}  // namespace

template <typename T>
Tensor<T> mul_broadcast(const Tensor<T>& a, const Tensor<T>& b) {
  const Broadcast kind = classify_broadcast(a.shape(), b.shape());
  Tensor<T> out(a.shape());
  const std::size_t plane = a.shape().plane();
  for (int n = 0; n < a.n(); ++n) {
    for (int c = 0; c < a.c(); ++c) {
      const T* ap = a.plane(n, c);
      T* op = out.plane(n, c);
      if (kind == Broadcast::kChannel) {
        const T s = b.at(n, c, 0, 0);
        for (std::size_t i = 0; i < plane; ++i) op[i] = ap[i] * s;
      } else {
        const T* bp = b.plane(n, 0);
        for (std::size_t i = 0; i < plane; ++i) op[i] = ap[i] * bp[i];
      }
    }
  }
  return out;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> mul_broadcast_backward(
    const Tensor<T>& a, const Tensor<T>& b, const Tensor<T>& grad_out) {
  require_same_shape("mul_broadcast_backward", a.shape(), grad_out.shape());
  const Broadcast kind = classify_broadcast(a.shape(), b.shape());
  Tensor<T> ga(a.shape());
  Tensor<T> gb(b.shape());
  const std::size_t plane = a.shape().plane();
  for (int n = 0; n < a.n(); ++n) {
    for (int c = 0; c < a.c(); ++c) {
      const T* ap = a.plane(n, c);
      const T* gp = grad_out.plane(n, c);
      T* gap = ga.plane(n, c);
      if (kind == Broadcast::kChannel) {
        const T s = b.at(n, c, 0, 0);
        T acc = T(0);
        for (std::size_t i = 0; i < plane; ++i) {
          gap[i] = gp[i] * s;
          acc += gp[i] * ap[i];
        }
        gb.at(n, c, 0, 0) = acc;
      } else {
        const T* bp = b.plane(n, 0);
        T* gbp = gb.plane(n, 0);
        for (std::size_t i = 0; i < plane; ++i) {
          gap[i] = gp[i] * bp[i];
          gbp[i] += gp[i] * ap[i];
        }
      }
    }
  }
  return {std::move(ga), std::move(gb)};
}

template <typename T>
Tensor<T> concat_channels(const std::vector<const Tensor<T>*>& parts) {
  if (parts.empty()) throw ConfigError("concat_channels: no inputs");
  const Shape& first = parts.front()->shape();
  int channels = 0;
  for (const Tensor<T>* p : parts) {
    const Shape& s = p->shape();
    if (s.n != first.n) throw DimensionError("concat_channels", "batch", first.n, s.n);
    if (s.h != first.h) throw DimensionError("concat_channels", "height", first.h, s.h);
    if (s.w != first.w) throw DimensionError("concat_channels", "width", first.w, s.w);
    channels += s.c;
  }
  Tensor<T> out(Shape{first.n, channels, first.h, first.w});
  const std::size_t plane = first.plane();
  for (int n = 0; n < first.n; ++n) {
    int c0 = 0;
    for (const Tensor<T>* p : parts) {
      std::memcpy(out.plane(n, c0), p->plane(n, 0),
                  sizeof(T) * plane * p->c());
      c0 += p->c();
    }
  }
  return out;
}

template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts) {
  std::vector<const Tensor<T>*> ptrs;
  ptrs.reserve(parts.size());
  for (const auto& p : parts) ptrs.push_back(&p);
  return concat_channels(ptrs);
}

template <typename T>
std::vector<Tensor<T>> split_channels(const Tensor<T>& x, int parts) {
  if (parts < 1 || x.c() % parts != 0) {
    throw ConfigError("split_channels: " + std::to_string(x.c()) +
                      " channels are not divisible into " +
                      std::to_string(parts) + " parts");
  }
  const int per = x.c() / parts;
  const std::size_t plane = x.shape().plane();
  std::vector<Tensor<T>> out;
  out.reserve(parts);
  for (int k = 0; k < parts; ++k) {
    Tensor<T> t(Shape{x.n(), per, x.h(), x.w()});
    for (int n = 0; n < x.n(); ++n) {
      std::memcpy(t.plane(n, 0), x.plane(n, k * per), sizeof(T) * plane * per);
    }
    out.push_back(std::move(t));
  }
  return out;
}

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x) {
  Tensor<T> out(Shape{x.n(), x.c(), 1, 1});
  const std::size_t plane = x.shape().plane();
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      const T* p = x.plane(n, c);
      double acc = 0.0;
      for (std::size_t i = 0; i < plane; ++i) acc += p[i];
      out.at(n, c, 0, 0) = static_cast<T>(acc / static_cast<double>(plane));
    }
  }
  return out;
}

template <typename T>
Tensor<T> global_avg_pool_backward(const Tensor<T>& grad_out, int h, int w) {
  Tensor<T> g(Shape{grad_out.n(), grad_out.c(), h, w});
  const std::size_t plane = g.shape().plane();
  const T scale = T(1) / static_cast<T>(plane);
  for (int n = 0; n < g.n(); ++n) {
    for (int c = 0; c < g.c(); ++c) {
      std::fill(g.plane(n, c), g.plane(n, c) + plane,
                grad_out.at(n, c, 0, 0) * scale);
    }
  }
  return g;
}

template <typename T>
Tensor<T> channel_mean(const Tensor<T>& x) {
  Tensor<T> out(Shape{x.n(), 1, x.h(), x.w()});
  const std::size_t plane = x.shape().plane();
  std::vector<double> acc(plane);
  for (int n = 0; n < x.n(); ++n) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int c = 0; c < x.c(); ++c) {
      const T* p = x.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) acc[i] += p[i];
    }
    T* o = out.plane(n, 0);
    for (std::size_t i = 0; i < plane; ++i) {
      o[i] = static_cast<T>(acc[i] / x.c());
    }
  }
  return out;
}

template <typename T>
Tensor<T> channel_mean_backward(const Tensor<T>& grad_out, int channels) {
  Tensor<T> g(Shape{grad_out.n(), channels, grad_out.h(), grad_out.w()});
  const std::size_t plane = g.shape().plane();
  const T scale = T(1) / static_cast<T>(channels);
  for (int n = 0; n < g.n(); ++n) {
    const T* gp = grad_out.plane(n, 0);
    for (int c = 0; c < channels; ++c) {
      T* o = g.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) o[i] = gp[i] * scale;
    }
  }
  return g;
}

namespace {

// Source taps for one output axis of the x2 upsampler.
struct Taps {
  std::vector<int> lo, hi;
  std::vector<double> frac;
};

Taps upsample_taps(int in_extent) {
  const int out_extent = 2 * in_extent;
  Taps t;
  t.lo.resize(out_extent);
  t.hi.resize(out_extent);
  t.frac.resize(out_extent);
  for (int o = 0; o < out_extent; ++o) {
    double src = (o + 0.5) / 2.0 - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in_extent - 1));
    const int lo = static_cast<int>(std::floor(src));
    t.lo[o] = lo;
    t.hi[o] = std::min(lo + 1, in_extent - 1);
    t.frac[o] = src - lo;
  }
  return t;
}

}  // namespace

template <typename T>
Tensor<T> upsample_bilinear_x2(const Tensor<T>& x) {
  const int H = x.h(), W = x.w(), OH = 2 * H, OW = 2 * W;
  const Taps ty = upsample_taps(H);
  const Taps tx = upsample_taps(W);
  Tensor<T> out(Shape{x.n(), x.c(), OH, OW});
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      const T* p = x.plane(n, c);
      T* o = out.plane(n, c);
      for (int oy = 0; oy < OH; ++oy) {
        const T* r0 = p + static_cast<std::size_t>(ty.lo[oy]) * W;
        const T* r1 = p + static_cast<std::size_t>(ty.hi[oy]) * W;
        const T fy = static_cast<T>(ty.frac[oy]);
        T* orow = o + static_cast<std::size_t>(oy) * OW;
        for (int ox = 0; ox < OW; ++ox) {
          const T fx = static_cast<T>(tx.frac[ox]);
          // Lerp form keeps constant inputs exactly constant.
          const T top = r0[tx.lo[ox]] + fx * (r0[tx.hi[ox]] - r0[tx.lo[ox]]);
          const T bot = r1[tx.lo[ox]] + fx * (r1[tx.hi[ox]] - r1[tx.lo[ox]]);
          orow[ox] = top + fy * (bot - top);
        }
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> upsample_bilinear_x2_backward(const Tensor<T>& grad_out) {
  if (grad_out.h() % 2 != 0 || grad_out.w() % 2 != 0) {
    throw ConfigError("upsample_backward: gradient extents must be even, got " +
                      grad_out.shape().to_string());
  }
  const int H = grad_out.h() / 2, W = grad_out.w() / 2;
  const int OH = grad_out.h(), OW = grad_out.w();
  const Taps ty = upsample_taps(H);
  const Taps tx = upsample_taps(W);
  Tensor<T> g(Shape{grad_out.n(), grad_out.c(), H, W});
  for (int n = 0; n < g.n(); ++n) {
    for (int c = 0; c < g.c(); ++c) {
      const T* gp = grad_out.plane(n, c);
      T* p = g.plane(n, c);
      for (int oy = 0; oy < OH; ++oy) {
        T* r0 = p + static_cast<std::size_t>(ty.lo[oy]) * W;
        T* r1 = p + static_cast<std::size_t>(ty.hi[oy]) * W;
        const T fy = static_cast<T>(ty.frac[oy]);
        const T* grow = gp + static_cast<std::size_t>(oy) * OW;
        for (int ox = 0; ox < OW; ++ox) {
          const T fx = static_cast<T>(tx.frac[ox]);
          const T v = grow[ox];
          r0[tx.lo[ox]] += v * (T(1) - fy) * (T(1) - fx);
          r0[tx.hi[ox]] += v * (T(1) - fy) * fx;
          r1[tx.lo[ox]] += v * fy * (T(1) - fx);
          r1[tx.hi[ox]] += v * fy * fx;
        }
      }
    }
  }
  return g;
}

#define FPENET_INSTANTIATE_OPS(T)                                             \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&,              \
                            const Tensor<T>*, const ConvSpec&);              \
  template ConvGrads<T> conv2d_backward(const Tensor<T>&, const Tensor<T>&,  \
                                        const Tensor<T>&, const ConvSpec&);  \
  template BatchNormTrainResult<T> batch_norm_train(                         \
      const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);              \
  template Tensor<T> batch_norm_infer(const Tensor<T>&, const Tensor<T>&,    \
                                      const Tensor<T>&, const Tensor<T>&,    \
                                      const Tensor<T>&, T);                  \
  template BatchNormGrads<T> batch_norm_train_backward(                      \
      const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,                  \
      const Tensor<T>&);                                                     \
  template BatchNormGrads<T> batch_norm_infer_backward(                      \
      const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,                  \
      const Tensor<T>&, T, const Tensor<T>&);                                \
  template Tensor<T> relu(const Tensor<T>&);                                 \
  template Tensor<T> relu_backward(const Tensor<T>&, const Tensor<T>&);      \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                \
  template Tensor<T> mul_broadcast(const Tensor<T>&, const Tensor<T>&);      \
  template std::pair<Tensor<T>, Tensor<T>> mul_broadcast_backward(           \
      const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                 \
  template Tensor<T> concat_channels(const std::vector<const Tensor<T>*>&);  \
  template Tensor<T> concat_channels(const std::vector<Tensor<T>>&);         \
  template std::vector<Tensor<T>> split_channels(const Tensor<T>&, int);     \
  template Tensor<T> global_avg_pool(const Tensor<T>&);                      \
  template Tensor<T> global_avg_pool_backward(const Tensor<T>&, int, int);   \
  template Tensor<T> channel_mean(const Tensor<T>&);                         \
  template Tensor<T> channel_mean_backward(const Tensor<T>&, int);           \
  template Tensor<T> upsample_bilinear_x2(const Tensor<T>&);                 \
  template Tensor<T> upsample_bilinear_x2_backward(const Tensor<T>&);

FPENET_INSTANTIATE_OPS(float)
FPENET_INSTANTIATE_OPS(double)

#undef FPENET_INSTANTIATE_OPS

}  // namespace ops

template struct BatchNormState<float>;
template struct BatchNormState<double>;

}  // namespace fpenet
