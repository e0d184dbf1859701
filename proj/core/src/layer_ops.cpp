// Copyright 2026 The fedkd Authors
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

#include "layer_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fedkd::ops {

namespace {

// Leading padding under "same" semantics: the extra row/column goes last.
std::size_t same_pad_before(std::size_t in, std::size_t out, std::size_t k,
                            std::size_t stride) {
  const std::size_t needed = (out - 1) * stride + k;
  return needed > in ? (needed - in) / 2 : 0;
}

struct ConvGeometry {
  std::size_t n, h, w, cin, ho, wo, cout, k, stride;
  std::ptrdiff_t pad_top, pad_left;
};

ConvGeometry geometry(const Shape& in, const Shape& out, const Conv2D& c) {
  ConvGeometry g{};
  g.n = in[0];
  g.h = in[1];
  g.w = in[2];
  g.cin = in[3];
  g.ho = out[1];
  g.wo = out[2];
  g.cout = out[3];
  g.k = c.kernel;
  g.stride = c.stride;
  if (c.padding == Padding::kSame) {
    g.pad_top = static_cast<std::ptrdiff_t>(same_pad_before(g.h, g.ho, g.k, g.stride));
    g.pad_left = static_cast<std::ptrdiff_t>(same_pad_before(g.w, g.wo, g.k, g.stride));
  }
  return g;
}

}  // namespace

Tensor conv2d_forward(const Tensor& in, const Tensor& kernel, const Tensor& bias,
                      const Conv2D& c, const Shape& out_sample) {
  Tensor out({in.dim(0), out_sample[0], out_sample[1], out_sample[2]});
  const ConvGeometry g = geometry(in.shape(), out.shape(), c);
  const double* x = in.raw();
  const double* wk = kernel.raw();
  double* y = out.raw();
  for (std::size_t n = 0; n < g.n; ++n) {
    for (std::size_t oy = 0; oy < g.ho; ++oy) {
      for (std::size_t ox = 0; ox < g.wo; ++ox) {
        double* yp = y + ((n * g.ho + oy) * g.wo + ox) * g.cout;
        std::copy(bias.raw(), bias.raw() + g.cout, yp);
        for (std::size_t ky = 0; ky < g.k; ++ky) {
          const std::ptrdiff_t iy =
              static_cast<std::ptrdiff_t>(oy * g.stride + ky) - g.pad_top;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
          for (std::size_t kx = 0; kx < g.k; ++kx) {
            const std::ptrdiff_t ix =
                static_cast<std::ptrdiff_t>(ox * g.stride + kx) - g.pad_left;
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) continue;
            const double* xp = x + ((n * g.h + iy) * g.w + ix) * g.cin;
            const double* wp = wk + (ky * g.k + kx) * g.cin * g.cout;
            for (std::size_t ci = 0; ci < g.cin; ++ci) {
              const double v = xp[ci];
              const double* wrow = wp + ci * g.cout;
              for (std::size_t co = 0; co < g.cout; ++co) yp[co] += v * wrow[co];
            }
          }
        }
      }
    }
  }
  return out;
}

Tensor conv2d_backward(const Tensor& in, const Tensor& kernel, const Tensor& dout,
                       const Conv2D& c, Tensor& dkernel, Tensor& dbias) {
  Tensor din(in.shape());
  const ConvGeometry g = geometry(in.shape(), dout.shape(), c);
  const double* x = in.raw();
  const double* wk = kernel.raw();
  const double* dy = dout.raw();
  double* dx = din.raw();
  double* dw = dkernel.raw();
  double* db = dbias.raw();
  for (std::size_t n = 0; n < g.n; ++n) {
    for (std::size_t oy = 0; oy < g.ho; ++oy) {
      for (std::size_t ox = 0; ox < g.wo; ++ox) {
        const double* dyp = dy + ((n * g.ho + oy) * g.wo + ox) * g.cout;
        for (std::size_t co = 0; co < g.cout; ++co) db[co] += dyp[co];
        for (std::size_t ky = 0; ky < g.k; ++ky) {
          const std::ptrdiff_t iy =
              static_cast<std::ptrdiff_t>(oy * g.stride + ky) - g.pad_top;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
          for (std::size_t kx = 0; kx < g.k; ++kx) {
            const std::ptrdiff_t ix =
                static_cast<std::ptrdiff_t>(ox * g.stride + kx) - g.pad_left;
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) continue;
            const std::size_t in_off = ((n * g.h + iy) * g.w + ix) * g.cin;
            const std::size_t w_off = (ky * g.k + kx) * g.cin * g.cout;
            for (std::size_t ci = 0; ci < g.cin; ++ci) {
              const double v = x[in_off + ci];
              const double* wrow = wk + w_off + ci * g.cout;
              double* dwrow = dw + w_off + ci * g.cout;
              double acc = 0.0;
              for (std::size_t co = 0; co < g.cout; ++co) {
                dwrow[co] += v * dyp[co];
                acc += wrow[co] * dyp[co];
              }
              dx[in_off + ci] += acc;
            }
          }
        }
      }
    }
  }
  return din;
}

void batch_moments(const Tensor& in, std::vector<double>& mean,
                   std::vector<double>& variance) {
  const std::size_t ch = in.shape().back();
  const std::size_t rows = in.size() / ch;
  mean.assign(ch, 0.0);
  variance.assign(ch, 0.0);
  const double* x = in.raw();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < ch; ++c) mean[c] += x[r * ch + c];
  }
  for (double& m : mean) m /= static_cast<double>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < ch; ++c) {
      const double d = x[r * ch + c] - mean[c];
      variance[c] += d * d;
    }
  }
  for (double& v : variance) v /= static_cast<double>(rows);
}

Tensor batchnorm_forward(const Tensor& in, const Tensor& gamma, const Tensor& beta,
                         const std::vector<double>& mean,
                         const std::vector<double>& variance, double epsilon,
                         BatchNormCache* cache) {
  const std::size_t ch = in.shape().back();
  const std::size_t rows = in.size() / ch;
  std::vector<double> inv_std(ch);
  for (std::size_t c = 0; c < ch; ++c) inv_std[c] = 1.0 / std::sqrt(variance[c] + epsilon);
  Tensor out(in.shape());
  Tensor normalized(in.shape());
  const double* x = in.raw();
  double* y = out.raw();
  double* xh = normalized.raw();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < ch; ++c) {
      const std::size_t i = r * ch + c;
      xh[i] = (x[i] - mean[c]) * inv_std[c];
      y[i] = gamma[c] * xh[i] + beta[c];
    }
  }
  if (cache != nullptr) {
    cache->mean = mean;
    cache->inv_std = std::move(inv_std);
    cache->normalized = std::move(normalized);
  }
  return out;
}

Tensor batchnorm_backward(const Tensor& dout, const Tensor& gamma,
                          const BatchNormCache& cache, bool batch_stats,
                          Tensor& dgamma, Tensor& dbeta) {
  const std::size_t ch = dout.shape().back();
  const std::size_t rows = dout.size() / ch;
  const double* dy = dout.raw();
  const double* xh = cache.normalized.raw();
  std::vector<double> sum_dy(ch, 0.0);
  std::vector<double> sum_dy_xh(ch, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < ch; ++c) {
      const std::size_t i = r * ch + c;
      sum_dy[c] += dy[i];
      sum_dy_xh[c] += dy[i] * xh[i];
    }
  }
  for (std::size_t c = 0; c < ch; ++c) {
    dgamma[c] += sum_dy_xh[c];
    dbeta[c] += sum_dy[c];
  }
  Tensor din(dout.shape());
  double* dx = din.raw();
  const double m = static_cast<double>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < ch; ++c) {
      const std::size_t i = r * ch + c;
      const double scale = gamma[c] * cache.inv_std[c];
      if (batch_stats) {
        dx[i] = scale * (dy[i] - sum_dy[c] / m - xh[i] * sum_dy_xh[c] / m);
      } else {
        dx[i] = scale * dy[i];
      }
    }
  }
  return din;
}

Tensor leaky_relu_forward(const Tensor& in, double slope) {
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = in[i] > 0.0 ? in[i] : slope * in[i];
  }
  return out;
}

Tensor leaky_relu_backward(const Tensor& in, const Tensor& dout, double slope) {
  Tensor din(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) {
    din[i] = in[i] > 0.0 ? dout[i] : slope * dout[i];
  }
  return din;
}

Tensor maxpool_forward(const Tensor& in, const MaxPool2D& p, const Shape& out_sample,
                       std::vector<std::size_t>* argmax) {
  const std::size_t n = in.dim(0), h = in.dim(1), w = in.dim(2), ch = in.dim(3);
  const std::size_t ho = out_sample[0], wo = out_sample[1];
  Tensor out({n, ho, wo, ch});
  if (argmax != nullptr) argmax->assign(out.size(), 0);
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t oy = 0; oy < ho; ++oy) {
      const std::size_t y0 = oy * p.stride;
      const std::size_t y1 = std::min(y0 + p.window, h);
      for (std::size_t ox = 0; ox < wo; ++ox) {
        const std::size_t x0 = ox * p.stride;
        const std::size_t x1 = std::min(x0 + p.window, w);
        const std::size_t o = ((b * ho + oy) * wo + ox) * ch;
        for (std::size_t c = 0; c < ch; ++c) {
          double best = -std::numeric_limits<double>::infinity();
          std::size_t best_i = 0;
          for (std::size_t y = y0; y < y1; ++y) {
            for (std::size_t x = x0; x < x1; ++x) {
              const std::size_t i = ((b * h + y) * w + x) * ch + c;
              if (in[i] > best) {
                best = in[i];
                best_i = i;
              }
            }
          }
          out[o + c] = best;
          if (argmax != nullptr) (*argmax)[o + c] = best_i;
        }
      }
    }
  }
  return out;
}

Tensor maxpool_backward(const Shape& in_shape, const Tensor& dout,
                        const std::vector<std::size_t>& argmax) {
  Tensor din(in_shape);
  for (std::size_t i = 0; i < dout.size(); ++i) din[argmax[i]] += dout[i];
  return din;
}

Tensor global_avg_pool_forward(const Tensor& in) {
  const std::size_t n = in.dim(0), ch = in.dim(3);
  const std::size_t area = in.dim(1) * in.dim(2);
  Tensor out({n, ch});
  for (std::size_t b = 0; b < n; ++b) {
    const double* x = in.raw() + b * area * ch;
    double* y = out.raw() + b * ch;
    for (std::size_t a = 0; a < area; ++a) {
      for (std::size_t c = 0; c < ch; ++c) y[c] += x[a * ch + c];
    }
    for (std::size_t c = 0; c < ch; ++c) y[c] /= static_cast<double>(area);
  }
  return out;
}

Tensor global_avg_pool_backward(const Shape& in_shape, const Tensor& dout) {
  Tensor din(in_shape);
  const std::size_t n = in_shape[0], ch = in_shape[3];
  const std::size_t area = in_shape[1] * in_shape[2];
  const double inv = 1.0 / static_cast<double>(area);
  for (std::size_t b = 0; b < n; ++b) {
    double* dx = din.raw() + b * area * ch;
    const double* dy = dout.raw() + b * ch;
    for (std::size_t a = 0; a < area; ++a) {
      for (std::size_t c = 0; c < ch; ++c) dx[a * ch + c] = dy[c] * inv;
    }
  }
  return din;
}

Tensor dense_forward(const Tensor& in, const Tensor& kernel, const Tensor& bias) {
  const std::size_t n = in.dim(0);
  const std::size_t f = in.size() / n;
  const std::size_t u = kernel.dim(1);
  Tensor out({n, u});
  for (std::size_t b = 0; b < n; ++b) {
    double* y = out.raw() + b * u;
    std::copy(bias.raw(), bias.raw() + u, y);
    const double* x = in.raw() + b * f;
    for (std::size_t i = 0; i < f; ++i) {
      const double v = x[i];
      const double* wrow = kernel.raw() + i * u;
      for (std::size_t j = 0; j < u; ++j) y[j] += v * wrow[j];
    }
  }
  return out;
}

Tensor dense_backward(const Tensor& in, const Tensor& kernel, const Tensor& dout,
                      Tensor& dkernel, Tensor& dbias) {
  const std::size_t n = in.dim(0);
  const std::size_t f = in.size() / n;
  const std::size_t u = kernel.dim(1);
  Tensor din(in.shape());
  for (std::size_t b = 0; b < n; ++b) {
    const double* x = in.raw() + b * f;
    const double* dy = dout.raw() + b * u;
    double* dx = din.raw() + b * f;
    for (std::size_t j = 0; j < u; ++j) dbias[j] += dy[j];
    for (std::size_t i = 0; i < f; ++i) {
      const double* wrow = kernel.raw() + i * u;
      double* dwrow = dkernel.raw() + i * u;
      double acc = 0.0;
      for (std::size_t j = 0; j < u; ++j) {
        dwrow[j] += x[i] * dy[j];
        acc += wrow[j] * dy[j];
      }
      dx[i] = acc;
    }
  }
  return din;
}

}  // namespace fedkd::ops
