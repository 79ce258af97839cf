#include "recurnet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace recurnet::ops {

namespace {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using MatMap = Eigen::Map<RowMatrix<Scalar>>;
template <typename Scalar>
using ConstMatMap = Eigen::Map<const RowMatrix<Scalar>>;

using Index = Eigen::Index;

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

struct ConvGeometry {
  Index batch, in_channels, height, width;
  Index out_channels, kernel_h, kernel_w;
  Index out_h, out_w;
  int stride, padding, dilation;

  Index patch() const { return in_channels * kernel_h * kernel_w; }
  Index out_pixels() const { return out_h * out_w; }
};

// col is (C*KH*KW) x (OH*OW), row-major.
template <typename Scalar>
void im2col(const Scalar* image, const ConvGeometry& g, Scalar* col) {
  const Index cols = g.out_pixels();
  Index row = 0;
  for (Index c = 0; c < g.in_channels; ++c) {
    const Scalar* plane = image + c * g.height * g.width;
    for (Index kh = 0; kh < g.kernel_h; ++kh) {
      for (Index kw = 0; kw < g.kernel_w; ++kw, ++row) {
        Scalar* dst = col + row * cols;
        for (Index oh = 0; oh < g.out_h; ++oh) {
          const Index ih = oh * g.stride - g.padding + kh * g.dilation;
          Scalar* out = dst + oh * g.out_w;
          if (ih < 0 || ih >= g.height) {
            std::fill(out, out + g.out_w, Scalar(0));
            continue;
          }
          const Scalar* src = plane + ih * g.width;
          for (Index ow = 0; ow < g.out_w; ++ow) {
            const Index iw = ow * g.stride - g.padding + kw * g.dilation;
            out[ow] = (iw >= 0 && iw < g.width) ? src[iw] : Scalar(0);
          }
        }
      }
    }
  }
}

template <typename Scalar>
void col2im_add(const Scalar* col, const ConvGeometry& g, Scalar* image) {
  const Index cols = g.out_pixels();
  Index row = 0;
  for (Index c = 0; c < g.in_channels; ++c) {
    Scalar* plane = image + c * g.height * g.width;
    for (Index kh = 0; kh < g.kernel_h; ++kh) {
      for (Index kw = 0; kw < g.kernel_w; ++kw, ++row) {
        const Scalar* src = col + row * cols;
        for (Index oh = 0; oh < g.out_h; ++oh) {
          const Index ih = oh * g.stride - g.padding + kh * g.dilation;
          if (ih < 0 || ih >= g.height) continue;
          Scalar* dst = plane + ih * g.width;
          const Scalar* in = src + oh * g.out_w;
          for (Index ow = 0; ow < g.out_w; ++ow) {
            const Index iw = ow * g.stride - g.padding + kw * g.dilation;
            if (iw >= 0 && iw < g.width) dst[iw] += in[ow];
          }
        }
      }
    }
  }
}

template <typename Scalar>
Tensor<Scalar> finish(Tensor<Scalar> out, const char* name) {
  out.check_finite(name);
  return out;
}

}  // namespace

int conv_output_extent(int input, int kernel, const Conv2dParams& p) {
  const int span = input + 2 * p.padding - p.dilation * (kernel - 1) - 1;
  if (span < 0) return 0;
  return span / p.stride + 1;
}

template <typename Scalar>
Tensor<Scalar> conv2d(Tape<Scalar>* tape, const Tensor<Scalar>& input, const Tensor<Scalar>& weight,
                      const Tensor<Scalar>& bias, const Conv2dParams& params) {
  require(params.stride > 0, "conv2d: stride must be positive, got " + std::to_string(params.stride));
  require(params.dilation > 0, "conv2d: dilation must be positive, got " + std::to_string(params.dilation));
  require(params.padding >= 0, "conv2d: padding must be nonnegative, got " + std::to_string(params.padding));
  require(input.rank() == 4, "conv2d: input must be NCHW, got " + shape_to_string(input.shape()));
  require(weight.rank() == 4, "conv2d: weight must be OIKK, got " + shape_to_string(weight.shape()));
  require(input.dim(1) == weight.dim(1),
          "conv2d: input has " + std::to_string(input.dim(1)) + " channels but weight expects " +
              std::to_string(weight.dim(1)) + " (input " + shape_to_string(input.shape()) + ", weight " +
              shape_to_string(weight.shape()) + ")");
  if (bias.defined())
    require(bias.rank() == 1 && bias.dim(0) == weight.dim(0),
            "conv2d: bias shape " + shape_to_string(bias.shape()) + " does not match " +
                std::to_string(weight.dim(0)) + " output channels");

  ConvGeometry g{};
  g.batch = static_cast<Index>(input.dim(0));
  g.in_channels = static_cast<Index>(input.dim(1));
  g.height = static_cast<Index>(input.dim(2));
  g.width = static_cast<Index>(input.dim(3));
  g.out_channels = static_cast<Index>(weight.dim(0));
  g.kernel_h = static_cast<Index>(weight.dim(2));
  g.kernel_w = static_cast<Index>(weight.dim(3));
  g.stride = params.stride;
  g.padding = params.padding;
  g.dilation = params.dilation;
  g.out_h = conv_output_extent(static_cast<int>(g.height), static_cast<int>(g.kernel_h), params);
  g.out_w = conv_output_extent(static_cast<int>(g.width), static_cast<int>(g.kernel_w), params);
  require(g.out_h > 0 && g.out_w > 0,
          "conv2d: input " + shape_to_string(input.shape()) + " with padding " +
              std::to_string(params.padding) + " admits no placement of kernel " +
              shape_to_string(weight.shape()) + " at dilation " + std::to_string(params.dilation));

  Tensor<Scalar> out({static_cast<std::size_t>(g.batch), static_cast<std::size_t>(g.out_channels),
                      static_cast<std::size_t>(g.out_h), static_cast<std::size_t>(g.out_w)});
  RowMatrix<Scalar> col(g.patch(), g.out_pixels());
  ConstMatMap<Scalar> w(weight.data(), g.out_channels, g.patch());
  const Index in_stride = g.in_channels * g.height * g.width;
  const Index out_stride = g.out_channels * g.out_pixels();
  for (Index n = 0; n < g.batch; ++n) {
    im2col(input.data() + n * in_stride, g, col.data());
    MatMap<Scalar> y(out.data() + n * out_stride, g.out_channels, g.out_pixels());
    y.noalias() = w * col;
    if (bias.defined()) y.colwise() += bias.value();
  }

  if (tape && Tape<Scalar>::needs_record({&input, &weight, &bias})) {
    tape->record({input, weight, bias}, out, [input = Tensor<Scalar>(input), weight = Tensor<Scalar>(weight), bias = Tensor<Scalar>(bias), out, g]() mutable {
      RowMatrix<Scalar> col(g.patch(), g.out_pixels());
      RowMatrix<Scalar> dcol(g.patch(), g.out_pixels());
      ConstMatMap<Scalar> w(weight.data(), g.out_channels, g.patch());
      const Index in_stride = g.in_channels * g.height * g.width;
      const Index out_stride = g.out_channels * g.out_pixels();
      const bool want_input = input.tracks_grad();
      const bool want_weight = weight.tracks_grad();
      const bool want_bias = bias.defined() && bias.tracks_grad();
      for (Index n = 0; n < g.batch; ++n) {
        ConstMatMap<Scalar> dy(out.grad().data() + n * out_stride, g.out_channels, g.out_pixels());
        if (want_weight) {
          im2col(input.data() + n * in_stride, g, col.data());
          MatMap<Scalar> dw(weight.grad().data(), g.out_channels, g.patch());
          dw.noalias() += dy * col.transpose();
        }
        if (want_bias) bias.grad() += dy.rowwise().sum();
        if (want_input) {
          dcol.noalias() = w.transpose() * dy;
          col2im_add(dcol.data(), g, input.grad().data() + n * in_stride);
        }
      }
    });
  }
  return finish(std::move(out), "conv2d");
}

template <typename Scalar>
Tensor<Scalar> linear(Tape<Scalar>* tape, const Tensor<Scalar>& input, const Tensor<Scalar>& weight,
                      const Tensor<Scalar>& bias) {
  require(input.rank() == 2, "linear: input must be NxF, got " + shape_to_string(input.shape()));
  require(weight.rank() == 2, "linear: weight must be FxG, got " + shape_to_string(weight.shape()));
  require(input.dim(1) == weight.dim(0), "linear: input " + shape_to_string(input.shape()) +
                                             " incompatible with weight " + shape_to_string(weight.shape()));
  if (bias.defined())
    require(bias.rank() == 1 && bias.dim(0) == weight.dim(1),
            "linear: bias " + shape_to_string(bias.shape()) + " does not match weight " +
                shape_to_string(weight.shape()));
  const Index n = static_cast<Index>(input.dim(0));
  const Index f = static_cast<Index>(input.dim(1));
  const Index gdim = static_cast<Index>(weight.dim(1));
  Tensor<Scalar> out({input.dim(0), weight.dim(1)});
  MatMap<Scalar> y(out.data(), n, gdim);
  y.noalias() = ConstMatMap<Scalar>(input.data(), n, f) * ConstMatMap<Scalar>(weight.data(), f, gdim);
  if (bias.defined()) y.rowwise() += bias.value().transpose();

  if (tape && Tape<Scalar>::needs_record({&input, &weight, &bias})) {
    tape->record({input, weight, bias}, out, [input = Tensor<Scalar>(input), weight = Tensor<Scalar>(weight), bias = Tensor<Scalar>(bias), out, n, f, gdim]() mutable {
      ConstMatMap<Scalar> dy(out.grad().data(), n, gdim);
      if (input.tracks_grad())
        MatMap<Scalar>(input.grad().data(), n, f).noalias() +=
            dy * ConstMatMap<Scalar>(weight.data(), f, gdim).transpose();
      if (weight.tracks_grad())
        MatMap<Scalar>(weight.grad().data(), f, gdim).noalias() +=
            ConstMatMap<Scalar>(input.data(), n, f).transpose() * dy;
      if (bias.defined() && bias.tracks_grad()) bias.grad() += dy.colwise().sum().transpose();
    });
  }
  return finish(std::move(out), "linear");
}

template <typename Scalar>
Tensor<Scalar> relu(Tape<Scalar>* tape, const Tensor<Scalar>& input) {
  Tensor<Scalar> out(input.shape(), input.value().cwiseMax(Scalar(0)));
  if (tape && Tape<Scalar>::needs_record({&input})) {
    tape->record({input}, out, [input = Tensor<Scalar>(input), out]() mutable {
      input.grad().array() +=
          (input.value().array() > Scalar(0)).select(out.grad().array(), Scalar(0));
    });
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> add(Tape<Scalar>* tape, const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  require(a.shape() == b.shape(),
          "add: shape mismatch " + shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
  Tensor<Scalar> out(a.shape(), a.value() + b.value());
  if (tape && Tape<Scalar>::needs_record({&a, &b})) {
    tape->record({a, b}, out, [a = Tensor<Scalar>(a), b = Tensor<Scalar>(b), out]() mutable {
      if (a.tracks_grad()) a.grad() += out.grad();
      if (b.tracks_grad()) b.grad() += out.grad();
    });
  }
  return finish(std::move(out), "add");
}

template <typename Scalar>
Tensor<Scalar> mul(Tape<Scalar>* tape, const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  require(a.shape() == b.shape(),
          "mul: shape mismatch " + shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
  Tensor<Scalar> out(a.shape(), a.value().cwiseProduct(b.value()));
  if (tape && Tape<Scalar>::needs_record({&a, &b})) {
    tape->record({a, b}, out, [a = Tensor<Scalar>(a), b = Tensor<Scalar>(b), out]() mutable {
      if (a.tracks_grad()) a.grad() += out.grad().cwiseProduct(b.value());
      if (b.tracks_grad()) b.grad() += out.grad().cwiseProduct(a.value());
    });
  }
  return finish(std::move(out), "mul");
}

template <typename Scalar>
Tensor<Scalar> sum(Tape<Scalar>* tape, const Tensor<Scalar>& input) {
  Tensor<Scalar> out(Shape{});
  out[0] = input.value().sum();
  if (tape && Tape<Scalar>::needs_record({&input})) {
    tape->record({input}, out, [input = Tensor<Scalar>(input), out]() mutable { input.grad().array() += out.grad()[0]; });
  }
  return finish(std::move(out), "sum");
}

template <typename Scalar>
Tensor<Scalar> reshape(Tape<Scalar>* tape, const Tensor<Scalar>& input, Shape shape) {
  require(shape_numel(shape) == input.numel(), "reshape: cannot view " + shape_to_string(input.shape()) +
                                                   " as " + shape_to_string(shape));
  Tensor<Scalar> out(std::move(shape), input.value());
  if (tape && Tape<Scalar>::needs_record({&input})) {
    tape->record({input}, out, [input = Tensor<Scalar>(input), out]() mutable { input.grad() += out.grad(); });
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> pool2d(Tape<Scalar>* tape, const Tensor<Scalar>& input, PoolKind kind, int window,
                      int stride) {
  require(window > 0 && stride > 0, "pool2d: window and stride must be positive");
  require(input.rank() == 4, "pool2d: input must be NCHW, got " + shape_to_string(input.shape()));
  const Index planes = static_cast<Index>(input.dim(0) * input.dim(1));
  const Index h = static_cast<Index>(input.dim(2));
  const Index w = static_cast<Index>(input.dim(3));
  require(h >= window && w >= window, "pool2d: window " + std::to_string(window) +
                                          " larger than input " + shape_to_string(input.shape()));
  const Index oh = (h - window) / stride + 1;
  const Index ow = (w - window) / stride + 1;
  Tensor<Scalar> out({input.dim(0), input.dim(1), static_cast<std::size_t>(oh), static_cast<std::size_t>(ow)});
  std::vector<Index> argmax;
  if (kind == PoolKind::max) argmax.resize(static_cast<std::size_t>(out.numel()));
  const Scalar inv_area = Scalar(1) / Scalar(window * window);
  const Scalar* x = input.data();
  Scalar* y = out.data();
  for (Index p = 0; p < planes; ++p) {
    for (Index i = 0; i < oh; ++i) {
      for (Index j = 0; j < ow; ++j) {
        const Index o = (p * oh + i) * ow + j;
        if (kind == PoolKind::max) {
          Index best = p * h * w + (i * stride) * w + j * stride;
          for (Index di = 0; di < window; ++di)
            for (Index dj = 0; dj < window; ++dj) {
              const Index k = p * h * w + (i * stride + di) * w + (j * stride + dj);
              if (x[k] > x[best]) best = k;
            }
          argmax[static_cast<std::size_t>(o)] = best;
          y[o] = x[best];
        } else {
          Scalar acc = 0;
          for (Index di = 0; di < window; ++di)
            for (Index dj = 0; dj < window; ++dj) acc += x[p * h * w + (i * stride + di) * w + (j * stride + dj)];
          y[o] = acc * inv_area;
        }
      }
    }
  }
  if (tape && Tape<Scalar>::needs_record({&input})) {
    tape->record({input}, out,
                 [input = Tensor<Scalar>(input), out, kind, window, stride, planes, h, w, oh, ow, inv_area, argmax = std::move(argmax)]() mutable {
                   Scalar* dx = input.grad().data();
                   const Scalar* dy = out.grad().data();
                   for (Index p = 0; p < planes; ++p)
                     for (Index i = 0; i < oh; ++i)
                       for (Index j = 0; j < ow; ++j) {
                         const Index o = (p * oh + i) * ow + j;
                         if (kind == PoolKind::max) {
                           dx[argmax[static_cast<std::size_t>(o)]] += dy[o];
                         } else {
                           for (Index di = 0; di < window; ++di)
                             for (Index dj = 0; dj < window; ++dj)
                               dx[p * h * w + (i * stride + di) * w + (j * stride + dj)] += dy[o] * inv_area;
                         }
                       }
                 });
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> batch_norm(Tape<Scalar>* tape, const Tensor<Scalar>& input, NormStats<Scalar>& stats,
                          const Tensor<Scalar>& gamma, const Tensor<Scalar>& beta, NormMode mode) {
  require(input.rank() == 4, "batch_norm: input must be NCHW, got " + shape_to_string(input.shape()));
  const Index batch = static_cast<Index>(input.dim(0));
  const Index channels = static_cast<Index>(input.dim(1));
  const Index plane = static_cast<Index>(input.dim(2) * input.dim(3));
  require(static_cast<Index>(stats.channels()) == channels && gamma.numel() == input.dim(1) &&
              beta.numel() == input.dim(1),
          "batch_norm: channel count " + std::to_string(channels) + " does not match stats/gamma/beta");
  if (mode == NormMode::eval && !stats.populated)
    throw ShapeError("batch_norm: eval mode on statistics that were never trained");

  using Buffer = typename NormStats<Scalar>::Buffer;
  const Index count = batch * plane;
  Buffer mean(channels), inv_std(channels);
  const Scalar* x = input.data();
  if (mode == NormMode::train) {
    Buffer var(channels);
    for (Index c = 0; c < channels; ++c) {
      // Shifted moments: exact for constant channels.
      const Scalar shift = x[c * plane];
      Scalar s = 0, s2 = 0;
      for (Index n = 0; n < batch; ++n) {
        const Scalar* p = x + (n * channels + c) * plane;
        for (Index k = 0; k < plane; ++k) {
          const Scalar d = p[k] - shift;
          s += d;
          s2 += d * d;
        }
      }
      const Scalar m = s / Scalar(count);
      mean[c] = shift + m;
      var[c] = std::max(Scalar(0), s2 / Scalar(count) - m * m);
    }
    inv_std = (var.array() + stats.epsilon).rsqrt().matrix();
    const Scalar unbias = count > 1 ? Scalar(count) / Scalar(count - 1) : Scalar(1);
    stats.running_mean = (Scalar(1) - stats.momentum) * stats.running_mean + stats.momentum * mean;
    stats.running_var = (Scalar(1) - stats.momentum) * stats.running_var + stats.momentum * unbias * var;
    stats.populated = true;
  } else {
    mean = stats.running_mean;
    inv_std = (stats.running_var.array() + stats.epsilon).rsqrt().matrix();
  }

  Tensor<Scalar> out(input.shape());
  Tensor<Scalar> normalized(input.shape());
  Scalar* y = out.data();
  Scalar* xhat = normalized.data();
  for (Index n = 0; n < batch; ++n)
    for (Index c = 0; c < channels; ++c) {
      const Index base = (n * channels + c) * plane;
      for (Index k = 0; k < plane; ++k) {
        xhat[base + k] = (x[base + k] - mean[c]) * inv_std[c];
        y[base + k] = gamma[static_cast<std::size_t>(c)] * xhat[base + k] + beta[static_cast<std::size_t>(c)];
      }
    }

  if (tape && Tape<Scalar>::needs_record({&input, &gamma, &beta})) {
    tape->record({input, gamma, beta}, out,
                 [input = Tensor<Scalar>(input), gamma = Tensor<Scalar>(gamma), beta = Tensor<Scalar>(beta), out, normalized, inv_std, mode, batch, channels, plane, count]() mutable {
                   const Scalar* dy = out.grad().data();
                   const Scalar* xhat = normalized.data();
                   for (Index c = 0; c < channels; ++c) {
                     Scalar sum_dy = 0, sum_dy_xhat = 0;
                     for (Index n = 0; n < batch; ++n) {
                       const Index base = (n * channels + c) * plane;
                       for (Index k = 0; k < plane; ++k) {
                         sum_dy += dy[base + k];
                         sum_dy_xhat += dy[base + k] * xhat[base + k];
                       }
                     }
                     if (gamma.tracks_grad()) gamma.grad()[c] += sum_dy_xhat;
                     if (beta.tracks_grad()) beta.grad()[c] += sum_dy;
                     if (!input.tracks_grad()) continue;
                     const Scalar g = gamma[static_cast<std::size_t>(c)];
                     Scalar* dx = input.grad().data();
                     for (Index n = 0; n < batch; ++n) {
                       const Index base = (n * channels + c) * plane;
                       for (Index k = 0; k < plane; ++k) {
                         if (mode == NormMode::train) {
                           dx[base + k] += g * inv_std[c] / Scalar(count) *
                                           (Scalar(count) * dy[base + k] - sum_dy - xhat[base + k] * sum_dy_xhat);
                         } else {
                           dx[base + k] += g * inv_std[c] * dy[base + k];
                         }
                       }
                     }
                   }
                 });
  }
  return finish(std::move(out), "batch_norm");
}

template <typename Scalar>
Tensor<Scalar> softmax_cross_entropy(Tape<Scalar>* tape, const Tensor<Scalar>& logits,
                                     std::span<const std::int32_t> targets, std::size_t class_axis) {
  require(class_axis < logits.rank(), "softmax_cross_entropy: class axis " + std::to_string(class_axis) +
                                          " out of range for " + shape_to_string(logits.shape()));
  const Shape& s = logits.shape();
  Index outer = 1, inner = 1;
  for (std::size_t a = 0; a < class_axis; ++a) outer *= static_cast<Index>(s[a]);
  for (std::size_t a = class_axis + 1; a < s.size(); ++a) inner *= static_cast<Index>(s[a]);
  const Index classes = static_cast<Index>(s[class_axis]);
  const Index positions = outer * inner;
  require(static_cast<Index>(targets.size()) == positions,
          "softmax_cross_entropy: " + std::to_string(targets.size()) + " targets for " +
              std::to_string(positions) + " positions");
  for (std::size_t i = 0; i < targets.size(); ++i)
    if (targets[i] < 0 || targets[i] >= classes)
      throw ShapeError("softmax_cross_entropy: target " + std::to_string(targets[i]) + " at position " +
                       std::to_string(i) + " out of range for " + std::to_string(classes) + " classes");

  // probabilities stored in logits layout for the backward pass
  Tensor<Scalar> probs(s);
  const Scalar* z = logits.data();
  Scalar* pr = probs.data();
  Scalar total = 0;
  for (Index o = 0; o < outer; ++o)
    for (Index i = 0; i < inner; ++i) {
      const Index base = o * classes * inner + i;
      Scalar zmax = -std::numeric_limits<Scalar>::infinity();
      for (Index c = 0; c < classes; ++c) zmax = std::max(zmax, z[base + c * inner]);
      Scalar denom = 0;
      for (Index c = 0; c < classes; ++c) {
        const Scalar e = std::exp(z[base + c * inner] - zmax);
        pr[base + c * inner] = e;
        denom += e;
      }
      for (Index c = 0; c < classes; ++c) pr[base + c * inner] /= denom;
      const Index t = targets[static_cast<std::size_t>(o * inner + i)];
      total += zmax + std::log(denom) - z[base + t * inner];
    }
  Tensor<Scalar> out(Shape{});
  out[0] = total / Scalar(positions);

  if (tape && Tape<Scalar>::needs_record({&logits})) {
    std::vector<std::int32_t> kept(targets.begin(), targets.end());
    tape->record({logits}, out,
                 [logits = Tensor<Scalar>(logits), out, probs, kept = std::move(kept), outer, inner, classes, positions]() mutable {
                   const Scalar scale = out.grad()[0] / Scalar(positions);
                   Scalar* dz = logits.grad().data();
                   const Scalar* pr = probs.data();
                   for (Index o = 0; o < outer; ++o)
                     for (Index i = 0; i < inner; ++i) {
                       const Index base = o * classes * inner + i;
                       const Index t = kept[static_cast<std::size_t>(o * inner + i)];
                       for (Index c = 0; c < classes; ++c)
                         dz[base + c * inner] += scale * (pr[base + c * inner] - (c == t ? Scalar(1) : Scalar(0)));
                     }
                 });
  }
  return finish(std::move(out), "softmax_cross_entropy");
}

#define RECURNET_INSTANTIATE_OPS(S)                                                                       \
  template Tensor<S> conv2d(Tape<S>*, const Tensor<S>&, const Tensor<S>&, const Tensor<S>&,              \
                            const Conv2dParams&);                                                         \
  template Tensor<S> linear(Tape<S>*, const Tensor<S>&, const Tensor<S>&, const Tensor<S>&);             \
  template Tensor<S> relu(Tape<S>*, const Tensor<S>&);                                                    \
  template Tensor<S> add(Tape<S>*, const Tensor<S>&, const Tensor<S>&);                                   \
  template Tensor<S> mul(Tape<S>*, const Tensor<S>&, const Tensor<S>&);                                   \
  template Tensor<S> sum(Tape<S>*, const Tensor<S>&);                                                     \
  template Tensor<S> reshape(Tape<S>*, const Tensor<S>&, Shape);                                          \
  template Tensor<S> pool2d(Tape<S>*, const Tensor<S>&, PoolKind, int, int);                              \
  template Tensor<S> batch_norm(Tape<S>*, const Tensor<S>&, NormStats<S>&, const Tensor<S>&,             \
                                const Tensor<S>&, NormMode);                                              \
  template Tensor<S> softmax_cross_entropy(Tape<S>*, const Tensor<S>&, std::span<const std::int32_t>,    \
                                           std::size_t);

RECURNET_INSTANTIATE_OPS(float)
RECURNET_INSTANTIATE_OPS(double)

}  // namespace recurnet::ops
