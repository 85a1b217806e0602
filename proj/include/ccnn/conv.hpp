#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "ccnn/error.hpp"
#include "ccnn/tensor.hpp"

namespace ccnn {

// Kernel (out, in, f, f) plus one bias per output channel. f is odd.
template <typename T>
struct ConvParams {
  Tensor<T> kernel;
  std::vector<T> bias;

  ConvParams() = default;
  ConvParams(Tensor<T> k, std::vector<T> b) : kernel(std::move(k)), bias(std::move(b)) { validate(); }

  static ConvParams zeros(std::size_t out_ch, std::size_t in_ch, std::size_t f) {
    return ConvParams(Tensor<T>(out_ch, in_ch, f, f), std::vector<T>(out_ch, T(0)));
  }

  std::size_t out_channels() const { return kernel.n(); }
  std::size_t in_channels() const { return kernel.c(); }
  std::size_t ksize() const { return kernel.h(); }

  void validate() const {
    if (kernel.h() != kernel.w() || kernel.h() % 2 == 0) {
      throw ConfigError("conv kernel must be square with odd size, got " + kernel.shape().str());
    }
    if (bias.size() != kernel.n()) {
      throw ConfigError("conv bias length " + std::to_string(bias.size()) +
                        " does not match out_channels " + std::to_string(kernel.n()));
    }
  }

  friend bool operator==(const ConvParams&, const ConvParams&) = default;
};

template <typename T>
struct ConvGrads {
  Tensor<T> input;
  Tensor<T> kernel;
  std::vector<T> bias;
};

namespace detail {

template <typename T>
void check_conv_input(const Tensor<T>& input, const ConvParams<T>& p) {
  p.validate();
  if (input.c() != p.in_channels()) {
    throw ConfigError("conv2d: input shape " + input.shape().str() + " incompatible with kernel " +
                      p.kernel.shape().str());
  }
}

// Zero-padded layout used by the lowered convolution. Each channel plane is
// (h + 2p + 1) rows of (w + 2p); the extra row lets every tap read a
// contiguous run of h * (w + 2p) values without leaving the plane.
struct PadGeometry {
  std::size_t pad, h, w, hp, wp, stride;
  PadGeometry(std::size_t f, std::size_t h_, std::size_t w_)
      : pad((f - 1) / 2), h(h_), w(w_), hp(h_ + f - 1), wp(w_ + f - 1), stride((hp + 1) * wp) {}
  std::size_t run() const { return h * wp; }
  std::size_t tap_offset(std::size_t ky, std::size_t kx) const { return ky * wp + kx; }
};

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
std::vector<RowMat<T>> pack_taps(const Tensor<T>& kernel) {
  const std::size_t co = kernel.n(), ci = kernel.c(), f = kernel.h();
  std::vector<RowMat<T>> taps(f * f, RowMat<T>(co, ci));
  for (std::size_t o = 0; o < co; ++o)
    for (std::size_t i = 0; i < ci; ++i)
      for (std::size_t ky = 0; ky < f; ++ky)
        for (std::size_t kx = 0; kx < f; ++kx) taps[ky * f + kx](o, i) = kernel(o, i, ky, kx);
  return taps;
}

template <typename T>
void pad_sample(const Tensor<T>& input, std::size_t s, const PadGeometry& g, std::vector<T>& out) {
  out.assign(input.c() * g.stride, T(0));
  for (std::size_t ch = 0; ch < input.c(); ++ch) {
    const T* src = input.plane(s, ch).data();
    T* dst = out.data() + ch * g.stride;
    for (std::size_t y = 0; y < g.h; ++y) {
      std::copy(src + y * g.w, src + (y + 1) * g.w, dst + (y + g.pad) * g.wp + g.pad);
    }
  }
}

}  // namespace detail

// Direct seven-loop convolution: stride 1, zero "same" padding.
// This is the reference every faster path is tested against.
template <typename T>
Tensor<T> conv2d_forward_reference(const Tensor<T>& input, const ConvParams<T>& p) {
  detail::check_conv_input(input, p);
  const std::size_t n = input.n(), ci = input.c(), h = input.h(), w = input.w();
  const std::size_t co = p.out_channels(), f = p.ksize();
  const long pad = static_cast<long>((f - 1) / 2);
  Tensor<T> out(n, co, h, w);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t o = 0; o < co; ++o)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
          T acc = p.bias[o];
          for (std::size_t i = 0; i < ci; ++i)
            for (std::size_t ky = 0; ky < f; ++ky) {
              const long yy = static_cast<long>(y + ky) - pad;
              if (yy < 0 || yy >= static_cast<long>(h)) continue;
              for (std::size_t kx = 0; kx < f; ++kx) {
                const long xx = static_cast<long>(x + kx) - pad;
                if (xx < 0 || xx >= static_cast<long>(w)) continue;
                acc += p.kernel(o, i, ky, kx) * input(s, i, yy, xx);
              }
            }
          out(s, o, y, x) = acc;
        }
  return out;
}

template <typename T>
ConvGrads<T> conv2d_backward_reference(const Tensor<T>& input, const ConvParams<T>& p,
                                       const Tensor<T>& grad_out) {
  detail::check_conv_input(input, p);
  const std::size_t n = input.n(), ci = input.c(), h = input.h(), w = input.w();
  const std::size_t co = p.out_channels(), f = p.ksize();
  require_same_shape(grad_out.shape(), Shape{n, co, h, w}, "conv2d_backward grad_out");
  const long pad = static_cast<long>((f - 1) / 2);
  ConvGrads<T> g{Tensor<T>(input.shape()), Tensor<T>(p.kernel.shape()), std::vector<T>(co, T(0))};
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t o = 0; o < co; ++o)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
          const T go = grad_out(s, o, y, x);
          g.bias[o] += go;
          for (std::size_t i = 0; i < ci; ++i)
            for (std::size_t ky = 0; ky < f; ++ky) {
              const long yy = static_cast<long>(y + ky) - pad;
              if (yy < 0 || yy >= static_cast<long>(h)) continue;
              for (std::size_t kx = 0; kx < f; ++kx) {
                const long xx = static_cast<long>(x + kx) - pad;
                if (xx < 0 || xx >= static_cast<long>(w)) continue;
                g.kernel(o, i, ky, kx) += go * input(s, i, yy, xx);
                g.input(s, i, yy, xx) += go * p.kernel(o, i, ky, kx);
              }
            }
        }
  return g;
}

// Same result as conv2d_forward_reference, computed as f*f shifted GEMMs over
// a padded copy of each sample.
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const ConvParams<T>& p) {
  using Mat = detail::RowMat<T>;
  using CMap = Eigen::Map<const Mat, Eigen::Unaligned, Eigen::OuterStride<>>;
  detail::check_conv_input(input, p);
  const std::size_t n = input.n(), ci = input.c(), co = p.out_channels(), f = p.ksize();
  const detail::PadGeometry g(f, input.h(), input.w());
  const auto taps = detail::pack_taps(p.kernel);

  Tensor<T> out(n, co, g.h, g.w);
  std::vector<T> padded;
  Mat acc(co, g.run());
  for (std::size_t s = 0; s < n; ++s) {
    detail::pad_sample(input, s, g, padded);
    acc.setZero();
    for (std::size_t ky = 0; ky < f; ++ky)
      for (std::size_t kx = 0; kx < f; ++kx) {
        CMap xs(padded.data() + g.tap_offset(ky, kx), static_cast<Eigen::Index>(ci),
                static_cast<Eigen::Index>(g.run()), Eigen::OuterStride<>(g.stride));
        acc.noalias() += taps[ky * f + kx] * xs;
      }
    for (std::size_t o = 0; o < co; ++o) {
      T* dst = out.plane(s, o).data();
      const T* row = acc.row(o).data();
      const T b = p.bias[o];
      for (std::size_t y = 0; y < g.h; ++y)
        for (std::size_t x = 0; x < g.w; ++x) dst[y * g.w + x] = row[y * g.wp + x] + b;
    }
  }
  return out;
}

// Gradients of <grad_out, conv2d_forward(input, p)> with respect to input,
// kernel and bias.
template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const ConvParams<T>& p, const Tensor<T>& grad_out) {
  using Mat = detail::RowMat<T>;
  using CMap = Eigen::Map<const Mat, Eigen::Unaligned, Eigen::OuterStride<>>;
  using MMap = Eigen::Map<Mat, Eigen::Unaligned, Eigen::OuterStride<>>;
  detail::check_conv_input(input, p);
  const std::size_t n = input.n(), ci = input.c(), co = p.out_channels(), f = p.ksize();
  const detail::PadGeometry g(f, input.h(), input.w());
  require_same_shape(grad_out.shape(), Shape{n, co, g.h, g.w}, "conv2d_backward grad_out");
  const auto taps = detail::pack_taps(p.kernel);

  ConvGrads<T> res{Tensor<T>(input.shape()), Tensor<T>(p.kernel.shape()), std::vector<T>(co, T(0))};
  std::vector<Mat> dtaps(f * f, Mat::Zero(co, ci));
  std::vector<T> padded, gpad;
  Mat go(co, g.run());
  const auto rows_ci = static_cast<Eigen::Index>(ci);
  const auto cols = static_cast<Eigen::Index>(g.run());

  for (std::size_t s = 0; s < n; ++s) {
    detail::pad_sample(input, s, g, padded);
    go.setZero();
    for (std::size_t o = 0; o < co; ++o) {
      const T* src = grad_out.plane(s, o).data();
      T* row = go.row(o).data();
      T bsum = T(0);
      for (std::size_t y = 0; y < g.h; ++y)
        for (std::size_t x = 0; x < g.w; ++x) {
          row[y * g.wp + x] = src[y * g.w + x];
          bsum += src[y * g.w + x];
        }
      res.bias[o] += bsum;
    }
    gpad.assign(ci * g.stride, T(0));
    for (std::size_t ky = 0; ky < f; ++ky)
      for (std::size_t kx = 0; kx < f; ++kx) {
        const std::size_t k = ky * f + kx, off = g.tap_offset(ky, kx);
        CMap xs(padded.data() + off, rows_ci, cols, Eigen::OuterStride<>(g.stride));
        MMap gx(gpad.data() + off, rows_ci, cols, Eigen::OuterStride<>(g.stride));
        gx.noalias() += taps[k].transpose() * go;
        dtaps[k].noalias() += go * xs.transpose();
      }
    for (std::size_t ch = 0; ch < ci; ++ch) {
      T* dst = res.input.plane(s, ch).data();
      const T* src = gpad.data() + ch * g.stride;
      for (std::size_t y = 0; y < g.h; ++y)
        for (std::size_t x = 0; x < g.w; ++x) dst[y * g.w + x] = src[(y + g.pad) * g.wp + x + g.pad];
    }
  }
  for (std::size_t o = 0; o < co; ++o)
    for (std::size_t i = 0; i < ci; ++i)
      for (std::size_t ky = 0; ky < f; ++ky)
        for (std::size_t kx = 0; kx < f; ++kx) res.kernel(o, i, ky, kx) = dtaps[ky * f + kx](o, i);
  return res;
}

}  // namespace ccnn
