#include <algorithm>
#include <cassert>
#include <limits>
#include <vector>

#include "tricam/kernels.hpp"

namespace tricam::kernels {

namespace {

// col[(ci*k + ky)*k + kx][n*P + oy*OW + ox], P = OH*OW.
void im2col(const ConvShape& s, std::span<const double> in, std::vector<double>& col) {
  const std::size_t oh = s.out_h(), ow = s.out_w(), kk = s.kernel;
  const std::size_t p_img = oh * ow;
  const std::size_t cols = s.batch * p_img;
  const std::size_t plane = s.in_h * s.in_w;
  col.resize(s.patch() * cols);
  const long long batch = static_cast<long long>(s.batch);
#pragma omp parallel for schedule(static)
  for (long long nn = 0; nn < batch; ++nn) {
    const std::size_t n = static_cast<std::size_t>(nn);
    for (std::size_t ci = 0; ci < s.in_channels; ++ci) {
      const double* src = in.data() + (n * s.in_channels + ci) * plane;
      for (std::size_t ky = 0; ky < kk; ++ky)
        for (std::size_t kx = 0; kx < kk; ++kx) {
          double* dst = col.data() + ((ci * kk + ky) * kk + kx) * cols + n * p_img;
          for (std::size_t oy = 0; oy < oh; ++oy) {
            const long long iy = static_cast<long long>(oy * s.stride + ky) - static_cast<long long>(s.pad);
            double* row = dst + oy * ow;
            if (iy < 0 || iy >= static_cast<long long>(s.in_h)) {
              std::fill_n(row, ow, 0.0);
              continue;
            }
            const double* srow = src + static_cast<std::size_t>(iy) * s.in_w;
            for (std::size_t ox = 0; ox < ow; ++ox) {
              const long long ix = static_cast<long long>(ox * s.stride + kx) - static_cast<long long>(s.pad);
              row[ox] = (ix < 0 || ix >= static_cast<long long>(s.in_w)) ? 0.0 : srow[ix];
            }
          }
        }
    }
  }
}

void col2im(const ConvShape& s, const std::vector<double>& col, std::span<double> grad_in) {
  const std::size_t oh = s.out_h(), ow = s.out_w(), kk = s.kernel;
  const std::size_t p_img = oh * ow;
  const std::size_t cols = s.batch * p_img;
  const std::size_t plane = s.in_h * s.in_w;
  std::fill(grad_in.begin(), grad_in.end(), 0.0);
  const long long batch = static_cast<long long>(s.batch);
#pragma omp parallel for schedule(static)
  for (long long nn = 0; nn < batch; ++nn) {
    const std::size_t n = static_cast<std::size_t>(nn);
    for (std::size_t ci = 0; ci < s.in_channels; ++ci) {
      double* dst = grad_in.data() + (n * s.in_channels + ci) * plane;
      for (std::size_t ky = 0; ky < kk; ++ky)
        for (std::size_t kx = 0; kx < kk; ++kx) {
          const double* src = col.data() + ((ci * kk + ky) * kk + kx) * cols + n * p_img;
          for (std::size_t oy = 0; oy < oh; ++oy) {
            const long long iy = static_cast<long long>(oy * s.stride + ky) - static_cast<long long>(s.pad);
            if (iy < 0 || iy >= static_cast<long long>(s.in_h)) continue;
            double* drow = dst + static_cast<std::size_t>(iy) * s.in_w;
            for (std::size_t ox = 0; ox < ow; ++ox) {
              const long long ix = static_cast<long long>(ox * s.stride + kx) - static_cast<long long>(s.pad);
              if (ix >= 0 && ix < static_cast<long long>(s.in_w)) drow[ix] += src[oy * ow + ox];
            }
          }
        }
    }
  }
}

}  // namespace

void conv2d_forward(const ConvShape& s, std::span<const double> in, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> out) {
  assert(s.valid());
  const std::size_t p_img = s.out_h() * s.out_w();
  const std::size_t cols = s.batch * p_img;
  thread_local std::vector<double> col;
  thread_local std::vector<double> tmp;
  im2col(s, in, col);
  tmp.resize(s.out_channels * cols);
  gemm(Trans::kNo, Trans::kNo, s.out_channels, cols, s.patch(), weight, col, tmp);

  const long long batch = static_cast<long long>(s.batch);
#pragma omp parallel for schedule(static)
  for (long long nn = 0; nn < batch; ++nn) {
    const std::size_t n = static_cast<std::size_t>(nn);
    for (std::size_t co = 0; co < s.out_channels; ++co) {
      const double* src = tmp.data() + co * cols + n * p_img;
      double* dst = out.data() + (n * s.out_channels + co) * p_img;
      const double b = bias[co];
      for (std::size_t p = 0; p < p_img; ++p) dst[p] = src[p] + b;
    }
  }
}

void conv2d_backward(const ConvShape& s, std::span<const double> in,
                     std::span<const double> weight, std::span<const double> grad_out,
                     std::span<double> grad_in, std::span<double> grad_weight,
                     std::span<double> grad_bias) {
  assert(s.valid());
  const std::size_t p_img = s.out_h() * s.out_w();
  const std::size_t cols = s.batch * p_img;
  thread_local std::vector<double> col;
  thread_local std::vector<double> gout;  // [Cout, N*P]
  thread_local std::vector<double> gcol;
  gout.resize(s.out_channels * cols);
  const long long cout = static_cast<long long>(s.out_channels);
#pragma omp parallel for schedule(static)
  for (long long cc = 0; cc < cout; ++cc) {
    const std::size_t co = static_cast<std::size_t>(cc);
    double bsum = 0.0;
    for (std::size_t n = 0; n < s.batch; ++n) {
      const double* src = grad_out.data() + (n * s.out_channels + co) * p_img;
      double* dst = gout.data() + co * cols + n * p_img;
      for (std::size_t p = 0; p < p_img; ++p) {
        dst[p] = src[p];
        bsum += src[p];
      }
    }
    grad_bias[co] += bsum;
  }

  im2col(s, in, col);
  gemm(Trans::kNo, Trans::kYes, s.out_channels, s.patch(), cols, gout, col, grad_weight, true);
  if (grad_in.empty()) return;
  gcol.resize(s.patch() * cols);
  gemm(Trans::kYes, Trans::kNo, s.patch(), cols, s.out_channels, weight, gout, gcol);
  col2im(s, gcol, grad_in);
}

void maxpool2_forward(std::size_t planes, std::size_t h, std::size_t w,
                      std::span<const double> in, std::span<double> out,
                      std::span<std::size_t> argmax) {
  const std::size_t oh = h / 2, ow = w / 2;
  const long long np = static_cast<long long>(planes);
#pragma omp parallel for schedule(static)
  for (long long pp = 0; pp < np; ++pp) {
    const std::size_t pl = static_cast<std::size_t>(pp);
    const std::size_t base = pl * h * w;
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) {
        std::size_t best = base + (2 * oy) * w + 2 * ox;
        for (std::size_t dy = 0; dy < 2; ++dy)
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = base + (2 * oy + dy) * w + 2 * ox + dx;
            if (in[idx] > in[best]) best = idx;
          }
        const std::size_t o = (pl * oh + oy) * ow + ox;
        out[o] = in[best];
        argmax[o] = best;
      }
  }
}

void maxpool2_backward(std::span<const double> grad_out, std::span<const std::size_t> argmax,
                       std::span<double> grad_in) {
  std::fill(grad_in.begin(), grad_in.end(), 0.0);
  // Each input feeds at most one 2x2 window, so the scatter has no conflicts.
  const long long n = static_cast<long long>(grad_out.size());
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < n; ++i) grad_in[argmax[static_cast<std::size_t>(i)]] += grad_out[static_cast<std::size_t>(i)];
}

}  // namespace tricam::kernels
