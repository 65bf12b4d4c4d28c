#include <algorithm>

#include "tricam/kernels.hpp"

namespace tricam::kernels::reference {

namespace {

// Input offset for output (oy, ox) and tap (ky, kx); -1 when in the padding.
long long tap_offset(const ConvShape& s, std::size_t oy, std::size_t ox, std::size_t ky,
                     std::size_t kx) {
  const long long iy = static_cast<long long>(oy * s.stride + ky) - static_cast<long long>(s.pad);
  const long long ix = static_cast<long long>(ox * s.stride + kx) - static_cast<long long>(s.pad);
  if (iy < 0 || ix < 0 || iy >= static_cast<long long>(s.in_h) ||
      ix >= static_cast<long long>(s.in_w)) {
    return -1;
  }
  return iy * static_cast<long long>(s.in_w) + ix;
}

}  // namespace

void conv2d_forward(const ConvShape& s, std::span<const double> in, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> out) {
  const std::size_t oh = s.out_h(), ow = s.out_w(), kk = s.kernel;
  const std::size_t plane = s.in_h * s.in_w;
  for (std::size_t n = 0; n < s.batch; ++n)
    for (std::size_t co = 0; co < s.out_channels; ++co)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          double sum = bias[co];
          for (std::size_t ci = 0; ci < s.in_channels; ++ci)
            for (std::size_t ky = 0; ky < kk; ++ky)
              for (std::size_t kx = 0; kx < kk; ++kx) {
                const long long off = tap_offset(s, oy, ox, ky, kx);
                if (off < 0) continue;
                const double x = in[(n * s.in_channels + ci) * plane + static_cast<std::size_t>(off)];
                sum += weight[co * s.patch() + (ci * kk + ky) * kk + kx] * x;
              }
          out[((n * s.out_channels + co) * oh + oy) * ow + ox] = sum;
        }
}

void conv2d_backward(const ConvShape& s, std::span<const double> in,
                     std::span<const double> weight, std::span<const double> grad_out,
                     std::span<double> grad_in, std::span<double> grad_weight,
                     std::span<double> grad_bias) {
  const std::size_t oh = s.out_h(), ow = s.out_w(), kk = s.kernel;
  const std::size_t plane = s.in_h * s.in_w;
  if (!grad_in.empty()) std::fill(grad_in.begin(), grad_in.end(), 0.0);
  for (std::size_t n = 0; n < s.batch; ++n)
    for (std::size_t co = 0; co < s.out_channels; ++co)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const double g = grad_out[((n * s.out_channels + co) * oh + oy) * ow + ox];
          grad_bias[co] += g;
          for (std::size_t ci = 0; ci < s.in_channels; ++ci)
            for (std::size_t ky = 0; ky < kk; ++ky)
              for (std::size_t kx = 0; kx < kk; ++kx) {
                const long long off = tap_offset(s, oy, ox, ky, kx);
                if (off < 0) continue;
                const std::size_t xi = (n * s.in_channels + ci) * plane + static_cast<std::size_t>(off);
                const std::size_t wi = co * s.patch() + (ci * kk + ky) * kk + kx;
                grad_weight[wi] += g * in[xi];
                if (!grad_in.empty()) grad_in[xi] += g * weight[wi];
              }
        }
}

}  // namespace tricam::kernels::reference
