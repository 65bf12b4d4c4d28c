#pragma once

// Dense linear-algebra and convolution kernels used by the network.
//
// Every kernel has an OpenMP implementation (namespace kernels) and a plain
// serial reference (namespace kernels::reference) kept for tests and the
// benchmark. Parallel kernels partition their outputs so that each output
// element is produced by exactly one thread with a fixed summation order:
// results are bit-identical for any thread count.
//
// All matrices are dense and row-major.

#include <cstddef>
#include <span>

namespace tricam::kernels {

enum class Trans { kNo, kYes };

/// C = op(A) * op(B), or C += op(A) * op(B) when accumulate is set.
/// op(A) is m x k, op(B) is k x n, C is m x n. A stored transposed is k x m.
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
          std::span<const double> a, std::span<const double> b, std::span<double> c,
          bool accumulate = false);

struct ConvShape {
  std::size_t batch = 1;
  std::size_t in_channels = 1;
  std::size_t in_h = 1;
  std::size_t in_w = 1;
  std::size_t out_channels = 1;
  std::size_t kernel = 3;
  std::size_t stride = 1;
  std::size_t pad = 1;

  std::size_t out_h() const { return (in_h + 2 * pad - kernel) / stride + 1; }
  std::size_t out_w() const { return (in_w + 2 * pad - kernel) / stride + 1; }
  std::size_t patch() const { return in_channels * kernel * kernel; }
  bool valid() const {
    return batch > 0 && in_channels > 0 && out_channels > 0 && kernel > 0 && stride > 0 &&
           in_h + 2 * pad >= kernel && in_w + 2 * pad >= kernel;
  }
};

/// out[N, Cout, OH, OW] = conv(in[N, Cin, H, W], weight[Cout, Cin*k*k]) + bias[Cout]
void conv2d_forward(const ConvShape& s, std::span<const double> in, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> out);

/// Accumulates into grad_weight / grad_bias and overwrites grad_in (when
/// non-empty).
void conv2d_backward(const ConvShape& s, std::span<const double> in,
                     std::span<const double> weight, std::span<const double> grad_out,
                     std::span<double> grad_in, std::span<double> grad_weight,
                     std::span<double> grad_bias);

/// 2x2 max pooling with stride 2 over [planes, H, W]; odd trailing rows or
/// columns are dropped. argmax records the winning input offset per output.
void maxpool2_forward(std::size_t planes, std::size_t h, std::size_t w,
                      std::span<const double> in, std::span<double> out,
                      std::span<std::size_t> argmax);
void maxpool2_backward(std::span<const double> grad_out, std::span<const std::size_t> argmax,
                       std::span<double> grad_in);

namespace reference {

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
          std::span<const double> a, std::span<const double> b, std::span<double> c,
          bool accumulate = false);

void conv2d_forward(const ConvShape& s, std::span<const double> in, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> out);

void conv2d_backward(const ConvShape& s, std::span<const double> in,
                     std::span<const double> weight, std::span<const double> grad_out,
                     std::span<double> grad_in, std::span<double> grad_weight,
                     std::span<double> grad_bias);

}  // namespace reference

}  // namespace tricam::kernels
