#include <cassert>

#include "tricam/kernels.hpp"

namespace tricam::kernels::reference {

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
          std::span<const double> a, std::span<const double> b, std::span<double> c,
          bool accumulate) {
  assert(a.size() >= m * k && b.size() >= k * n && c.size() >= m * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double sum = 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = ta == Trans::kNo ? a[i * k + p] : a[p * m + i];
        const double bv = tb == Trans::kNo ? b[p * n + j] : b[j * k + p];
        sum += av * bv;
      }
      c[i * n + j] = accumulate ? c[i * n + j] + sum : sum;
    }
  }
}

}  // namespace tricam::kernels::reference
