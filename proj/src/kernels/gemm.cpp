#include <algorithm>
#include <cassert>
#include <vector>

#include "tricam/kernels.hpp"

namespace tricam::kernels {

namespace {

constexpr std::size_t kMr = 8;   // rows of C per micro tile
constexpr std::size_t kNr = 16;  // columns of C per micro tile (two zmm lanes)
constexpr std::size_t kKc = 256;  // depth of one packed block
constexpr std::size_t kParallelWork = std::size_t{1} << 16;

// tile[kMr x kNr] = a_pack[kc][kMr] * b[kc][kNr] (row stride ldb)
void micro_kernel(std::size_t kc, const double* a, const double* b, std::size_t ldb,
                  double* tile) {
  double acc[kMr][kNr] = {};
  for (std::size_t p = 0; p < kc; ++p) {
    const double* ap = a + p * kMr;
    const double* bp = b + p * ldb;
    for (std::size_t r = 0; r < kMr; ++r) {
      const double av = ap[r];
#pragma omp simd
      for (std::size_t j = 0; j < kNr; ++j) acc[r][j] += av * bp[j];
    }
  }
  for (std::size_t r = 0; r < kMr; ++r)
    for (std::size_t j = 0; j < kNr; ++j) tile[r * kNr + j] = acc[r][j];
}

}  // namespace

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
          std::span<const double> a, std::span<const double> b, std::span<double> c,
          bool accumulate) {
  assert(a.size() >= m * k && b.size() >= k * n && c.size() >= m * n);
  if (m == 0 || n == 0) return;
  if (k == 0) {
    if (!accumulate) std::fill_n(c.begin(), m * n, 0.0);
    return;
  }

  thread_local std::vector<double> a_pack;
  thread_local std::vector<double> b_pack;

  const std::size_t m_blocks = (m + kMr - 1) / kMr;
  const std::size_t n_panels = (n + kNr - 1) / kNr;
  const long long tiles = static_cast<long long>(m_blocks * n_panels);
  const bool parallel = m * n * k >= kParallelWork;
  // element (i, p) of op(A) and (p, j) of op(B)
  const std::size_t a_row = ta == Trans::kNo ? k : 1, a_col = ta == Trans::kNo ? 1 : m;
  const std::size_t b_row = tb == Trans::kNo ? n : 1, b_col = tb == Trans::kNo ? 1 : k;

  // The k dimension is consumed block by block in a fixed order, so every
  // element of C sees the same summation sequence regardless of threading.
  for (std::size_t p0 = 0; p0 < k; p0 += kKc) {
    const std::size_t kc = std::min(kKc, k - p0);

    a_pack.assign(m_blocks * kc * kMr, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      double* dst = a_pack.data() + (i / kMr) * kc * kMr + i % kMr;
      const double* src = a.data() + i * a_row + p0 * a_col;
      for (std::size_t p = 0; p < kc; ++p) dst[p * kMr] = src[p * a_col];
    }

    // Untransposed B is read in place; only a ragged last panel is packed.
    const bool direct_b = tb == Trans::kNo;
    b_pack.assign(n_panels * kc * kNr, 0.0);
    if (direct_b) {
      const std::size_t j0 = (n_panels - 1) * kNr;
      for (std::size_t p = 0; p < kc; ++p) {
        std::copy_n(b.data() + (p0 + p) * b_row + j0, n - j0,
                    b_pack.data() + ((n_panels - 1) * kc + p) * kNr);
      }
    } else {
      for (std::size_t j = 0; j < n; ++j) {
        double* dst = b_pack.data() + (j / kNr) * kc * kNr + j % kNr;
        const double* src = b.data() + j * b_col + p0;
        for (std::size_t p = 0; p < kc; ++p) dst[p * kNr] = src[p];
      }
    }

    const bool overwrite = p0 == 0 && !accumulate;
    const double* ap = a_pack.data();
    const double* bp = b_pack.data();
#pragma omp parallel for schedule(static) if (parallel)
    for (long long t = 0; t < tiles; ++t) {
      // Walk down the rows of one panel before moving on so the panel stays hot.
      const std::size_t jp = static_cast<std::size_t>(t) / m_blocks;
      const std::size_t ib = static_cast<std::size_t>(t) % m_blocks;
      const std::size_t i0 = ib * kMr;
      const std::size_t rows = std::min(kMr, m - i0);
      const std::size_t j0 = jp * kNr;
      const std::size_t width = std::min(kNr, n - j0);
      double tile[kMr * kNr];
      if (direct_b && width == kNr) {
        micro_kernel(kc, ap + ib * kc * kMr, b.data() + p0 * n + j0, n, tile);
      } else {
        micro_kernel(kc, ap + ib * kc * kMr, bp + jp * kc * kNr, kNr, tile);
      }
      for (std::size_t r = 0; r < rows; ++r) {
        double* crow = c.data() + (i0 + r) * n + j0;
        const double* trow = tile + r * kNr;
        if (overwrite) {
          std::copy_n(trow, width, crow);
        } else {
          for (std::size_t j = 0; j < width; ++j) crow[j] += trow[j];
        }
      }
    }
  }
}

}  // namespace tricam::kernels
