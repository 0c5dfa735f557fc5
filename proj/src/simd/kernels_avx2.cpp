// Compiled with -mavx2 (and without -mfma) when the toolchain targets x86-64.
#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "carm/simd/kernels.hpp"

namespace carm::simd {
namespace {

void bilinear_accumulate(const BilinearLine& line, double* out, double* hits, std::size_t n) {
  const double col_max = static_cast<double>(line.nu - 1);
  const double row_max = static_cast<double>(line.nv - 1);
  if (!(line.col >= 0.0 && line.col <= col_max)) return;
  const double c0 = std::min(std::floor(line.col), col_max - 1.0);
  const double fu_s = line.col - c0;
  const double* base = line.view + static_cast<std::size_t>(c0);
  const std::size_t nu = line.nu;

  const __m256d fu = _mm256_set1_pd(fu_s);
  const __m256d row0 = _mm256_set1_pd(line.row0);
  const __m256d drow = _mm256_set1_pd(line.drow);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d rmax = _mm256_set1_pd(row_max);
  const __m256d rmax1 = _mm256_set1_pd(row_max - 1.0);
  const __m128i stride = _mm_set1_epi32(static_cast<int>(nu));
  const __m256d lane = _mm256_set_pd(3.0, 2.0, 1.0, 0.0);

  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d kk = _mm256_add_pd(_mm256_set1_pd(static_cast<double>(k)), lane);
    const __m256d r = _mm256_add_pd(row0, _mm256_mul_pd(kk, drow));
    const __m256d inside = _mm256_and_pd(_mm256_cmp_pd(r, zero, _CMP_GE_OQ),
                                         _mm256_cmp_pd(r, rmax, _CMP_LE_OQ));
    if (_mm256_movemask_pd(inside) == 0) continue;
    // Lanes outside the detector gather row 0 and are discarded by the blend.
    const __m256d r0 = _mm256_and_pd(_mm256_min_pd(_mm256_floor_pd(r), rmax1), inside);
    const __m256d fv = _mm256_sub_pd(r, r0);
    const __m128i offset = _mm_mullo_epi32(_mm256_cvttpd_epi32(r0), stride);
    const __m128i offset_next = _mm_add_epi32(offset, stride);
    const __m256d p00 = _mm256_i32gather_pd(base, offset, 8);
    const __m256d p01 = _mm256_i32gather_pd(base + 1, offset, 8);
    const __m256d p10 = _mm256_i32gather_pd(base, offset_next, 8);
    const __m256d p11 = _mm256_i32gather_pd(base + 1, offset_next, 8);
    const __m256d top = _mm256_add_pd(p00, _mm256_mul_pd(fu, _mm256_sub_pd(p01, p00)));
    const __m256d bottom = _mm256_add_pd(p10, _mm256_mul_pd(fu, _mm256_sub_pd(p11, p10)));
    const __m256d sample = _mm256_add_pd(top, _mm256_mul_pd(fv, _mm256_sub_pd(bottom, top)));
    const __m256d acc = _mm256_loadu_pd(out + k);
    _mm256_storeu_pd(out + k, _mm256_blendv_pd(acc, _mm256_add_pd(acc, sample), inside));
    const __m256d h = _mm256_loadu_pd(hits + k);
    _mm256_storeu_pd(hits + k, _mm256_blendv_pd(h, _mm256_add_pd(h, one), inside));
  }
  for (; k < n; ++k) {
    const double r = line.row0 + static_cast<double>(k) * line.drow;
    if (!(r >= 0.0 && r <= row_max)) continue;
    const double r0 = std::min(std::floor(r), row_max - 1.0);
    const double fv = r - r0;
    const double* p = base + static_cast<std::size_t>(r0) * nu;
    const double top = p[0] + fu_s * (p[1] - p[0]);
    const double bottom = p[nu] + fu_s * (p[nu + 1] - p[nu]);
    out[k] += top + fv * (bottom - top);
    hits[k] += 1.0;
  }
}

void relaxed_update(double* vol, const double* num, const double* den, std::size_t n,
                    double lambda_s, bool nonneg) {
  const __m256d lambda = _mm256_set1_pd(lambda_s);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d d = _mm256_loadu_pd(den + j);
    const __m256d v = _mm256_loadu_pd(vol + j);
    const __m256d step = _mm256_mul_pd(lambda, _mm256_div_pd(_mm256_loadu_pd(num + j), d));
    __m256d r = _mm256_blendv_pd(v, _mm256_add_pd(v, step), _mm256_cmp_pd(d, zero, _CMP_GT_OQ));
    if (nonneg) r = _mm256_max_pd(r, zero);
    _mm256_storeu_pd(vol + j, r);
  }
  for (; j < n; ++j) {
    double v = vol[j];
    if (den[j] > 0.0) v = v + lambda_s * (num[j] / den[j]);
    if (nonneg) v = v > 0.0 ? v : 0.0;
    vol[j] = v;
  }
}

void multiplicative_update(double* vol, const double* num, const double* den, std::size_t n,
                           double floor_s) {
  const __m256d floor = _mm256_set1_pd(floor_s);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d d = _mm256_loadu_pd(den + j);
    const __m256d v = _mm256_loadu_pd(vol + j);
    const __m256d step = _mm256_mul_pd(v, _mm256_div_pd(_mm256_loadu_pd(num + j), d));
    const __m256d r =
        _mm256_blendv_pd(v, _mm256_add_pd(v, step), _mm256_cmp_pd(d, zero, _CMP_GT_OQ));
    _mm256_storeu_pd(vol + j, _mm256_max_pd(r, floor));
  }
  for (; j < n; ++j) {
    double v = vol[j];
    if (den[j] > 0.0) v = v + v * (num[j] / den[j]);
    vol[j] = v > floor_s ? v : floor_s;
  }
}

void safe_divide(double* values, const double* counts, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d c = _mm256_loadu_pd(counts + j);
    const __m256d q = _mm256_div_pd(_mm256_loadu_pd(values + j), c);
    _mm256_storeu_pd(values + j, _mm256_blendv_pd(zero, q, _mm256_cmp_pd(c, zero, _CMP_GT_OQ)));
  }
  for (; j < n; ++j) {
    values[j] = counts[j] > 0.0 ? values[j] / counts[j] : 0.0;
  }
}

}  // namespace

const KernelTable& avx2_table() noexcept {
  static const KernelTable table{"avx2", &bilinear_accumulate, &relaxed_update,
                                 &multiplicative_update, &safe_divide};
  return table;
}

}  // namespace carm::simd
