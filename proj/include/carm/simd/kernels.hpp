#pragma once

// Data-parallel inner loops used by the projectors and the iterative
// reconstructors. Each kernel has a scalar reference implementation and,
// on x86-64, an AVX2 variant chosen at runtime. The variants perform the
// same IEEE operations in the same order (no FMA contraction), so they agree
// bitwise; tests/test_simd.cpp holds them to that.

#include <cstddef>

namespace carm::simd {

/// One line of bilinear detector samples: the column coordinate is fixed and
/// the row coordinate advances linearly, row(k) = row0 + k * drow. Pixel
/// centers are at integer coordinates; samples outside [0, nu-1] x [0, nv-1]
/// are skipped.
struct BilinearLine {
  const double* view = nullptr;  // nv rows of nu columns
  std::size_t nu = 0;
  std::size_t nv = 0;
  double col = 0.0;
  double row0 = 0.0;
  double drow = 0.0;
};

// out[k] += sample(k) and hits[k] += 1 for every in-bounds k < n.
using BilinearAccumulateFn = void (*)(const BilinearLine& line, double* out, double* hits,
                                      std::size_t n);

// vol[j] += lambda * num[j] / den[j] where den[j] > 0; then vol[j] = max(vol[j], 0) if nonneg.
using RelaxedUpdateFn = void (*)(double* vol, const double* num, const double* den, std::size_t n,
                                 double lambda, bool nonneg);

// vol[j] += vol[j] * num[j] / den[j] where den[j] > 0; then vol[j] = max(vol[j], floor).
using MultiplicativeUpdateFn = void (*)(double* vol, const double* num, const double* den,
                                        std::size_t n, double floor);

// values[j] /= counts[j] where counts[j] > 0, else values[j] = 0.
using SafeDivideFn = void (*)(double* values, const double* counts, std::size_t n);

struct KernelTable {
  const char* name;
  BilinearAccumulateFn bilinear_accumulate;
  RelaxedUpdateFn relaxed_update;
  MultiplicativeUpdateFn multiplicative_update;
  SafeDivideFn safe_divide;
};

const KernelTable& scalar_kernels() noexcept;

/// AVX2 table, or nullptr when it was not compiled in or the CPU lacks AVX2.
const KernelTable* avx2_kernels() noexcept;

/// The table used by the library. Picks AVX2 when available unless the
/// environment variable CARM_SIMD is set to "scalar".
const KernelTable& active_kernels() noexcept;

}  // namespace carm::simd
