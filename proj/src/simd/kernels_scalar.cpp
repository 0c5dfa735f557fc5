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
  const double fu = line.col - c0;
  const double* base = line.view + static_cast<std::size_t>(c0);
  const std::size_t nu = line.nu;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = line.row0 + static_cast<double>(k) * line.drow;
    if (!(r >= 0.0 && r <= row_max)) continue;
    const double r0 = std::min(std::floor(r), row_max - 1.0);
    const double fv = r - r0;
    const double* p = base + static_cast<std::size_t>(r0) * nu;
    const double top = p[0] + fu * (p[1] - p[0]);
    const double bottom = p[nu] + fu * (p[nu + 1] - p[nu]);
    out[k] += top + fv * (bottom - top);
    hits[k] += 1.0;
  }
}

void relaxed_update(double* vol, const double* num, const double* den, std::size_t n,
                    double lambda, bool nonneg) {
  for (std::size_t j = 0; j < n; ++j) {
    double v = vol[j];
    if (den[j] > 0.0) v = v + lambda * (num[j] / den[j]);
    if (nonneg) v = v > 0.0 ? v : 0.0;
    vol[j] = v;
  }
}

void multiplicative_update(double* vol, const double* num, const double* den, std::size_t n,
                           double floor) {
  for (std::size_t j = 0; j < n; ++j) {
    double v = vol[j];
    if (den[j] > 0.0) v = v + v * (num[j] / den[j]);
    vol[j] = v > floor ? v : floor;
  }
}

void safe_divide(double* values, const double* counts, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    values[j] = counts[j] > 0.0 ? values[j] / counts[j] : 0.0;
  }
}

}  // namespace

const KernelTable& scalar_kernels() noexcept {
  static const KernelTable table{"scalar", &bilinear_accumulate, &relaxed_update,
                                 &multiplicative_update, &safe_divide};
  return table;
}

}  // namespace carm::simd
