#include "carm/fft.hpp"

#include <fftw3.h>

#include <utility>

#include "carm/error.hpp"

namespace carm {

std::size_t next_pow2(std::size_t n) noexcept {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

RealFft::Buffers::Buffers(Buffers&& other) noexcept
    : real(std::exchange(other.real, nullptr)), spectrum(std::exchange(other.spectrum, nullptr)) {}

RealFft::Buffers& RealFft::Buffers::operator=(Buffers&& other) noexcept {
  std::swap(real, other.real);
  std::swap(spectrum, other.spectrum);
  return *this;
}

RealFft::Buffers::~Buffers() {
  fftw_free(real);
  fftw_free(spectrum);
}

RealFft::Buffers RealFft::make_buffers() const {
  Buffers b;
  b.real = static_cast<double*>(fftw_malloc(sizeof(double) * n_));
  b.spectrum = static_cast<std::complex<double>*>(fftw_malloc(sizeof(fftw_complex) * bins()));
  if (b.real == nullptr || b.spectrum == nullptr) throw std::bad_alloc();
  return b;
}

RealFft::RealFft(std::size_t n) : n_(n), forward_plan_(nullptr), inverse_plan_(nullptr) {
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "FFT length must be at least 2");
  Buffers scratch = make_buffers();
  auto* spec = reinterpret_cast<fftw_complex*>(scratch.spectrum);
  // FFTW_ESTIMATE keeps plans deterministic and leaves the buffers untouched.
  forward_plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), scratch.real, spec, FFTW_ESTIMATE);
  inverse_plan_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), spec, scratch.real, FFTW_ESTIMATE);
  if (forward_plan_ == nullptr || inverse_plan_ == nullptr) {
    throw Error(ErrorKind::InvalidArgument, "FFTW planning failed");
  }
}

RealFft::~RealFft() {
  fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
}

void RealFft::forward(Buffers& buf) const {
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), buf.real,
                       reinterpret_cast<fftw_complex*>(buf.spectrum));
}

void RealFft::inverse(Buffers& buf) const {
  // c2r overwrites its input; callers rebuild the spectrum every row anyway.
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_),
                       reinterpret_cast<fftw_complex*>(buf.spectrum), buf.real);
}

}  // namespace carm
