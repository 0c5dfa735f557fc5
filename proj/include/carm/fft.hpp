#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace carm {

/// Real-to-complex / complex-to-real FFT pair of a fixed length, backed by
/// FFTW. Plans are made at construction (not thread-safe); transform() may be
/// called concurrently with caller-owned buffers from `make_buffers`.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const noexcept { return n_; }
  std::size_t bins() const noexcept { return n_ / 2 + 1; }

  struct Buffers {
    double* real = nullptr;                 // n values
    std::complex<double>* spectrum = nullptr;  // n/2 + 1 bins
    Buffers() = default;
    Buffers(const Buffers&) = delete;
    Buffers& operator=(const Buffers&) = delete;
    Buffers(Buffers&& other) noexcept;
    Buffers& operator=(Buffers&& other) noexcept;
    ~Buffers();
  };
  Buffers make_buffers() const;

  void forward(Buffers& buf) const;   // real -> spectrum
  void inverse(Buffers& buf) const;   // spectrum -> real, unnormalized

 private:
  std::size_t n_;
  void* forward_plan_;
  void* inverse_plan_;
};

std::size_t next_pow2(std::size_t n) noexcept;

}  // namespace carm
