#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "carm/geometry.hpp"

namespace carm {

enum class Domain { Intensity, LineIntegral };

const char* to_string(Domain domain) noexcept;

/// n_views detector images, view-major then row-major (nv rows of nu
/// columns). Intensity stacks carry the incident count i0 per pixel.
class ProjectionStack {
 public:
  ProjectionStack(CArmGeometry geom, Domain domain, std::optional<double> i0 = std::nullopt);

  const CArmGeometry& geometry() const noexcept { return geom_; }
  Domain domain() const noexcept { return domain_; }
  std::optional<double> i0() const noexcept { return i0_; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  std::span<double> view(std::size_t k) noexcept {
    return std::span<double>(data_).subspan(k * geom_.pixels_per_view(), geom_.pixels_per_view());
  }
  std::span<const double> view(std::size_t k) const noexcept {
    return std::span<const double>(data_).subspan(k * geom_.pixels_per_view(),
                                                  geom_.pixels_per_view());
  }

  double& at(std::size_t k, std::size_t iv, std::size_t iu) noexcept {
    return data_[(k * geom_.nv() + iv) * geom_.nu() + iu];
  }
  double at(std::size_t k, std::size_t iv, std::size_t iu) const noexcept {
    return data_[(k * geom_.nv() + iv) * geom_.nu() + iu];
  }

 private:
  CArmGeometry geom_;
  Domain domain_;
  std::optional<double> i0_;
  std::vector<double> data_;
};

}  // namespace carm
