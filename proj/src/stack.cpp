#include "carm/stack.hpp"

#include <cmath>

#include "carm/error.hpp"

namespace carm {

const char* to_string(Domain domain) noexcept {
  return domain == Domain::Intensity ? "intensity" : "line_integral";
}

ProjectionStack::ProjectionStack(CArmGeometry geom, Domain domain, std::optional<double> i0)
    : geom_(std::move(geom)), domain_(domain), i0_(i0) {
  if (domain_ == Domain::Intensity) {
    if (!i0_ || !(*i0_ > 0.0) || !std::isfinite(*i0_)) {
      throw Error(ErrorKind::InvalidArgument, "intensity stacks need a positive i0");
    }
  } else if (i0_) {
    throw Error(ErrorKind::InvalidArgument, "line-integral stacks carry no i0");
  }
  data_.assign(geom_.n_views() * geom_.pixels_per_view(), 0.0);
}

}  // namespace carm
