#include "carm/recon.hpp"

#include <cmath>
#include <numbers>

#include "carm/error.hpp"
#include "carm/fft.hpp"
#include "carm/projector.hpp"
#include "carm/simd/kernels.hpp"

namespace carm {

void FbpConfig::validate() const {
  if (!(cutoff > 0.0 && cutoff <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "FBP cutoff must lie in (0, 1]");
  }
}

void SartConfig::validate() const {
  if (iterations < 1) throw Error(ErrorKind::InvalidArgument, "SART needs at least 1 iteration");
  if (!(lambda0 > 0.0 && lambda0 <= 2.0)) {
    throw Error(ErrorKind::InvalidArgument, "SART lambda0 must lie in (0, 2]");
  }
  if (!(decay > 0.0 && decay <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "SART decay must lie in (0, 1]");
  }
}

void MlemConfig::validate() const {
  if (iterations < 1) throw Error(ErrorKind::InvalidArgument, "MLEM needs at least 1 iteration");
  if (i0 && !(*i0 > 0.0)) throw Error(ErrorKind::InvalidArgument, "MLEM i0 must be positive");
  if (!(floor >= 0.0)) throw Error(ErrorKind::InvalidArgument, "MLEM floor must be >= 0");
  if (!(initial > 0.0)) throw Error(ErrorKind::NonPositiveInitial, "MLEM initial mu must be > 0");
}

namespace {

void require_views(const ProjectionStack& stack) {
  if (stack.geometry().n_views() == 0) throw Error(ErrorKind::EmptyStack, "stack has no views");
}

VoxelVolume averaged_backprojection(const ProjectionStack& line_integrals, const GridSpec& grid,
                                    Exec exec) {
  const auto views = all_views(line_integrals.geometry());
  PdmBackprojection bp = backproject_pdm(line_integrals, grid, views, exec);
  simd::active_kernels().safe_divide(bp.sum.data().data(), bp.coverage.data().data(),
                                     bp.sum.size());
  return std::move(bp.sum);
}

}  // namespace

VoxelVolume bp_reconstruct(const ProjectionStack& stack, const GridSpec& grid, Exec exec) {
  require_views(stack);
  return averaged_backprojection(stack, grid, exec);
}

std::vector<double> build_filter(std::size_t nu, const FbpConfig& cfg) {
  if (nu < 2) throw Error(ErrorKind::InvalidArgument, "filter needs nu >= 2");
  cfg.validate();
  const std::size_t n = next_pow2(2 * nu);
  const double fc = 0.5 * cfg.cutoff;
  std::vector<double> h(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double f = static_cast<double>(std::min(k, n - k)) / static_cast<double>(n);
    if (f > fc) continue;
    double value = f;
    if (cfg.window == FilterWindow::RampHann) {
      value *= 0.5 * (1.0 + std::cos(std::numbers::pi * f / fc));
    }
    h[k] = value;
  }
  return h;
}

ProjectionStack filter_projections(const ProjectionStack& line_integrals, const FbpConfig& cfg,
                                   Exec exec) {
  if (line_integrals.domain() != Domain::LineIntegral) {
    throw Error(ErrorKind::DomainMismatch, "filtering expects line integrals");
  }
  const CArmGeometry& geom = line_integrals.geometry();
  const std::size_t nu = geom.nu();
  const std::size_t nv = geom.nv();
  const std::vector<double> response = build_filter(nu, cfg);
  const RealFft fft(response.size());
  const std::size_t n = fft.size();
  const std::size_t tail = (n - nu) / 2;  // replicate the last sample, then the first
  const double sid = geom.sid();
  ProjectionStack out(geom, Domain::LineIntegral);

  parallel_for(geom.n_views() * nv, exec, [&](std::size_t begin, std::size_t end) {
    RealFft::Buffers buf = fft.make_buffers();
    for (std::size_t row = begin; row < end; ++row) {
      const std::size_t k = row / nv;
      const std::size_t iv = row % nv;
      for (std::size_t iu = 0; iu < nu; ++iu) {
        double a = line_integrals.at(k, iv, iu);
        if (cfg.cosine_weight) {
          const DetectorCoord uv = geom.pixel_center(iu, iv);
          a *= sid / std::sqrt(sid * sid + uv.u * uv.u + uv.v * uv.v);
        }
        buf.real[iu] = a;
      }
      for (std::size_t i = nu; i < n; ++i) {
        buf.real[i] = i < nu + tail ? buf.real[nu - 1] : buf.real[0];
      }
      fft.forward(buf);
      for (std::size_t b = 0; b < fft.bins(); ++b) buf.spectrum[b] *= response[b];
      fft.inverse(buf);
      const double scale = 1.0 / static_cast<double>(n);
      for (std::size_t iu = 0; iu < nu; ++iu) out.at(k, iv, iu) = buf.real[iu] * scale;
    }
  });
  return out;
}

VoxelVolume fbp_reconstruct(const ProjectionStack& stack, const GridSpec& grid,
                            const FbpConfig& cfg, Exec exec) {
  require_views(stack);
  cfg.validate();
  const ProjectionStack filtered =
      stack.domain() == Domain::Intensity
          ? filter_projections(log_normalize(stack), cfg, exec)
          : filter_projections(stack, cfg, exec);
  return averaged_backprojection(filtered, grid, exec);
}

VoxelVolume sart_reconstruct(const ProjectionStack& stack, const GridSpec& grid,
                             const SartConfig& cfg, const std::optional<VoxelVolume>& initial,
                             Exec exec, const IterationObserver& observer) {
  if (stack.domain() != Domain::LineIntegral) {
    throw Error(ErrorKind::DomainMismatch, "SART expects a line-integral stack");
  }
  require_views(stack);
  cfg.validate();
  grid.validate();
  VoxelVolume vol = initial ? *initial : VoxelVolume(grid);
  if (!(vol.grid() == grid)) throw Error(ErrorKind::SizeMismatch, "initial volume grid differs");

  const CArmGeometry& geom = stack.geometry();
  const std::size_t ppv = geom.pixels_per_view();
  std::vector<double> projected(ppv);
  std::vector<double> lengths(ppv);
  std::vector<double> residual(ppv);
  std::vector<double> num(grid.size());
  std::vector<double> den(grid.size());
  const auto& kernels = simd::active_kernels();

  double lambda = cfg.lambda0;
  for (std::size_t t = 0; t < cfg.iterations; ++t) {
    for (std::size_t k = 0; k < geom.n_views(); ++k) {
      forward_project_view(vol, geom, k, projected, lengths, exec);
      const auto measured = stack.view(k);
      for (std::size_t i = 0; i < ppv; ++i) {
        residual[i] = lengths[i] > 0.0 ? (measured[i] - projected[i]) / lengths[i] : 0.0;
      }
      std::fill(num.begin(), num.end(), 0.0);
      std::fill(den.begin(), den.end(), 0.0);
      const std::size_t view[1] = {k};
      backproject_rdm(geom, view, residual, grid, num, den, exec);
      kernels.relaxed_update(vol.data().data(), num.data(), den.data(), grid.size(), lambda,
                             cfg.nonneg);
    }
    if (observer) observer(t, vol);
    lambda *= cfg.decay;
  }
  return vol;
}

VoxelVolume mlem_reconstruct(const ProjectionStack& stack, const GridSpec& grid,
                             const MlemConfig& cfg, const std::optional<VoxelVolume>& initial,
                             Exec exec, const IterationObserver& observer) {
  if (stack.domain() != Domain::Intensity) {
    throw Error(ErrorKind::DomainMismatch, "MLEM expects detected counts (intensity stack)");
  }
  require_views(stack);
  cfg.validate();
  grid.validate();
  VoxelVolume vol = initial ? *initial : VoxelVolume(grid, cfg.initial);
  if (!(vol.grid() == grid)) throw Error(ErrorKind::SizeMismatch, "initial volume grid differs");
  for (double mu : vol.data()) {
    if (!(mu > 0.0)) {
      throw Error(ErrorKind::NonPositiveInitial, "MLEM initial volume must be strictly positive");
    }
  }

  constexpr double kLineGuard = 1e-12;
  const CArmGeometry& geom = stack.geometry();
  const double i0 = cfg.i0 ? *cfg.i0 : *stack.i0();
  const std::size_t ppv = geom.pixels_per_view();
  const std::size_t n_views = geom.n_views();
  const auto views = all_views(geom);
  std::vector<double> line(ppv);
  std::vector<double> lengths(ppv);
  std::vector<double> mismatch(n_views * ppv);
  std::vector<double> curvature(n_views * ppv);
  std::vector<double> num(grid.size());
  std::vector<double> den(grid.size());
  const auto& kernels = simd::active_kernels();

  for (std::size_t t = 0; t < cfg.iterations; ++t) {
    for (std::size_t k = 0; k < n_views; ++k) {
      forward_project_view(vol, geom, k, line, lengths, exec);
      const auto counts = stack.view(k);
      for (std::size_t i = 0; i < ppv; ++i) {
        const std::size_t r = k * ppv + i;
        if (!(lengths[i] > 0.0)) {
          mismatch[r] = 0.0;
          curvature[r] = 0.0;
          continue;
        }
        const double expected = i0 * std::exp(-line[i]);
        mismatch[r] = expected - counts[i];
        curvature[r] = (line[i] > 0.0 ? line[i] : kLineGuard) * expected;
      }
    }
    std::fill(num.begin(), num.end(), 0.0);
    std::fill(den.begin(), den.end(), 0.0);
    backproject_rdm_pair(geom, views, mismatch, curvature, grid, num, den, exec);
    kernels.multiplicative_update(vol.data().data(), num.data(), den.data(), grid.size(),
                                  cfg.floor);
    if (observer) observer(t, vol);
  }
  return vol;
}

}  // namespace carm
