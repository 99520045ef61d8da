#pragma once

// Gaussian kernel density reconstruction of vehicle positions, linear
// trajectory extrapolation and discrete L1 errors.

#include <traffic2d/error.hpp>
#include <traffic2d/grid.hpp>
#include <traffic2d/linear_fit.hpp>
#include <traffic2d/trajectory.hpp>

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace traffic2d {

struct KernelConfig {
  double hx = 1.0;
  double hy = 1.0;

  void validate() const {
    if (!(hx > 0.0) || !(hy > 0.0)) throw ParameterError("kernel bandwidths must be positive");
  }
};

inline KernelConfig default_bandwidths(double lx, double ly) {
  if (!(lx > 0.0) || !(ly > 0.0)) throw ParameterError("domain lengths must be positive");
  return {lx / 20.0, ly / 20.0};
}

inline double gaussian_kernel(double dx, double dy, const KernelConfig& k) {
  return std::exp(-0.5 * (dx * dx) / (k.hx * k.hx) - 0.5 * (dy * dy) / (k.hy * k.hy)) /
         (2.0 * std::numbers::pi * k.hx * k.hy);
}

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Sum of kernels centered at the positions, sampled at cell centers (veh/m^2).
inline ScalarField reconstruct_density(std::span<const Point2> positions, const Grid2D& grid,
                                       const KernelConfig& k) {
  k.validate();
  grid.validate();
  ScalarField out(grid, 0.0);
  std::vector<double> wx(grid.nx), wy(grid.ny);
  const double norm = 1.0 / (2.0 * std::numbers::pi * k.hx * k.hy);
  for (const auto& p : positions) {
    // The kernel factorizes, so each vehicle costs nx + ny exponentials.
    for (std::size_t i = 0; i < grid.nx; ++i) {
      const double d = (grid.x_center(i) - p.x) / k.hx;
      wx[i] = std::exp(-0.5 * d * d);
    }
    for (std::size_t j = 0; j < grid.ny; ++j) {
      const double d = (grid.y_center(j) - p.y) / k.hy;
      wy[j] = norm * std::exp(-0.5 * d * d);
    }
    for (std::size_t j = 0; j < grid.ny; ++j) {
      for (std::size_t i = 0; i < grid.nx; ++i) out(i, j) += wx[i] * wy[j];
    }
  }
  return out;
}

/// 1D Gaussian reconstruction on cell centers x0 + (i + 1/2) dx (veh/m).
inline std::vector<double> reconstruct_density_1d(std::span<const double> positions, double x0,
                                                  double dx, std::size_t n, double h) {
  if (!(h > 0.0)) throw ParameterError("kernel bandwidth must be positive");
  std::vector<double> out(n, 0.0);
  const double norm = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * h);
  for (double p : positions) {
    for (std::size_t i = 0; i < n; ++i) {
      const double d = (x0 + (static_cast<double>(i) + 0.5) * dx - p) / h;
      out[i] += norm * std::exp(-0.5 * d * d);
    }
  }
  return out;
}

/// Integral of a field: sum of values times cell area.
inline double integral(const ScalarField& f) {
  double s = 0.0;
  for (double v : f.values()) s += v;
  return s * f.grid().cell_area();
}

/// Fraction of the vehicle count lost because the kernels reach past the grid.
inline double truncation_loss(const ScalarField& density, std::size_t vehicles) {
  if (vehicles == 0) return 0.0;
  return 1.0 - integral(density) / static_cast<double>(vehicles);
}

/// x(t) = a_x + b_x t, y(t) = a_y + b_y t, fitted over [t_begin, t_end] and
/// evaluable at any t.
struct LinearTrack {
  std::string vehicle_id;
  VehicleClass vehicle_class = VehicleClass::Car;
  double a_x = 0.0, b_x = 0.0, a_y = 0.0, b_y = 0.0;
  double t_begin = 0.0, t_end = 0.0;

  Point2 at(double t) const { return {a_x + b_x * t, a_y + b_y * t}; }
};

inline std::vector<LinearTrack> fit_linear_tracks(const TrajectoryDataset& data) {
  std::vector<LinearTrack> out;
  for (const auto& tr : group_by_vehicle(data)) {
    if (tr.t.size() < 2) throw InputError("vehicle " + tr.vehicle_id + " has a single sample");
    const Line lx = fit_line(tr.t, tr.x);
    const Line ly = fit_line(tr.t, tr.y);
    out.push_back({tr.vehicle_id, tr.vehicle_class, lx.intercept, lx.slope, ly.intercept, ly.slope,
                   tr.t.front(), tr.t.back()});
  }
  return out;
}

/// Extrapolated positions of one class at time t.
inline std::vector<Point2> positions_at(const std::vector<LinearTrack>& tracks, double t,
                                        VehicleClass cls) {
  std::vector<Point2> out;
  for (const auto& tr : tracks) {
    if (tr.vehicle_class == cls) out.push_back(tr.at(t));
  }
  return out;
}

/// Sum of |a - b| dx dy over the cells.
inline double l1_error(const ScalarField& a, const ScalarField& b) {
  if (!(a.grid() == b.grid())) throw ParameterError("l1_error: fields live on different grids");
  const auto va = a.values();
  const auto vb = b.values();
  double s = 0.0;
  for (std::size_t k = 0; k < va.size(); ++k) s += std::abs(va[k] - vb[k]);
  return s * a.grid().cell_area();
}

}  // namespace traffic2d
