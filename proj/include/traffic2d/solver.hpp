#pragma once

// Dimensionally split finite-volume integrator: half x-sweep, full y-sweep,
// half x-sweep, each with the local Lax-Friedrichs (Rusanov) flux.

#include <traffic2d/error.hpp>
#include <traffic2d/grid.hpp>
#include <traffic2d/model.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <variant>
#include <vector>

namespace traffic2d {

struct OutflowBoundary {};
struct PeriodicBoundary {};
/// Fixed ghost states on each side.
struct DirichletBoundary {
  ClassState west, east, south, north;
};

using BoundaryCondition = std::variant<OutflowBoundary, PeriodicBoundary, DirichletBoundary>;

/// How a step is split. `Standard` is x/2, y, x/2 with the closing sweep
/// updating U** (textbook Strang). `FluxOnlyFromIntermediate` applies F(U**)
/// to U^n, which drops the y-update and exists only to show that it does not
/// reproduce the waves. `Symmetrized` averages the x-y-x and y-x-y orderings,
/// which makes the scheme commute with swapping the axes.
enum class SplittingForm { Standard, FluxOnlyFromIntermediate, Symmetrized };

struct SolverConfig {
  double cfl_safety = 0.9;
  double t_final = 1.0;
  BoundaryCondition boundary = OutflowBoundary{};
  /// Snapshot spacing in time; 0 keeps only t = 0 and t = t_final.
  double snapshot_interval = 0.0;
  SplittingForm splitting = SplittingForm::Standard;
  /// Safety cap on the number of time steps.
  std::size_t max_steps = 10'000'000;

  void validate() const {
    if (!(t_final > 0.0)) throw ParameterError("final time must be positive");
    if (!(cfl_safety > 0.0) || cfl_safety > 1.0) throw ParameterError("cfl_safety must lie in (0, 1]");
    if (snapshot_interval < 0.0) throw ParameterError("snapshot interval must be non-negative");
    if (const auto* d = std::get_if<DirichletBoundary>(&boundary)) {
      for (const auto& s : {d->west, d->east, d->south, d->north}) {
        if (!(s.rho >= 0.0) || !(s.mu >= 0.0)) throw ParameterError("Dirichlet ghost state must be non-negative");
      }
    }
  }
};

struct Snapshot {
  double t;
  std::size_t step;
  Field2D field;
};

/// Relative band in which density excursions count as roundoff and are clamped.
inline constexpr double kSolverClampTolerance = 1e-10;

/// Largest directional spectral radius over all cells and both axes.
inline double max_wave_speed(const Field2D& field, const FluxParams& params) {
  if (field.values().empty()) throw ParameterError("empty field");
  double speed = 0.0;
  for (const auto& s : field.values()) {
    speed = std::max({speed, directional_wave_speed(s, params, Axis::X),
                      directional_wave_speed(s, params, Axis::Y)});
  }
  return speed;
}

/// CFL step dt <= min(dx, dy) / (2 speed), scaled by the safety factor.
inline double compute_dt(const Grid2D& grid, double speed, double cfl_safety) {
  if (!(speed > 0.0)) return std::numeric_limits<double>::infinity();
  return cfl_safety * std::min(grid.dx(), grid.dy()) / (2.0 * speed);
}

/// Splits `remaining` into equal steps no longer than `dt_max`.
inline double equal_step(double remaining, double dt_max) {
  if (!std::isfinite(dt_max) || dt_max >= remaining) return remaining;
  const double n = std::ceil(remaining / dt_max - 1e-12);
  return remaining / n;
}

inline Vec2 rusanov_flux(const ClassState& left, const ClassState& right,
                         const FluxParams& params, Axis axis) {
  const Vec2 fl = flux(left, params, axis);
  const Vec2 fr = flux(right, params, axis);
  const double alpha = std::max(directional_wave_speed(left, params, axis),
                                directional_wave_speed(right, params, axis));
  return {0.5 * (fl[0] + fr[0] - alpha * (right.rho - left.rho)),
          0.5 * (fl[1] + fr[1] - alpha * (right.mu - left.mu))};
}

namespace detail {

/// Clamps roundoff-size excursions and rejects anything larger.
inline void admit(ClassState& s, const FluxParams& params, std::size_t i, std::size_t j) {
  const AxisLaw law = axis_law(params, Axis::X);
  const double neg_tol = kSolverClampTolerance * law.r_max;
  auto fail = [&](const std::string& what) {
    throw StabilityError(what + " at cell (" + std::to_string(i) + ", " + std::to_string(j) +
                         "): rho=" + std::to_string(s.rho) + " mu=" + std::to_string(s.mu));
  };
  if (!std::isfinite(s.rho) || !std::isfinite(s.mu)) fail("non-finite density");
  if (s.rho < 0.0) {
    if (s.rho < -neg_tol) fail("negative car density");
    s.rho = 0.0;
  }
  if (s.mu < 0.0) {
    if (s.mu < -neg_tol) fail("negative truck density");
    s.mu = 0.0;
  }
  const double occ = (s.rho + law.truck_weight * s.mu) / law.r_max;
  if (occ > 1.0) {
    if (occ > 1.0 + kSolverClampTolerance) fail("occupancy above jam density");
    s.rho /= occ;
    s.mu /= occ;
  }
}

struct LineGhosts {
  ClassState before;
  ClassState after;
};

/// One conservative sweep along `axis`. Fluxes are evaluated on `source` and
/// the update is applied to `target` (the two coincide in the standard form).
inline Field2D sweep(const Field2D& source, const Field2D& target, const FluxParams& params,
                     Axis axis, double dt, const BoundaryCondition& bc) {
  const Grid2D& g = source.grid();
  const bool along_x = axis == Axis::X;
  const std::size_t n = along_x ? g.nx : g.ny;
  const std::size_t lines = along_x ? g.ny : g.nx;
  const double ratio = dt / (along_x ? g.dx() : g.dy());

  Field2D out = target;
  std::vector<ClassState> line(n + 2);
  std::vector<Vec2> fluxes(n + 1);
  for (std::size_t l = 0; l < lines; ++l) {
    auto at = [&](std::size_t k) -> const ClassState& {
      return along_x ? source(k, l) : source(l, k);
    };
    for (std::size_t k = 0; k < n; ++k) line[k + 1] = at(k);
    if (std::holds_alternative<PeriodicBoundary>(bc)) {
      line[0] = line[n];
      line[n + 1] = line[1];
    } else if (const auto* d = std::get_if<DirichletBoundary>(&bc)) {
      line[0] = along_x ? d->west : d->south;
      line[n + 1] = along_x ? d->east : d->north;
    } else {
      line[0] = line[1];
      line[n + 1] = line[n];
    }
    for (std::size_t k = 0; k <= n; ++k) fluxes[k] = rusanov_flux(line[k], line[k + 1], params, axis);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = along_x ? k : l;
      const std::size_t j = along_x ? l : k;
      ClassState& s = out(i, j);
      s.rho -= ratio * (fluxes[k + 1][0] - fluxes[k][0]);
      s.mu -= ratio * (fluxes[k + 1][1] - fluxes[k][1]);
      admit(s, params, i, j);
    }
  }
  return out;
}

}  // namespace detail

/// One Strang step: x over dt/2, y over dt, x over dt/2.
inline Field2D strang_step(const Field2D& field, const FluxParams& params, double dt,
                           const BoundaryCondition& bc,
                           SplittingForm form = SplittingForm::Standard) {
  using detail::sweep;
  if (form == SplittingForm::Symmetrized) {
    const Field2D a = strang_step(field, params, dt, bc, SplittingForm::Standard);
    Field2D b = sweep(field, field, params, Axis::Y, 0.5 * dt, bc);
    b = sweep(b, b, params, Axis::X, dt, bc);
    b = sweep(b, b, params, Axis::Y, 0.5 * dt, bc);
    auto out = b.values();
    const auto in = a.values();
    for (std::size_t k = 0; k < out.size(); ++k) {
      out[k] = {0.5 * (in[k].rho + out[k].rho), 0.5 * (in[k].mu + out[k].mu)};
    }
    return b;
  }
  Field2D star = sweep(field, field, params, Axis::X, 0.5 * dt, bc);
  Field2D star2 = sweep(star, star, params, Axis::Y, dt, bc);
  if (form == SplittingForm::Standard) return sweep(star2, star2, params, Axis::X, 0.5 * dt, bc);
  return sweep(star2, field, params, Axis::X, 0.5 * dt, bc);
}

inline void check_admissible(const Field2D& field, const FluxParams& params) {
  field.grid().validate();
  const AxisLaw law = axis_law(params, Axis::X);
  for (std::size_t j = 0; j < field.grid().ny; ++j) {
    for (std::size_t i = 0; i < field.grid().nx; ++i) {
      const ClassState& s = field(i, j);
      if (!(s.rho >= 0.0) || !(s.mu >= 0.0) ||
          (s.rho + law.truck_weight * s.mu) / law.r_max > 1.0 + kOccupancyClampTolerance) {
        throw DomainError("inadmissible initial state at cell (" + std::to_string(i) + ", " +
                          std::to_string(j) + ")");
      }
    }
  }
}

/// Runs to `config.t_final`, recomputing dt from the current field every step.
/// `on_snapshot` sees t = 0, every snapshot time and t_final.
inline void simulate(const Field2D& initial, const FluxParams& params, const SolverConfig& config,
                     const std::function<void(const Snapshot&)>& on_snapshot) {
  config.validate();
  check_admissible(initial, params);

  std::vector<double> targets;
  if (config.snapshot_interval > 0.0) {
    for (std::size_t k = 1;; ++k) {
      const double t = static_cast<double>(k) * config.snapshot_interval;
      if (t >= config.t_final * (1.0 - 1e-12)) break;
      targets.push_back(t);
    }
  }
  targets.push_back(config.t_final);

  Field2D field = initial;
  double t = 0.0;
  std::size_t step = 0;
  on_snapshot(Snapshot{t, step, field});
  for (double target : targets) {
    while (t < target) {
      if (step >= config.max_steps) throw ConvergenceError("time step budget exhausted");
      const double speed = max_wave_speed(field, params);
      const double dt = equal_step(target - t, compute_dt(field.grid(), speed, config.cfl_safety));
      field = strang_step(field, params, dt, config.boundary, config.splitting);
      ++step;
      t = (target - t - dt <= 1e-12 * target) ? target : t + dt;
    }
    on_snapshot(Snapshot{t, step, field});
  }
}

inline std::vector<Snapshot> simulate(const Field2D& initial, const FluxParams& params,
                                      const SolverConfig& config) {
  std::vector<Snapshot> out;
  simulate(initial, params, config, [&](const Snapshot& s) { out.push_back(s); });
  return out;
}

}  // namespace traffic2d
