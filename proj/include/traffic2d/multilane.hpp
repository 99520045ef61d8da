#pragma once

// Two-lane, two-class LWR model with lane-changing source terms, solved by a
// class-wise Godunov scheme followed by an explicit source update.
//
// Units are SI throughout: speeds in m/s, densities in veh/m, C in 1/m.

#include <traffic2d/error.hpp>
#include <traffic2d/model.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace traffic2d {

struct MultilaneParams {
  double c_rho = 0.0;
  double c_mu = 0.0;
  double r_max = 1.0;
  double C = 0.0;

  void validate() const {
    if (!(r_max > 0.0) || !std::isfinite(r_max)) throw ParameterError("r_max must be positive");
    if (!(C >= 0.0)) throw ParameterError("lane-change constant C must be non-negative");
    if (!std::isfinite(c_rho) || !std::isfinite(c_mu)) throw ParameterError("speeds must be finite");
  }
};

struct LaneGrid {
  double length = 1.0;
  std::size_t n = 3;
  double x0 = 0.0;

  double dx() const { return length / static_cast<double>(n); }
  double x_center(std::size_t i) const { return x0 + (static_cast<double>(i) + 0.5) * dx(); }
  void validate() const {
    if (n < 3) throw ParameterError("lane grid needs at least 3 cells");
    if (!(length > 0.0)) throw ParameterError("lane length must be positive");
  }
};

struct LaneField {
  LaneGrid grid;
  std::vector<ClassState> lane1;
  std::vector<ClassState> lane2;

  LaneField() = default;
  explicit LaneField(const LaneGrid& g) : grid(g), lane1(g.n), lane2(g.n) {}
};

enum class LaneBoundary { Outflow, Periodic };

/// Per-class speeds (u_rho, u_mu) of one lane from its own densities.
inline Vec2 lane_velocity(const ClassState& s, const MultilaneParams& p) {
  const double free = 1.0 - (s.rho + s.mu) / p.r_max;
  return {p.c_rho * free, p.c_mu * free};
}

/// Lane-change sources (S_rho, S_mu): positive values move vehicles from
/// lane 1 to lane 2.
inline Vec2 source_terms(const ClassState& lane1, const ClassState& lane2,
                         const MultilaneParams& p) {
  const Vec2 u1 = lane_velocity(lane1, p);
  const Vec2 u2 = lane_velocity(lane2, p);
  const double d_rho = u2[0] - u1[0];
  const double d_mu = u2[1] - u1[1];
  return {p.C * (std::max(d_rho, 0.0) * lane1.rho + std::min(d_rho, 0.0) * lane2.rho),
          p.C * (std::max(d_mu, 0.0) * lane1.mu + std::min(d_mu, 0.0) * lane2.mu)};
}

/// Exact Godunov flux of v -> v c (1 - (v + other) / r_max) with the other
/// class frozen at `other` (a density).
inline double godunov_flux_scalar(double left, double right, double c, double other,
                                  double r_max) {
  auto f = [&](double v) { return v * c * (1.0 - (v + other) / r_max); };
  const double lo = std::min(left, right), hi = std::max(left, right);
  double best = f(left);
  const double fr = f(right);
  const double crit = 0.5 * (r_max - other);
  if (left <= right) {
    best = std::min(best, fr);
    if (crit > lo && crit < hi) best = std::min(best, f(crit));
  } else {
    best = std::max(best, fr);
    if (crit > lo && crit < hi) best = std::max(best, f(crit));
  }
  return best;
}

/// Largest characteristic speed over both lanes.
inline double multilane_wave_speed(const LaneField& f, const MultilaneParams& p) {
  const FluxParams law = PerClassFlux{p.c_rho, 0.0, p.c_mu, 0.0, p.r_max};
  double s = 0.0;
  for (const auto* lane : {&f.lane1, &f.lane2}) {
    for (const auto& st : *lane) {
      s = std::max(s, spectral_radius(jacobian(st, law, Axis::X)));
    }
  }
  return s;
}

/// CFL step dx / (2 speed) scaled by the safety factor, further limited by
/// dt C max|c| <= 1 for the source update.
inline double multilane_dt(const LaneField& f, const MultilaneParams& p, double cfl_safety) {
  const double speed = multilane_wave_speed(f, p);
  double dt = speed > 0.0 ? cfl_safety * f.grid.dx() / (2.0 * speed)
                          : std::numeric_limits<double>::infinity();
  const double rate = p.C * std::max(std::abs(p.c_rho), std::abs(p.c_mu));
  if (rate > 0.0) dt = std::min(dt, cfl_safety / rate);
  return dt;
}

inline constexpr double kLaneClampTolerance = 1e-10;

namespace detail {

/// Clamps roundoff excursions; an occupancy overshoot is taken from the
/// car density so that trucks stay untouched.
inline void admit_lane(ClassState& s, const MultilaneParams& p, int lane, std::size_t i) {
  const double tol = kLaneClampTolerance * p.r_max;
  auto fail = [&](const std::string& what) {
    throw StabilityError(what + " in lane " + std::to_string(lane) + " cell " + std::to_string(i));
  };
  if (!std::isfinite(s.rho) || !std::isfinite(s.mu)) fail("non-finite density");
  if (s.rho < 0.0) {
    if (s.rho < -tol) fail("negative car density");
    s.rho = 0.0;
  }
  if (s.mu < 0.0) {
    if (s.mu < -tol) fail("negative truck density");
    s.mu = 0.0;
  }
  const double excess = s.rho + s.mu - p.r_max;
  if (excess > 0.0) {
    if (excess > tol) fail("occupancy above jam density");
    if (s.rho >= excess) {
      s.rho -= excess;
    } else {
      s.mu -= excess - s.rho;
      s.rho = 0.0;
    }
  }
}

inline std::vector<ClassState> transport(const std::vector<ClassState>& lane, const LaneGrid& g,
                                         const MultilaneParams& p, double dt, LaneBoundary bc) {
  const std::size_t n = lane.size();
  std::vector<ClassState> ext(n + 2);
  for (std::size_t k = 0; k < n; ++k) ext[k + 1] = lane[k];
  if (bc == LaneBoundary::Periodic) {
    ext[0] = lane[n - 1];
    ext[n + 1] = lane[0];
  } else {
    ext[0] = lane[0];
    ext[n + 1] = lane[n - 1];
  }
  std::vector<Vec2> flux(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    const ClassState& l = ext[k];
    const ClassState& r = ext[k + 1];
    // The frozen other class takes the larger of the two cell values, so a
    // jammed neighbour cannot be entered.
    flux[k] = {godunov_flux_scalar(l.rho, r.rho, p.c_rho, std::max(l.mu, r.mu), p.r_max),
               godunov_flux_scalar(l.mu, r.mu, p.c_mu, std::max(l.rho, r.rho), p.r_max)};
  }
  const double ratio = dt / g.dx();
  std::vector<ClassState> out = lane;
  for (std::size_t k = 0; k < n; ++k) {
    out[k].rho -= ratio * (flux[k + 1][0] - flux[k][0]);
    out[k].mu -= ratio * (flux[k + 1][1] - flux[k][1]);
  }
  return out;
}

}  // namespace detail

/// One step: Godunov transport on each lane, then explicit lane-change
/// sources evaluated at the transported state (lane 1 loses S, lane 2 gains S).
inline LaneField multilane_step(const LaneField& f, const MultilaneParams& p, double dt,
                                LaneBoundary bc) {
  LaneField out = f;
  out.lane1 = detail::transport(f.lane1, f.grid, p, dt, bc);
  out.lane2 = detail::transport(f.lane2, f.grid, p, dt, bc);
  for (std::size_t i = 0; i < f.grid.n; ++i) {
    detail::admit_lane(out.lane1[i], p, 1, i);
    detail::admit_lane(out.lane2[i], p, 2, i);
  }
  for (std::size_t i = 0; i < f.grid.n; ++i) {
    const Vec2 s = source_terms(out.lane1[i], out.lane2[i], p);
    out.lane1[i].rho -= dt * s[0];
    out.lane2[i].rho += dt * s[0];
    out.lane1[i].mu -= dt * s[1];
    out.lane2[i].mu += dt * s[1];
    detail::admit_lane(out.lane1[i], p, 1, i);
    detail::admit_lane(out.lane2[i], p, 2, i);
  }
  return out;
}

struct LaneMass {
  double rho1 = 0.0, mu1 = 0.0, rho2 = 0.0, mu2 = 0.0;
};

inline LaneMass lane_mass(const LaneField& f) {
  LaneMass m;
  for (std::size_t i = 0; i < f.grid.n; ++i) {
    m.rho1 += f.lane1[i].rho;
    m.mu1 += f.lane1[i].mu;
    m.rho2 += f.lane2[i].rho;
    m.mu2 += f.lane2[i].mu;
  }
  const double dx = f.grid.dx();
  m.rho1 *= dx;
  m.mu1 *= dx;
  m.rho2 *= dx;
  m.mu2 *= dx;
  return m;
}

struct MultilaneConfig {
  double t_final = 1.0;
  double cfl_safety = 0.9;
  LaneBoundary boundary = LaneBoundary::Outflow;
  double snapshot_interval = 0.0;
  std::size_t max_steps = 10'000'000;

  void validate() const {
    if (!(t_final > 0.0)) throw ParameterError("final time must be positive");
    if (!(cfl_safety > 0.0) || cfl_safety > 1.0) throw ParameterError("cfl_safety must lie in (0, 1]");
    if (snapshot_interval < 0.0) throw ParameterError("snapshot interval must be non-negative");
  }
};

struct LaneSnapshot {
  double t;
  std::size_t step;
  LaneField field;
};

inline void check_admissible(const LaneField& f, const MultilaneParams& p) {
  f.grid.validate();
  if (f.lane1.size() != f.grid.n || f.lane2.size() != f.grid.n) {
    throw ParameterError("lane arrays do not match the grid");
  }
  for (const auto* lane : {&f.lane1, &f.lane2}) {
    for (const auto& s : *lane) {
      if (!(s.rho >= 0.0) || !(s.mu >= 0.0) ||
          s.rho + s.mu > p.r_max * (1.0 + kOccupancyClampTolerance)) {
        throw DomainError("inadmissible initial lane state");
      }
    }
  }
}

inline void simulate_multilane(const LaneField& initial, const MultilaneParams& p,
                               const MultilaneConfig& cfg,
                               const std::function<void(const LaneSnapshot&)>& on_snapshot) {
  p.validate();
  cfg.validate();
  check_admissible(initial, p);
  std::vector<double> targets;
  if (cfg.snapshot_interval > 0.0) {
    for (std::size_t k = 1;; ++k) {
      const double t = static_cast<double>(k) * cfg.snapshot_interval;
      if (t >= cfg.t_final * (1.0 - 1e-12)) break;
      targets.push_back(t);
    }
  }
  targets.push_back(cfg.t_final);
  LaneField f = initial;
  double t = 0.0;
  std::size_t step = 0;
  on_snapshot({t, step, f});
  for (double target : targets) {
    while (t < target) {
      if (step >= cfg.max_steps) throw ConvergenceError("time step budget exhausted");
      const double dt_max = multilane_dt(f, p, cfg.cfl_safety);
      const double remaining = target - t;
      double dt = remaining;
      if (std::isfinite(dt_max) && dt_max < remaining) {
        dt = remaining / std::ceil(remaining / dt_max - 1e-12);
      }
      f = multilane_step(f, p, dt, cfg.boundary);
      ++step;
      t = (target - t - dt <= 1e-12 * target) ? target : t + dt;
    }
    on_snapshot({t, step, f});
  }
}

}  // namespace traffic2d
