#pragma once

// From trajectories to macroscopic series, and bounded least-squares fits of
// the flux coefficients.

#include <traffic2d/error.hpp>
#include <traffic2d/linear_fit.hpp>
#include <traffic2d/trajectory.hpp>
#include <traffic2d/units.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace traffic2d {

struct Velocity2 {
  double vx = 0.0;
  double vy = 0.0;
};

/// Least-squares slopes of x(t) and y(t) for one vehicle.
inline Velocity2 constant_speed_fit(const VehicleTrack& track) {
  return {fit_line(track.t, track.x).slope, fit_line(track.t, track.y).slope};
}

enum class FitVariant { Shared, PerClass };

inline std::string to_string(FitVariant v) { return v == FitVariant::Shared ? "shared" : "per_class"; }

inline FitVariant parse_fit_variant(const std::string& s) {
  if (s == "shared") return FitVariant::Shared;
  if (s == "per_class") return FitVariant::PerClass;
  throw ParameterError("unknown fit variant '" + s + "'");
}

/// One time bin. Densities in veh/km, speeds in km/h, fluxes in veh/h.
/// Speeds and fluxes of a class are empty when the class has no vehicle
/// with a usable speed in the bin.
struct MacroBin {
  double t = 0.0;
  double rho = 0.0;
  double mu = 0.0;
  std::optional<double> ux_rho, uy_rho, ux_mu, uy_mu;
  /// Shared speed: sum of the class means.
  std::optional<double> ux, uy;
  std::optional<double> qx_rho, qy_rho, qx_mu, qy_mu;
};

struct MacroSeries {
  FitVariant variant = FitVariant::Shared;
  double dt = 1.0;
  std::size_t kappa = 1;
  double lx = 0.0;
  std::vector<MacroBin> bins;
};

namespace detail {

inline std::optional<double> mean(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline std::optional<double> times(double a, const std::optional<double>& b) {
  if (!b) return std::nullopt;
  return a * *b;
}

}  // namespace detail

/// Bins the data into [t0 + k dt, t0 + (k+1) dt) starting at the first sample.
/// A vehicle is present in a bin if it has a sample there; its speed is the
/// slope of its whole track.
inline MacroSeries macro_extract(const TrajectoryDataset& data, double lx, double dt,
                                 FitVariant variant) {
  if (data.empty()) throw InputError("empty trajectory dataset");
  if (!(dt > 0.0)) throw ParameterError("bin width dt must be positive");
  if (!(lx > 0.0)) throw ParameterError("road length Lx must be positive");
  validate_dataset(data, lx);

  const auto tracks = group_by_vehicle(data);
  double t0 = std::numeric_limits<double>::infinity(), t1 = -t0;
  for (const auto& s : data) {
    t0 = std::min(t0, s.t);
    t1 = std::max(t1, s.t);
  }
  const auto nbins = static_cast<std::size_t>(std::floor((t1 - t0) / dt)) + 1;

  struct Accum {
    std::size_t n_rho = 0, n_mu = 0;
    std::vector<double> vx_rho, vy_rho, vx_mu, vy_mu;
  };
  std::vector<Accum> acc(nbins);
  for (const auto& tr : tracks) {
    std::optional<Velocity2> v;
    if (tr.t.size() >= 2 && tr.t.front() != tr.t.back()) {
      const Velocity2 mps = constant_speed_fit(tr);
      v = Velocity2{units::mps_to_kmh(mps.vx), units::mps_to_kmh(mps.vy)};
    }
    std::size_t last = nbins;
    for (double t : tr.t) {
      const auto k = std::min(nbins - 1, static_cast<std::size_t>(std::floor((t - t0) / dt)));
      if (k == last) continue;
      last = k;
      Accum& a = acc[k];
      const bool car = tr.vehicle_class == VehicleClass::Car;
      ++(car ? a.n_rho : a.n_mu);
      if (v) {
        (car ? a.vx_rho : a.vx_mu).push_back(v->vx);
        (car ? a.vy_rho : a.vy_mu).push_back(v->vy);
      }
    }
  }

  MacroSeries out;
  out.variant = variant;
  out.dt = dt;
  out.kappa = 1;
  out.lx = lx;
  const double per_km = units::kMetersPerKm / lx;
  for (std::size_t k = 0; k < nbins; ++k) {
    const Accum& a = acc[k];
    MacroBin b;
    b.t = t0 + static_cast<double>(k) * dt;
    b.rho = static_cast<double>(a.n_rho) * per_km;
    b.mu = static_cast<double>(a.n_mu) * per_km;
    b.ux_rho = detail::mean(a.vx_rho);
    b.uy_rho = detail::mean(a.vy_rho);
    b.ux_mu = detail::mean(a.vx_mu);
    b.uy_mu = detail::mean(a.vy_mu);
    if (b.ux_rho || b.ux_mu) {
      b.ux = b.ux_rho.value_or(0.0) + b.ux_mu.value_or(0.0);
      b.uy = b.uy_rho.value_or(0.0) + b.uy_mu.value_or(0.0);
    }
    if (variant == FitVariant::Shared) {
      b.qx_rho = detail::times(b.rho, b.ux);
      b.qy_rho = detail::times(b.rho, b.uy);
      b.qx_mu = detail::times(b.mu, b.ux);
      b.qy_mu = detail::times(b.mu, b.uy);
    } else {
      b.qx_rho = detail::times(b.rho, b.ux_rho);
      b.qy_rho = detail::times(b.rho, b.uy_rho);
      b.qx_mu = detail::times(b.mu, b.ux_mu);
      b.qy_mu = detail::times(b.mu, b.uy_mu);
    }
    out.bins.push_back(b);
  }
  return out;
}

/// Averages non-overlapping windows of kappa bins. Every quantity is the mean
/// of its defined entries; the trailing window may be shorter.
inline MacroSeries aggregate(const MacroSeries& series, std::size_t kappa) {
  if (kappa < 1) throw ParameterError("kappa must be at least 1");
  MacroSeries out = series;
  out.kappa = series.kappa * kappa;
  out.dt = series.dt * static_cast<double>(kappa);
  out.bins.clear();
  using Field = std::optional<double> MacroBin::*;
  static constexpr Field kOptional[] = {&MacroBin::ux_rho, &MacroBin::uy_rho, &MacroBin::ux_mu,
                                        &MacroBin::uy_mu,  &MacroBin::ux,     &MacroBin::uy,
                                        &MacroBin::qx_rho, &MacroBin::qy_rho, &MacroBin::qx_mu,
                                        &MacroBin::qy_mu};
  for (std::size_t start = 0; start < series.bins.size(); start += kappa) {
    const std::size_t end = std::min(series.bins.size(), start + kappa);
    const double n = static_cast<double>(end - start);
    MacroBin b;
    b.t = series.bins[start].t;
    for (std::size_t k = start; k < end; ++k) {
      b.rho += series.bins[k].rho / n;
      b.mu += series.bins[k].mu / n;
    }
    for (Field f : kOptional) {
      std::vector<double> vals;
      for (std::size_t k = start; k < end; ++k) {
        if (const auto& v = series.bins[k].*f) vals.push_back(*v);
      }
      b.*f = detail::mean(vals);
    }
    out.bins.push_back(b);
  }
  return out;
}

/// Jam density lanes / effective_length in veh/km.
inline double rmax_from_geometry(int lanes, double effective_length_m) {
  if (lanes < 1) throw ParameterError("need at least one lane");
  if (!(effective_length_m > 0.0)) throw ParameterError("effective length must be positive");
  return static_cast<double>(lanes) * units::kMetersPerKm / effective_length_m;
}

struct GoldenResult {
  double x = 0.0;
  double fx = 0.0;
  std::size_t iterations = 0;
};

/// Golden-section minimization of a unimodal f on [lo, hi] until the bracket
/// is shorter than tol. The bounds themselves are also compared.
inline GoldenResult golden_section_minimize(const std::function<double(double)>& f, double lo,
                                            double hi, double tol = 1e-8) {
  if (!(lo <= hi)) throw ParameterError("golden section: lower bound above upper bound");
  if (!(tol > 0.0)) throw ParameterError("golden section: tolerance must be positive");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  std::size_t it = 0;
  while (b - a > tol) {
    ++it;
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  GoldenResult best{0.5 * (a + b), f(0.5 * (a + b)), it};
  for (double edge : {lo, hi}) {
    const double fe = f(edge);
    if (fe < best.fx) best = {edge, fe, it};
  }
  return best;
}

struct Bounds {
  double lower = 0.0;
  double upper = 0.0;
};

struct FitBounds {
  Bounds x{0.0, 200.0};
  Bounds y{-10.0, 10.0};
};

struct CoefficientFit {
  std::string name;
  /// Empty when the coefficient is not identifiable from the data.
  std::optional<double> value;
  double residual = 0.0;
  std::size_t iterations = 0;
  std::size_t bins_used = 0;
  Bounds bounds;
};

struct FitResult {
  FitVariant variant = FitVariant::Shared;
  double r_max = 0.0;
  std::vector<CoefficientFit> coefficients;
  /// sqrt of the summed squared residuals of all identified coefficients.
  double residual_l2 = 0.0;

  const CoefficientFit& coefficient(const std::string& name) const {
    for (const auto& c : coefficients) {
      if (c.name == name) return c;
    }
    throw ParameterError("no coefficient '" + name + "'");
  }
};

/// One term of a least-squares objective: data flux q against c * phi.
struct FluxTerm {
  double q;
  double phi;
};

/// The minimizer of sum (q - c phi)^2 restricted to the bounds.
inline double quadratic_oracle(const std::vector<FluxTerm>& terms, Bounds bounds) {
  double num = 0.0, den = 0.0;
  for (const auto& t : terms) {
    num += t.q * t.phi;
    den += t.phi * t.phi;
  }
  if (den == 0.0) throw ParameterError("flat objective");
  return std::clamp(num / den, bounds.lower, bounds.upper);
}

namespace detail {

inline double sq_residual(const std::vector<FluxTerm>& terms, double c) {
  double s = 0.0;
  for (const auto& t : terms) s += (t.q - c * t.phi) * (t.q - c * t.phi);
  return s;
}

inline CoefficientFit fit_terms(const std::string& name, const std::vector<FluxTerm>& terms,
                                std::size_t bins, Bounds bounds, bool throw_if_flat) {
  CoefficientFit fit;
  fit.name = name;
  fit.bounds = bounds;
  fit.bins_used = bins;
  double den = 0.0;
  for (const auto& t : terms) den += t.phi * t.phi;
  if (den == 0.0) {
    if (throw_if_flat) throw ParameterError("flat objective for " + name);
    return fit;
  }
  const auto g = golden_section_minimize([&](double c) { return sq_residual(terms, c); },
                                         bounds.lower, bounds.upper);
  fit.value = g.x;
  fit.residual = g.fx;
  fit.iterations = g.iterations;
  return fit;
}

inline void finish(FitResult& r) {
  double s = 0.0;
  for (const auto& c : r.coefficients) {
    if (c.value) s += c.residual;
  }
  r.residual_l2 = std::sqrt(s);
}

}  // namespace detail

/// Objective terms (q, phi = density * (1 - occupancy)) of one coefficient.
/// The shared variant pools both classes in one objective.
inline std::vector<FluxTerm> flux_terms(const MacroSeries& s, double r_max, bool x_axis,
                                        bool include_rho, bool include_mu, std::size_t* bins = nullptr) {
  std::vector<FluxTerm> out;
  std::size_t used = 0;
  for (const auto& b : s.bins) {
    const double free = 1.0 - (b.rho + b.mu) / r_max;
    const auto& q_rho = x_axis ? b.qx_rho : b.qy_rho;
    const auto& q_mu = x_axis ? b.qx_mu : b.qy_mu;
    bool any = false;
    if (include_rho && q_rho) {
      out.push_back({*q_rho, b.rho * free});
      any = true;
    }
    if (include_mu && q_mu) {
      out.push_back({*q_mu, b.mu * free});
      any = true;
    }
    if (any) ++used;
  }
  if (bins) *bins = used;
  return out;
}

/// Fits (c_x, c_y) of the shared-speed fluxes, one scalar problem each.
inline FitResult fit_shared(const MacroSeries& s, double r_max, const FitBounds& bounds = {}) {
  if (!(r_max > 0.0)) throw ParameterError("r_max must be positive");
  FitResult r;
  r.variant = FitVariant::Shared;
  r.r_max = r_max;
  for (bool x : {true, false}) {
    std::size_t bins = 0;
    const auto terms = flux_terms(s, r_max, x, true, true, &bins);
    if (bins < 2) throw InputError("fit needs at least two usable bins");
    r.coefficients.push_back(detail::fit_terms(x ? "c_x" : "c_y", terms, bins, x ? bounds.x : bounds.y, true));
  }
  detail::finish(r);
  return r;
}

/// Fits (c_x_rho, c_y_rho, c_x_mu, c_y_mu); a class without data is reported
/// as unidentifiable instead of failing the whole fit.
inline FitResult fit_per_class(const MacroSeries& s, double r_max, const FitBounds& bounds = {}) {
  if (!(r_max > 0.0)) throw ParameterError("r_max must be positive");
  FitResult r;
  r.variant = FitVariant::PerClass;
  r.r_max = r_max;
  std::size_t usable = 0;
  for (bool rho : {true, false}) {
    for (bool x : {true, false}) {
      std::size_t bins = 0;
      const auto terms = flux_terms(s, r_max, x, rho, !rho, &bins);
      usable = std::max(usable, bins);
      const std::string name = std::string(x ? "c_x" : "c_y") + (rho ? "_rho" : "_mu");
      r.coefficients.push_back(detail::fit_terms(name, terms, bins, x ? bounds.x : bounds.y, false));
    }
  }
  if (usable < 2) throw InputError("fit needs at least two usable bins");
  detail::finish(r);
  return r;
}

}  // namespace traffic2d
