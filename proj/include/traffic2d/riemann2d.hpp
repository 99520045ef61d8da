#pragma once

// Two-dimensional Riemann problems for the scalar total density r = rho + mu
// with the convex fluxes f(r) = c_x r (1 - r), g(r) = c_y r (1 - r), c < 0.
//
// Everything lives in the similarity plane (xi, eta) = (x/t, y/t).

#include <traffic2d/error.hpp>
#include <traffic2d/grid.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace traffic2d {

struct SimilarityPoint {
  double xi = 0.0;
  double eta = 0.0;
};

inline double distance(const SimilarityPoint& a, const SimilarityPoint& b) {
  return std::hypot(a.xi - b.xi, a.eta - b.eta);
}

/// Scalar fluxes of the total density, r normalized to [0, 1].
struct ScalarFlux {
  double c_x = -1.0;
  double c_y = -1.0;

  /// Classifier-facing constructor: both coefficients must be negative so
  /// that the fluxes are convex.
  static ScalarFlux convex(double c_x, double c_y) {
    if (!(c_x < 0.0) || !(c_y < 0.0)) {
      throw ParameterError("convex scalar flux needs c_x < 0 and c_y < 0");
    }
    return {c_x, c_y};
  }

  double f(double r) const { return r * c_x * (1.0 - r); }
  double g(double r) const { return r * c_y * (1.0 - r); }
  double df(double r) const { return c_x * (1.0 - 2.0 * r); }
  double dg(double r) const { return c_y * (1.0 - 2.0 * r); }
  double speed_scale() const { return std::max(std::abs(c_x), std::abs(c_y)); }
};

/// Constant states in the four quadrants: Q1 = (+,+), Q2 = (-,+), Q3 = (-,-), Q4 = (+,-).
struct QuadrantData {
  double v1 = 0.0;
  double v2 = 0.0;
  double v3 = 0.0;
  double v4 = 0.0;

  void validate() const {
    for (double v : {v1, v2, v3, v4}) {
      if (!(v >= 0.0 && v <= 1.0)) throw ParameterError("quadrant states must lie in [0, 1]");
    }
  }
  std::array<double, 4> values() const { return {v1, v2, v3, v4}; }
};

enum class WaveCase {
  NoShocks,
  NoRarefactions,
  OneShock,
  OneRarefaction,
  TwoShocksTwoRarefactions,
  OutsideEnumeration,
};

enum class SubCase { None, A, B, NonNeighbor, Neighbor };

struct TriplePoints {
  SimilarityPoint a;  ///< junction of the v1, v2, v3 regions
  SimilarityPoint b;  ///< junction of the v3, v4, v1 regions
  SimilarityPoint o;  ///< where the v1|v3 shock meets the singular line
};

struct WaveStructure {
  WaveCase wave_case = WaveCase::OutsideEnumeration;
  SubCase sub_case = SubCase::None;
  /// All four states equal: no waves at all.
  bool degenerate = false;
  QuadrantData data;
  ScalarFlux flux;
  std::optional<TriplePoints> triple_points;
};

inline std::string to_string(WaveCase c) {
  switch (c) {
    case WaveCase::NoShocks: return "NoShocks";
    case WaveCase::NoRarefactions: return "NoRarefactions";
    case WaveCase::OneShock: return "OneShock";
    case WaveCase::OneRarefaction: return "OneRarefaction";
    case WaveCase::TwoShocksTwoRarefactions: return "TwoShocksTwoRarefactions";
    case WaveCase::OutsideEnumeration: return "OutsideEnumeration";
  }
  return "?";
}

inline std::string to_string(SubCase s) {
  switch (s) {
    case SubCase::None: return "None";
    case SubCase::A: return "A";
    case SubCase::B: return "B";
    case SubCase::NonNeighbor: return "NonNeighbor";
    case SubCase::Neighbor: return "Neighbor";
  }
  return "?";
}

/// Point of the singular line for the state v: (f'(v), g'(v)).
inline SimilarityPoint singular_line(const ScalarFlux& flux, double v) {
  return {flux.df(v), flux.dg(v)};
}

/// Divided differences (gamma, nu) of f and g between two states. For equal
/// states the closed form reduces to the tangents f'(v), g'(v).
inline std::pair<double, double> secants(const ScalarFlux& flux, double v_minus, double v_plus) {
  const double s = 1.0 - v_plus - v_minus;
  return {flux.c_x * s, flux.c_y * s};
}

/// Slope d(eta)/d(xi) of a shock between v_minus and v_plus through p.
/// Shock curves run along (gamma - xi, nu - eta); an empty result marks a
/// vertical tangent (including the 0/0 tangency with the singular line).
inline std::optional<double> rh_slope(const ScalarFlux& flux, const SimilarityPoint& p,
                                      double v_minus, double v_plus) {
  const auto [gamma, nu] = secants(flux, v_minus, v_plus);
  const double den = gamma - p.xi;
  const double scale = std::max({1.0, std::abs(gamma), std::abs(p.xi)});
  if (std::abs(den) <= 1e-14 * scale) return std::nullopt;
  return (nu - p.eta) / den;
}

/// Shock normal. `deta` multiplies the x-flux secant and `dxi` the y-flux
/// secant, so (deta, dxi) is the (xi, eta)-components of the normal vector.
struct ShockNormal {
  double deta = 0.0;
  double dxi = 0.0;
};

/// Entropy check for a jump from v_minus to v_plus with the normal pointing to
/// the v_plus side. The inner expression c_x (v+ - v0) deta + c_y (v+ - v0) dxi
/// is affine in v0 and vanishes at v0 = v+, so checking v0 = v- suffices.
inline bool oleinik_admissible(const ScalarFlux& flux, double v_minus, double v_plus,
                               const ShockNormal& normal) {
  if (normal.deta == 0.0 && normal.dxi == 0.0) throw ParameterError("zero shock normal");
  if (v_minus == v_plus) return true;
  auto expression = [&](double v0) {
    const auto [g0, n0] = secants(flux, v_minus, v0);
    const auto [gp, np] = secants(flux, v_minus, v_plus);
    return (g0 - gp) * normal.deta + (n0 - np) * normal.dxi;
  };
  const double scale = flux.speed_scale() * std::abs(v_plus - v_minus) *
                       std::hypot(normal.deta, normal.dxi);
  const double tol = -1e-14 * scale;
  return expression(v_minus) >= tol && expression(v_plus) >= tol;
}

inline bool predicate_holds(bool strict, double lhs, double rhs) {
  return strict ? lhs > rhs : lhs >= rhs;
}

/// Case tag by the ordering predicates, first match in the order (1) to (5).
inline WaveStructure classify(const QuadrantData& q, const ScalarFlux& flux = ScalarFlux{}) {
  q.validate();
  const double v1 = q.v1, v2 = q.v2, v3 = q.v3, v4 = q.v4;
  WaveStructure w;
  w.data = q;
  w.flux = flux;
  if (v1 == v2 && v2 == v3 && v3 == v4) {
    w.wave_case = WaveCase::NoShocks;
    w.degenerate = true;
    return w;
  }
  if (v3 < v2 && v2 < v4 && v4 < v1) {
    w.wave_case = WaveCase::NoShocks;
  } else if (v3 > v4 && v4 > v2 && v2 > v1) {
    w.wave_case = WaveCase::NoRarefactions;
    TriplePoints tp;
    tp.a = {secants(flux, v1, v2).first, secants(flux, v2, v3).second};
    tp.b = {secants(flux, v3, v4).first, secants(flux, v1, v4).second};
    tp.o = {secants(flux, v1, v3).first, secants(flux, v1, v3).second};
    w.triple_points = tp;
  } else if (v4 > v1 && v1 >= v2 && v2 >= v3) {
    w.wave_case = WaveCase::OneShock;
    w.sub_case = SubCase::A;
  } else if (v2 < v3 && v3 <= v4 && v4 <= v1) {
    w.wave_case = WaveCase::OneShock;
    w.sub_case = SubCase::B;
  } else if (v1 <= v2 && v2 <= v3 && v3 < v4) {
    w.wave_case = WaveCase::OneRarefaction;
    w.sub_case = SubCase::A;
  } else if (v2 < v1 && v1 <= v4 && v4 <= v3) {
    w.wave_case = WaveCase::OneRarefaction;
    w.sub_case = SubCase::B;
  } else if (v4 > v1 && v1 >= v3 && v3 > v2) {
    w.wave_case = WaveCase::TwoShocksTwoRarefactions;
    w.sub_case = SubCase::NonNeighbor;
  } else if (v4 > v3 && v3 > v1 && v1 > v2) {
    w.wave_case = WaveCase::TwoShocksTwoRarefactions;
    w.sub_case = SubCase::Neighbor;
  }
  return w;
}

// ---------------------------------------------------------------------------
// Shock curve tracing

enum class TraceStop { Tangency, DomainExit, Predicate };

struct TraceOptions {
  double step = 1e-3;
  std::size_t max_steps = 1'000'000;
  /// Stop once |(gamma - xi, nu - eta)| falls below this (times the speed
  /// scale) or below the step length.
  double singular_eps = 1e-9;
  SimilarityPoint box_min{-std::numeric_limits<double>::infinity(),
                          -std::numeric_limits<double>::infinity()};
  SimilarityPoint box_max{std::numeric_limits<double>::infinity(),
                          std::numeric_limits<double>::infinity()};
};

struct ShockTrace {
  std::vector<SimilarityPoint> points;
  TraceStop stop = TraceStop::DomainExit;
  bool admissible = true;
  /// Index of the first segment failing the entropy check, if any.
  std::optional<std::size_t> first_inadmissible_segment;
};

/// A state function that ignores the position.
inline auto constant_state(double v) {
  return [v](const SimilarityPoint&) { return v; };
}

/// State inside a centered rarefaction of the x-flux between `a` and `b`:
/// inverts f'(v) = xi and clamps to the fan's end states.
inline auto x_fan_state(const ScalarFlux& flux, double a, double b) {
  return [flux, lo = std::min(a, b), hi = std::max(a, b)](const SimilarityPoint& p) {
    return std::clamp(0.5 * (1.0 - p.xi / flux.c_x), lo, hi);
  };
}

/// Same for the y-flux.
inline auto y_fan_state(const ScalarFlux& flux, double a, double b) {
  return [flux, lo = std::min(a, b), hi = std::max(a, b)](const SimilarityPoint& p) {
    return std::clamp(0.5 * (1.0 - p.eta / flux.c_y), lo, hi);
  };
}

/// Integrates a shock curve with classical RK4 in arclength. `v_plus` is the
/// state on the right-hand side of the direction of travel, `v_minus` on the
/// left. Stops at tangency with the singular line, on leaving the box, or when
/// `stop(p)` returns true.
template <class Minus, class Plus, class Stop>
ShockTrace trace_shock_curve(const ScalarFlux& flux, Minus&& v_minus, Plus&& v_plus,
                             SimilarityPoint start, std::array<double, 2> initial_direction,
                             const TraceOptions& opts, Stop&& stop) {
  if (!(opts.step > 0.0)) throw ParameterError("trace step must be positive");
  const double scale = flux.speed_scale();
  auto side = [&](const SimilarityPoint& p) { return flux.c_y * p.xi - flux.c_x * p.eta; };
  if (std::abs(side(start)) <= 1e-14 * scale) {
    throw ParameterError("shock trace cannot start on the singular line");
  }
  auto field = [&](const SimilarityPoint& p) -> std::array<double, 2> {
    const auto [gamma, nu] = secants(flux, v_minus(p), v_plus(p));
    return {gamma - p.xi, nu - p.eta};
  };
  // Unit tangent aligned with `ref`; zero when the field vanishes.
  auto tangent = [&](const SimilarityPoint& p, const std::array<double, 2>& ref) {
    auto d = field(p);
    const double n = std::hypot(d[0], d[1]);
    if (n == 0.0) return std::array<double, 2>{0.0, 0.0};
    d[0] /= n;
    d[1] /= n;
    if (d[0] * ref[0] + d[1] * ref[1] < 0.0) {
      d[0] = -d[0];
      d[1] = -d[1];
    }
    return d;
  };
  auto inside = [&](const SimilarityPoint& p) {
    return p.xi >= opts.box_min.xi && p.xi <= opts.box_max.xi && p.eta >= opts.box_min.eta &&
           p.eta <= opts.box_max.eta;
  };

  ShockTrace out;
  out.points.push_back(start);
  const double side0 = side(start);
  std::array<double, 2> ref = initial_direction;
  SimilarityPoint p = start;
  const double h = opts.step;
  for (std::size_t k = 0;; ++k) {
    if (k >= opts.max_steps) throw ConvergenceError("shock trace exceeded its step budget");
    const auto d0 = field(p);
    // The field vanishes (or flips, once a step has jumped over its zero)
    // where the curve runs into the singular line.
    if (std::hypot(d0[0], d0[1]) < std::max(opts.singular_eps * scale, h) ||
        (k > 0 && d0[0] * ref[0] + d0[1] * ref[1] <= 0.0)) {
      out.stop = TraceStop::Tangency;
      break;
    }
    const auto k1 = tangent(p, ref);
    const auto k2 = tangent({p.xi + 0.5 * h * k1[0], p.eta + 0.5 * h * k1[1]}, k1);
    const auto k3 = tangent({p.xi + 0.5 * h * k2[0], p.eta + 0.5 * h * k2[1]}, k1);
    const auto k4 = tangent({p.xi + h * k3[0], p.eta + h * k3[1]}, k1);
    SimilarityPoint next{p.xi + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                         p.eta + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])};
    bool reached_zero = false;
    {
      // Cut the step at the zero of the field if it was jumped over.
      const std::array<double, 2> seg{next.xi - p.xi, next.eta - p.eta};
      auto along = [&](double s) {
        const auto d = field({p.xi + s * seg[0], p.eta + s * seg[1]});
        return d[0] * seg[0] + d[1] * seg[1];
      };
      if (along(1.0) < 0.0 && along(0.0) > 0.0) {
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          (along(mid) > 0.0 ? lo : hi) = mid;
        }
        next = {p.xi + lo * seg[0], p.eta + lo * seg[1]};
        reached_zero = true;
      }
    }
    if (side(next) * side0 <= 0.0) {
      // Crossed the singular line: cut the step at the crossing.
      const double s0 = side(p), s1 = side(next);
      const double lambda = s0 / (s0 - s1);
      next = {p.xi + lambda * (next.xi - p.xi), p.eta + lambda * (next.eta - p.eta)};
      out.points.push_back(next);
      out.stop = TraceStop::Tangency;
      break;
    }
    // Entropy check on the segment, normal to the right of travel.
    const double tx = next.xi - p.xi, ty = next.eta - p.eta;
    const SimilarityPoint mid{0.5 * (p.xi + next.xi), 0.5 * (p.eta + next.eta)};
    if (out.admissible && (tx != 0.0 || ty != 0.0) &&
        !oleinik_admissible(flux, v_minus(mid), v_plus(mid), ShockNormal{ty, -tx})) {
      out.admissible = false;
      out.first_inadmissible_segment = out.points.size() - 1;
    }
    out.points.push_back(next);
    ref = {tx, ty};
    p = next;
    if (reached_zero) {
      out.stop = TraceStop::Tangency;
      break;
    }
    if (!inside(p)) {
      out.stop = TraceStop::DomainExit;
      break;
    }
    if (stop(p)) {
      out.stop = TraceStop::Predicate;
      break;
    }
  }
  return out;
}

template <class Minus, class Plus>
ShockTrace trace_shock_curve(const ScalarFlux& flux, Minus&& v_minus, Plus&& v_plus,
                             SimilarityPoint start, std::array<double, 2> initial_direction,
                             const TraceOptions& opts = {}) {
  return trace_shock_curve(flux, std::forward<Minus>(v_minus), std::forward<Plus>(v_plus), start,
                           initial_direction, opts, [](const SimilarityPoint&) { return false; });
}

/// eta on a traced polyline at abscissa xi (linear interpolation), if covered.
inline std::optional<double> eta_at(const ShockTrace& trace, double xi) {
  const auto& pts = trace.points;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    const double a = pts[k].xi, b = pts[k + 1].xi;
    if ((xi - a) * (xi - b) <= 0.0 && a != b) {
      const double w = (xi - a) / (b - a);
      return pts[k].eta + w * (pts[k + 1].eta - pts[k].eta);
    }
  }
  return std::nullopt;
}

/// The curved (v1, v4) shock of the one-shock case A: it starts where the
/// horizontal v4|v1 shock meets the right edge of the lower x-rarefaction and
/// bends towards the singular line.
inline ShockTrace trace_one_shock_a(const WaveStructure& w, const TraceOptions& opts = {}) {
  const ScalarFlux& fl = w.flux;
  const QuadrantData& q = w.data;
  const SimilarityPoint start{fl.df(q.v4), secants(fl, q.v1, q.v4).second};
  const double dir = fl.c_x < 0.0 ? -1.0 : 1.0;
  return trace_shock_curve(fl, x_fan_state(fl, q.v3, q.v4), x_fan_state(fl, q.v2, q.v1), start,
                           {dir, 0.0}, opts);
}

// ---------------------------------------------------------------------------
// Validation of numerical fields

enum class ValidationStatus { Pass, Fail, Inconclusive };

inline std::string to_string(ValidationStatus s) {
  switch (s) {
    case ValidationStatus::Pass: return "pass";
    case ValidationStatus::Fail: return "fail";
    case ValidationStatus::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct ValidationCheck {
  std::string name;
  std::string expected;
  std::string measured;
  double discrepancy = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct MeasuredPoint {
  std::string name;
  SimilarityPoint predicted;
  std::optional<SimilarityPoint> measured;
};

struct ValidationOptions {
  /// Geometric tolerance in similarity units; <= 0 means 3 cells.
  double tolerance = 0.0;
  /// A cell counts as discontinuous when |grad r| * dx exceeds this fraction
  /// of the largest jump between neighbouring quadrants.
  double jump_fraction = 0.05;
  /// Time of the field; positions are divided by it.
  double t = 1.0;
};

struct ValidationReport {
  ValidationStatus status = ValidationStatus::Pass;
  WaveStructure structure;
  double tolerance = 0.0;
  double jump_threshold = 0.0;
  std::size_t discontinuous_cells = 0;
  std::vector<ValidationCheck> checks;
  std::vector<MeasuredPoint> points;
  std::string note;
};

namespace detail {

/// Exact squared Euclidean distance transform along one line
/// (lower envelope of parabolas). `f` holds 0 on features and a large value
/// elsewhere; `h` is the sample spacing.
inline void distance_transform_1d(const std::vector<double>& f, double h, std::vector<double>& d) {
  const std::size_t n = f.size();
  d.assign(n, 0.0);
  if (n == 0) return;
  std::vector<std::size_t> v(n);
  std::vector<double> z(n + 1);
  std::size_t k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  auto pos = [h](std::size_t q) { return h * static_cast<double>(q); };
  for (std::size_t q = 1; q < n; ++q) {
    double s;
    for (;;) {
      const std::size_t r = v[k];
      s = ((f[q] + pos(q) * pos(q)) - (f[r] + pos(r) * pos(r))) / (2.0 * (pos(q) - pos(r)));
      if (s <= z[k] && k > 0) {
        --k;
      } else {
        break;
      }
    }
    if (s <= z[k]) {
      v[0] = q;
      z[0] = -std::numeric_limits<double>::infinity();
      z[1] = std::numeric_limits<double>::infinity();
      k = 0;
      continue;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (std::size_t q = 0; q < n; ++q) {
    while (z[k + 1] < pos(q)) ++k;
    const double diff = pos(q) - pos(v[k]);
    d[q] = diff * diff + f[v[k]];
  }
}

/// Euclidean distance (physical units) from every cell to the nearest cell of `mask`.
inline ScalarField distance_to_mask(const GridArray<char>& mask) {
  const Grid2D& g = mask.grid();
  constexpr double kFar = 1e30;
  ScalarField tmp(g), out(g);
  std::vector<double> f, d;
  f.resize(g.nx);
  for (std::size_t j = 0; j < g.ny; ++j) {
    for (std::size_t i = 0; i < g.nx; ++i) f[i] = mask(i, j) ? 0.0 : kFar;
    distance_transform_1d(f, g.dx(), d);
    for (std::size_t i = 0; i < g.nx; ++i) tmp(i, j) = d[i];
  }
  f.resize(g.ny);
  for (std::size_t i = 0; i < g.nx; ++i) {
    for (std::size_t j = 0; j < g.ny; ++j) f[j] = tmp(i, j);
    distance_transform_1d(f, g.dy(), d);
    for (std::size_t j = 0; j < g.ny; ++j) out(i, j) = std::sqrt(d[j]);
  }
  return out;
}

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string fmt(const SimilarityPoint& p) { return "(" + fmt(p.xi) + ", " + fmt(p.eta) + ")"; }

/// Expected elementary wave of a 1D Riemann problem with left/right states
/// for a flux with coefficient c: 'S' shock, 'R' rarefaction, '-' none.
inline char wave_type_1d(double c, double left, double right) {
  if (left == right) return '-';
  // f'' = -2c: convex for c < 0, where a decreasing jump is a shock.
  const bool convex = c < 0.0;
  return (convex ? left > right : left < right) ? 'S' : 'R';
}

class FieldProbe {
public:
  FieldProbe(const ScalarField& r, double t) : r_(r), t_(t) {}

  const Grid2D& grid() const { return r_.grid(); }
  double xi(std::size_t i) const { return grid().x_center(i) / t_; }
  double eta(std::size_t j) const { return grid().y_center(j) / t_; }
  double value(std::size_t i, std::size_t j) const { return r_(i, j); }

  std::optional<std::size_t> column_of(double xi_value) const {
    return index_of(xi_value * t_, grid().x0, grid().dx(), grid().nx);
  }
  std::optional<std::size_t> row_of(double eta_value) const {
    return index_of(eta_value * t_, grid().y0, grid().dy(), grid().ny);
  }

  /// |grad r| * dx with central differences (one-sided at the border).
  double jump_measure(std::size_t i, std::size_t j) const {
    const Grid2D& g = grid();
    const std::size_t il = i > 0 ? i - 1 : i, ir = i + 1 < g.nx ? i + 1 : i;
    const std::size_t jl = j > 0 ? j - 1 : j, jr = j + 1 < g.ny ? j + 1 : j;
    const double gx = (r_(ir, j) - r_(il, j)) / (static_cast<double>(ir - il) * g.dx());
    const double gy = (r_(i, jr) - r_(i, jl)) / (static_cast<double>(jr - jl) * g.dy());
    return std::hypot(gx, gy) * std::min(g.dx(), g.dy());
  }

private:
  static std::optional<std::size_t> index_of(double x, double x0, double h, std::size_t n) {
    const double k = std::floor((x - x0) / h);
    if (k < 0.0 || k >= static_cast<double>(n)) return std::nullopt;
    return static_cast<std::size_t>(k);
  }

  const ScalarField& r_;
  double t_;
};

/// A line of samples (position along the line, value, jump measure).
struct Profile {
  std::vector<double> s;
  std::vector<double> value;
  std::vector<double> jump;
};

/// Position where the profile crosses `level` between `from` and `to`,
/// interpolated; the crossing closest to `hint` wins.
inline std::optional<double> crossing(const Profile& p, double level, double from, double to,
                                      double hint) {
  std::optional<double> best;
  for (std::size_t k = 0; k + 1 < p.s.size(); ++k) {
    if (p.s[k] < from || p.s[k + 1] > to) continue;
    const double a = p.value[k] - level, b = p.value[k + 1] - level;
    if (a == 0.0 && b == 0.0) continue;
    if (a * b <= 0.0) {
      const double w = a / (a - b);
      const double s = p.s[k] + w * (p.s[k + 1] - p.s[k]);
      if (!best || std::abs(s - hint) < std::abs(*best - hint)) best = s;
    }
  }
  return best;
}

inline double max_jump(const Profile& p, double from, double to) {
  double m = 0.0;
  for (std::size_t k = 0; k < p.s.size(); ++k) {
    if (p.s[k] >= from && p.s[k] <= to) m = std::max(m, p.jump[k]);
  }
  return m;
}

inline Profile row_profile(const FieldProbe& probe, std::size_t j) {
  Profile p;
  for (std::size_t i = 0; i < probe.grid().nx; ++i) {
    p.s.push_back(probe.xi(i));
    p.value.push_back(probe.value(i, j));
    p.jump.push_back(probe.jump_measure(i, j));
  }
  return p;
}

inline Profile column_profile(const FieldProbe& probe, std::size_t i) {
  Profile p;
  for (std::size_t j = 0; j < probe.grid().ny; ++j) {
    p.s.push_back(probe.eta(j));
    p.value.push_back(probe.value(i, j));
    p.jump.push_back(probe.jump_measure(i, j));
  }
  return p;
}

/// Connected components (4-neighbourhood) of the mask with at least `min_size` cells.
inline std::size_t count_components(const GridArray<char>& mask, std::size_t min_size) {
  const Grid2D& g = mask.grid();
  GridArray<char> seen(g, 0);
  std::size_t count = 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack;
  for (std::size_t j = 0; j < g.ny; ++j) {
    for (std::size_t i = 0; i < g.nx; ++i) {
      if (!mask(i, j) || seen(i, j)) continue;
      std::size_t size = 0;
      stack.assign(1, {i, j});
      seen(i, j) = 1;
      while (!stack.empty()) {
        auto [a, b] = stack.back();
        stack.pop_back();
        ++size;
        auto visit = [&](std::size_t x, std::size_t y) {
          if (mask(x, y) && !seen(x, y)) {
            seen(x, y) = 1;
            stack.push_back({x, y});
          }
        };
        if (a > 0) visit(a - 1, b);
        if (a + 1 < g.nx) visit(a + 1, b);
        if (b > 0) visit(a, b - 1);
        if (b + 1 < g.ny) visit(a, b + 1);
      }
      if (size >= min_size) ++count;
    }
  }
  return count;
}

}  // namespace detail

/// Compares a numerical total-density field with the predicted wave structure.
///
/// Far-field checks look at the four half-axis interfaces, where the solution
/// is a 1D Riemann fan: shocks must be detected at the secant speed and
/// rarefactions must stay below the jump threshold with their midpoint at
/// f'(v_mid). Case-specific checks follow (triple points, shock-free
/// interior, curved shock, number of separate shock branches).
inline ValidationReport validate_field(const ScalarField& r, const WaveStructure& w,
                                       const ValidationOptions& opts = {}) {
  using detail::fmt;
  const Grid2D& g = r.grid();
  const detail::FieldProbe probe(r, opts.t);
  const double h = std::max(g.dx(), g.dy()) / opts.t;
  ValidationReport rep;
  rep.structure = w;
  rep.tolerance = opts.tolerance > 0.0 ? opts.tolerance : 3.0 * h;
  const double tol = rep.tolerance;
  const QuadrantData& q = w.data;
  const ScalarFlux& fl = w.flux;

  const double max_jump = std::max({std::abs(q.v1 - q.v2), std::abs(q.v2 - q.v3),
                                    std::abs(q.v3 - q.v4), std::abs(q.v4 - q.v1)});
  rep.jump_threshold = opts.jump_fraction * max_jump;

  auto add = [&](std::string name, std::string expected, std::string measured, double disc,
                 double tolerance, bool ok) {
    rep.checks.push_back({std::move(name), std::move(expected), std::move(measured), disc,
                          tolerance, ok});
  };

  GridArray<char> discontinuous(g, 0);
  for (std::size_t j = 0; j < g.ny; ++j) {
    for (std::size_t i = 0; i < g.nx; ++i) {
      if (probe.jump_measure(i, j) > rep.jump_threshold + 1e-12) {
        discontinuous(i, j) = 1;
        ++rep.discontinuous_cells;
      }
    }
  }

  if (w.degenerate || max_jump == 0.0) {
    add("no waves", "0 discontinuous cells", std::to_string(rep.discontinuous_cells),
        static_cast<double>(rep.discontinuous_cells), 0.0, rep.discontinuous_cells == 0);
    rep.status = rep.discontinuous_cells == 0 ? ValidationStatus::Pass : ValidationStatus::Fail;
    return rep;
  }

  // All waves stay inside |xi|, |eta| <= speed scale (|f'| <= |c| on [0, 1]).
  const double interaction = fl.speed_scale();
  const double xi_lo = probe.xi(0), xi_hi = probe.xi(g.nx - 1);
  const double eta_lo = probe.eta(0), eta_hi = probe.eta(g.ny - 1);
  const double reach = std::min({-xi_lo, xi_hi, -eta_lo, eta_hi});
  const double margin = 6.0 * h;
  if (reach < interaction + 2.0 * margin || tol < h) {
    rep.status = ValidationStatus::Inconclusive;
    rep.note = "domain or resolution too small to separate the predicted waves";
    return rep;
  }
  if (interaction / h < 10.0) {
    rep.status = ValidationStatus::Inconclusive;
    rep.note = "fewer than 10 cells across the interaction region";
    return rep;
  }
  // A centered fan spreads a jump over |c| * 2 * jump * t, so its gradient
  // measure is about dx / (2 |c| t) whatever the jump; it must stay clearly
  // below the threshold for fans and shocks to be told apart.
  const double fan_measure =
      std::min(g.dx(), g.dy()) / (2.0 * std::min(std::abs(fl.c_x), std::abs(fl.c_y)) * opts.t);
  if (2.0 * fan_measure > rep.jump_threshold) {
    rep.status = ValidationStatus::Inconclusive;
    rep.note = "grid too coarse to separate rarefaction fans from shocks";
    return rep;
  }
  const double scan = 0.5 * (interaction + margin + reach);

  // Far field: top (v2|v1 along xi), bottom (v3|v4), left (v3|v2 along eta), right (v4|v1).
  struct Interface {
    const char* name;
    bool along_xi;
    double offset;
    double left, right;
    double c;
  };
  const Interface faces[] = {
      {"top v2|v1", true, scan, q.v2, q.v1, fl.c_x},
      {"bottom v3|v4", true, -scan, q.v3, q.v4, fl.c_x},
      {"left v3|v2", false, -scan, q.v3, q.v2, fl.c_y},
      {"right v4|v1", false, scan, q.v4, q.v1, fl.c_y},
  };
  std::array<char, 4> measured_types{};
  for (std::size_t f = 0; f < 4; ++f) {
    const Interface& face = faces[f];
    const auto line = face.along_xi ? probe.row_of(face.offset) : probe.column_of(face.offset);
    if (!line) {
      rep.status = ValidationStatus::Inconclusive;
      rep.note = "scan line outside the grid";
      return rep;
    }
    const detail::Profile p =
        face.along_xi ? detail::row_profile(probe, *line) : detail::column_profile(probe, *line);
    const char expected = detail::wave_type_1d(face.c, face.left, face.right);
    const double peak = detail::max_jump(p, -interaction - margin, interaction + margin);
    const bool shock_seen = peak > rep.jump_threshold + 1e-12;
    measured_types[f] = face.left == face.right ? '-' : (shock_seen ? 'S' : 'R');
    const std::string label = std::string(face.name);
    const char* kind = expected == 'S' ? "shock" : expected == 'R' ? "rarefaction" : "none";
    add(label + " wave type", kind, measured_types[f] == 'S' ? "shock" : measured_types[f] == 'R' ? "rarefaction" : "none",
        peak, rep.jump_threshold, measured_types[f] == expected);
    if (expected == '-') continue;
    // Shock position and rarefaction midpoint both sit at c (1 - left - right).
    const double predicted = face.c * (1.0 - face.left - face.right);
    const auto pos = detail::crossing(p, 0.5 * (face.left + face.right), -interaction - margin,
                                      interaction + margin, predicted);
    add(label + " position", fmt(predicted), pos ? fmt(*pos) : "not found",
        pos ? std::abs(*pos - predicted) : std::numeric_limits<double>::infinity(), tol,
        pos && std::abs(*pos - predicted) <= tol);
  }

  switch (w.wave_case) {
    case WaveCase::NoShocks: {
      add("shock-free field", "0 discontinuous cells", std::to_string(rep.discontinuous_cells),
          static_cast<double>(rep.discontinuous_cells), 0.0, rep.discontinuous_cells == 0);
      break;
    }
    case WaveCase::NoRarefactions: {
      const TriplePoints& tp = *w.triple_points;
      const auto vals = q.values();
      double min_gap = 1.0;
      for (std::size_t a = 0; a < 4; ++a) {
        for (std::size_t b = a + 1; b < 4; ++b) {
          if (vals[a] != vals[b]) min_gap = std::min(min_gap, std::abs(vals[a] - vals[b]));
        }
      }
      const double band = 0.2 * min_gap;
      auto plateau = [&](double v) {
        GridArray<char> m(g, 0);
        for (std::size_t j = 0; j < g.ny; ++j)
          for (std::size_t i = 0; i < g.nx; ++i)
            m(i, j) = std::abs(r(i, j) - v) < band && !discontinuous(i, j) ? 1 : 0;
        return detail::distance_to_mask(m);
      };
      const ScalarField d1 = plateau(q.v1), d2 = plateau(q.v2), d3 = plateau(q.v3),
                        d4 = plateau(q.v4);
      // The junction of three regions minimizes the largest distance to them.
      auto junction = [&](const ScalarField& da, const ScalarField& db,
                          const ScalarField& dc) -> std::optional<SimilarityPoint> {
        double best = std::numeric_limits<double>::infinity();
        double sx = 0.0, sy = 0.0;
        int count = 0;
        for (std::size_t j = 0; j < g.ny; ++j) {
          const double eta = probe.eta(j);
          if (std::abs(eta) > interaction + margin) continue;
          for (std::size_t i = 0; i < g.nx; ++i) {
            const double xi = probe.xi(i);
            if (std::abs(xi) > interaction + margin) continue;
            const double m = std::max({da(i, j), db(i, j), dc(i, j)});
            if (m < best - 1e-12) {
              best = m;
              sx = xi;
              sy = eta;
              count = 1;
            } else if (std::abs(m - best) <= 1e-12) {
              sx += xi;
              sy += eta;
              ++count;
            }
          }
        }
        if (count == 0 || best > 10.0 * h * opts.t) return std::nullopt;
        return SimilarityPoint{sx / count, sy / count};
      };
      const auto a = junction(d1, d2, d3);
      const auto b = junction(d3, d4, d1);
      rep.points.push_back({"A", tp.a, a});
      rep.points.push_back({"B", tp.b, b});
      for (const auto& [name, pred, meas] : {std::tuple{"A", tp.a, a}, std::tuple{"B", tp.b, b}}) {
        const double d = meas ? distance(*meas, pred) : std::numeric_limits<double>::infinity();
        add(std::string("triple point ") + name, fmt(pred), meas ? fmt(*meas) : "not found", d, tol,
            d <= tol);
      }
      // O: the v1|v3 shock between A and B, fitted as a line and intersected
      // with the singular line.
      std::optional<SimilarityPoint> o;
      if (a && b) {
        const double level = 0.5 * (q.v1 + q.v3);
        const bool by_rows = std::abs(a->eta - b->eta) >= std::abs(a->xi - b->xi);
        std::vector<SimilarityPoint> pts;
        const double lo = by_rows ? std::min(a->eta, b->eta) : std::min(a->xi, b->xi);
        const double hi = by_rows ? std::max(a->eta, b->eta) : std::max(a->xi, b->xi);
        const double pad = std::max(4.0 * h, 0.15 * (hi - lo));
        const std::size_t n = by_rows ? g.ny : g.nx;
        for (std::size_t k = 0; k < n; ++k) {
          const double s = by_rows ? probe.eta(k) : probe.xi(k);
          if (s < lo + pad || s > hi - pad) continue;
          const detail::Profile p =
              by_rows ? detail::row_profile(probe, k) : detail::column_profile(probe, k);
          const double from = by_rows ? std::min(a->xi, b->xi) - pad : std::min(a->eta, b->eta) - pad;
          const double to = by_rows ? std::max(a->xi, b->xi) + pad : std::max(a->eta, b->eta) + pad;
          const double t_lin = (s - (by_rows ? a->eta : a->xi)) /
                               ((by_rows ? b->eta : b->xi) - (by_rows ? a->eta : a->xi));
          const double hint = by_rows ? a->xi + t_lin * (b->xi - a->xi) : a->eta + t_lin * (b->eta - a->eta);
          if (const auto c = detail::crossing(p, level, from, to, hint)) {
            pts.push_back(by_rows ? SimilarityPoint{*c, s} : SimilarityPoint{s, *c});
          }
        }
        if (pts.size() >= 3) {
          // Total least squares line through the crossings.
          double mx = 0.0, my = 0.0;
          for (const auto& p : pts) {
            mx += p.xi;
            my += p.eta;
          }
          mx /= static_cast<double>(pts.size());
          my /= static_cast<double>(pts.size());
          double sxx = 0.0, sxy = 0.0, syy = 0.0;
          for (const auto& p : pts) {
            sxx += (p.xi - mx) * (p.xi - mx);
            sxy += (p.xi - mx) * (p.eta - my);
            syy += (p.eta - my) * (p.eta - my);
          }
          const double angle = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
          const double ux = std::cos(angle), uy = std::sin(angle);
          // Singular line: c_y xi - c_x eta = 0.
          const double den = fl.c_y * ux - fl.c_x * uy;
          if (std::abs(den) > 1e-9 * fl.speed_scale()) {
            const double s = -(fl.c_y * mx - fl.c_x * my) / den;
            o = SimilarityPoint{mx + s * ux, my + s * uy};
          }
        }
      }
      rep.points.push_back({"O", tp.o, o});
      const double d_o = o ? distance(*o, tp.o) : std::numeric_limits<double>::infinity();
      add("triple point O", fmt(tp.o), o ? fmt(*o) : "not found", d_o, tol, d_o <= tol);
      add("shock network connected", "1 shock component",
          std::to_string(detail::count_components(discontinuous, 20)) + " components", 0.0, 0.0,
          detail::count_components(discontinuous, 20) == 1);
      break;
    }
    case WaveCase::OneShock: {
      if (w.sub_case != SubCase::A) break;
      TraceOptions topt;
      topt.step = 0.25 * h;
      const ShockTrace trace = trace_one_shock_a(w, topt);
      add("curved shock admissible", "true", trace.admissible ? "true" : "false", 0.0, 0.0,
          trace.admissible);
      // Compare with the numerical shock where it is still strong.
      const double xi_left = fl.df(q.v1), xi_right = fl.df(q.v4);
      for (double frac : {0.5, 0.7, 0.9}) {
        const double xi = xi_left + frac * (xi_right - xi_left);
        const auto eta_pred = eta_at(trace, xi);
        const auto col = probe.column_of(xi);
        if (!eta_pred || !col) continue;
        const double below = x_fan_state(fl, q.v3, q.v4)({xi, 0.0});
        const double above = x_fan_state(fl, q.v2, q.v1)({xi, 0.0});
        const detail::Profile p = detail::column_profile(probe, *col);
        const auto pos = detail::crossing(p, 0.5 * (below + above), *eta_pred - 10.0 * tol,
                                          *eta_pred + 10.0 * tol, *eta_pred);
        const double d = pos ? std::abs(*pos - *eta_pred) : std::numeric_limits<double>::infinity();
        add("curved shock at xi=" + fmt(probe.xi(*col)), fmt(*eta_pred), pos ? fmt(*pos) : "not found", d,
            tol, d <= tol);
      }
      break;
    }
    case WaveCase::TwoShocksTwoRarefactions: {
      const std::size_t comps = detail::count_components(discontinuous, 20);
      if (w.sub_case == SubCase::NonNeighbor) {
        add("shock branches separated", ">= 2 shock components", std::to_string(comps) + " components",
            0.0, 0.0, comps >= 2);
      } else {
        add("shock branches joined", "1 shock component", std::to_string(comps) + " components",
            0.0, 0.0, comps == 1);
      }
      break;
    }
    default:
      break;
  }

  rep.status = ValidationStatus::Pass;
  for (const auto& c : rep.checks) {
    if (!c.passed) rep.status = ValidationStatus::Fail;
  }
  return rep;
}

}  // namespace traffic2d
