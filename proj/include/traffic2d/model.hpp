#pragma once

// Two-class Greenshields-type fluxes in two space dimensions.
//
// Three parameterizations share one structure: along an axis each class moves
// with speed c_class * (1 - occupancy), where occupancy is (rho + w*mu)/r_max
// and w is 1 (equal vehicle size) or 2 (trucks twice as long as cars).

#include <traffic2d/error.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>

namespace traffic2d {

enum class Axis { X, Y };

/// Densities of cars (rho) and trucks (mu) at a point or cell.
struct ClassState {
  double rho = 0.0;
  double mu = 0.0;

  friend bool operator==(const ClassState&, const ClassState&) = default;
};

/// Same maximum speed for both classes, occupancy (rho + mu)/r_max.
struct SharedFlux {
  double c_x = 0.0;
  double c_y = 0.0;
  double r_max = 1.0;
};

/// Per-class speeds, trucks counted twice in the occupancy.
struct LengthWeightedFlux {
  static constexpr double truck_length_factor = 2.0;
  double c_x_rho = 0.0;
  double c_y_rho = 0.0;
  double c_x_mu = 0.0;
  double c_y_mu = 0.0;
  double r_max = 1.0;
};

/// Per-class speeds with a common jam density, occupancy (rho + mu)/r_max.
struct PerClassFlux {
  double c_x_rho = 0.0;
  double c_y_rho = 0.0;
  double c_x_mu = 0.0;
  double c_y_mu = 0.0;
  double r_max = 1.0;
};

using FluxParams = std::variant<SharedFlux, LengthWeightedFlux, PerClassFlux>;

/// The speed law of one parameterization restricted to one axis.
struct AxisLaw {
  double c_rho;
  double c_mu;
  double truck_weight;
  double r_max;
};

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<std::array<double, 2>, 2>;

enum class FieldType { LinearlyDegenerate, GenuinelyNonlinear };

struct EigenData {
  double lambda1;
  double lambda2;
  Vec2 gamma1;
  /// Empty when mu == 0, where the eigenvector rho/mu blows up.
  std::optional<Vec2> gamma2;
  FieldType field1_type = FieldType::LinearlyDegenerate;
  FieldType field2_type = FieldType::GenuinelyNonlinear;
};

struct RiemannInvariants {
  double z1;
  /// Empty unless both densities are strictly positive.
  std::optional<double> z2;
};

/// Relative slack above r_max that is attributed to roundoff and clamped.
inline constexpr double kOccupancyClampTolerance = 1e-12;

inline double r_max_of(const FluxParams& params) {
  return std::visit([](const auto& p) { return p.r_max; }, params);
}

inline AxisLaw axis_law(const FluxParams& params, Axis axis) {
  const bool x = axis == Axis::X;
  AxisLaw law = std::visit(
      [x](const auto& p) -> AxisLaw {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, SharedFlux>) {
          const double c = x ? p.c_x : p.c_y;
          return {c, c, 1.0, p.r_max};
        } else if constexpr (std::is_same_v<P, LengthWeightedFlux>) {
          return {x ? p.c_x_rho : p.c_y_rho, x ? p.c_x_mu : p.c_y_mu,
                  P::truck_length_factor, p.r_max};
        } else {
          return {x ? p.c_x_rho : p.c_y_rho, x ? p.c_x_mu : p.c_y_mu, 1.0,
                  p.r_max};
        }
      },
      params);
  if (!(law.r_max > 0.0) || !std::isfinite(law.r_max)) {
    throw ParameterError("r_max must be positive and finite");
  }
  return law;
}

/// Occupancy (rho + w*mu)/r_max, checked against the admissible set and
/// clamped to 1 inside the roundoff band.
inline double occupancy(const ClassState& s, const AxisLaw& law) {
  if (!(s.rho >= 0.0) || !(s.mu >= 0.0)) {
    throw DomainError("negative density (" + std::to_string(s.rho) + ", " +
                      std::to_string(s.mu) + ")");
  }
  const double occ = (s.rho + law.truck_weight * s.mu) / law.r_max;
  if (occ > 1.0) {
    if (occ <= 1.0 + kOccupancyClampTolerance) return 1.0;
    throw DomainError("occupancy " + std::to_string(occ) + " exceeds 1");
  }
  return occ;
}

inline double occupancy(const ClassState& s, const FluxParams& params) {
  return occupancy(s, axis_law(params, Axis::X));
}

/// Per-class speeds (u_rho, u_mu) along an axis.
inline Vec2 velocity(const ClassState& s, const FluxParams& params, Axis axis) {
  const AxisLaw law = axis_law(params, axis);
  const double free = 1.0 - occupancy(s, law);
  return {law.c_rho * free, law.c_mu * free};
}

/// Per-class fluxes (q_rho, q_mu) along an axis.
inline Vec2 flux(const ClassState& s, const FluxParams& params, Axis axis) {
  const Vec2 u = velocity(s, params, axis);
  return {s.rho * u[0], s.mu * u[1]};
}

/// Jacobian of the directional flux with respect to (rho, mu).
inline Mat2 jacobian(const ClassState& s, const FluxParams& params, Axis axis) {
  const AxisLaw law = axis_law(params, axis);
  const double free = 1.0 - occupancy(s, law);
  const double inv_r = 1.0 / law.r_max;
  const double w = law.truck_weight;
  return {{{law.c_rho * (free - s.rho * inv_r), -law.c_rho * w * s.rho * inv_r},
           {-law.c_mu * s.mu * inv_r, law.c_mu * (free - w * s.mu * inv_r)}}};
}

/// Largest eigenvalue modulus of a real 2x2 matrix (complex pairs included).
inline double spectral_radius(const Mat2& m) {
  const double half_trace = 0.5 * (m[0][0] + m[1][1]);
  const double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
  const double disc = half_trace * half_trace - det;
  if (disc < 0.0) return std::sqrt(det);
  const double root = std::sqrt(disc);
  return std::max(std::abs(half_trace + root), std::abs(half_trace - root));
}

/// Spectral radius of the directional Jacobian. The shared variant uses the
/// closed-form eigenvalues c(1-occ) and c(1-2 occ).
inline double directional_wave_speed(const ClassState& s,
                                      const FluxParams& params, Axis axis) {
  if (const auto* shared = std::get_if<SharedFlux>(&params)) {
    const AxisLaw law = axis_law(params, axis);
    const double occ = occupancy(s, law);
    const double c = axis == Axis::X ? shared->c_x : shared->c_y;
    return std::max(std::abs(c * (1.0 - occ)), std::abs(c * (1.0 - 2.0 * occ)));
  }
  return spectral_radius(jacobian(s, params, axis));
}

/// Eigenstructure of k1*A + k2*B for the shared variant.
inline EigenData eigen(const ClassState& s, const SharedFlux& params, double k1,
                       double k2) {
  const double occ = occupancy(s, FluxParams{params});
  const double c = k1 * params.c_x + k2 * params.c_y;
  EigenData out{c * (1.0 - occ), c * (1.0 - 2.0 * occ), {-1.0, 1.0},
                std::nullopt};
  if (s.mu > 0.0) out.gamma2 = Vec2{s.rho / s.mu, 1.0};
  return out;
}

inline RiemannInvariants riemann_invariants(const ClassState& s) {
  RiemannInvariants z{s.rho + s.mu, std::nullopt};
  if (s.rho > 0.0 && s.mu > 0.0) z.z2 = std::log(s.rho / s.mu);
  return z;
}

/// Rescales densities so that the jam density becomes 1.
inline ClassState normalize(const ClassState& s, double r_max) {
  if (!(r_max > 0.0)) throw ParameterError("r_max must be positive");
  return {s.rho / r_max, s.mu / r_max};
}

inline SharedFlux normalize(const SharedFlux& p) {
  return {p.c_x, p.c_y, 1.0};
}

inline std::string variant_name(const FluxParams& params) {
  switch (params.index()) {
    case 0: return "shared";
    case 1: return "length_weighted";
    default: return "per_class_shared_max";
  }
}

}  // namespace traffic2d
