#pragma once

// Built-in scenario library: the five four-quadrant Riemann set-ups, the
// overtaking manoeuvre and the two-lane comparison.

#include <traffic2d/calibration.hpp>
#include <traffic2d/error.hpp>
#include <traffic2d/grid.hpp>
#include <traffic2d/kde.hpp>
#include <traffic2d/model.hpp>
#include <traffic2d/multilane.hpp>
#include <traffic2d/riemann2d.hpp>
#include <traffic2d/trajectory.hpp>
#include <traffic2d/units.hpp>

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace traffic2d {

struct RiemannCase {
  std::string name;
  /// Car densities in quadrants 1..4 before normalization.
  std::array<double, 4> rho;
  WaveCase expected_case;
  SubCase expected_sub_case;
};

/// Quadrant set-up on [-5, 5]^2, trucks at half the car density, densities
/// divided by rho_max + mu_max = 6, c_x = c_y = -1, evaluated at t = 1.
struct RiemannSetup {
  double half_width = 5.0;
  double spacing = 0.02;
  double truck_ratio = 0.5;
  double normalization = 6.0;
  double c_x = -1.0;
  double c_y = -1.0;
  double t_final = 1.0;

  Grid2D grid() const {
    return Grid2D::from_spacing(2.0 * half_width, 2.0 * half_width, spacing, spacing, -half_width,
                                -half_width);
  }
  SharedFlux flux() const { return {c_x, c_y, 1.0}; }
  ScalarFlux scalar_flux() const { return {c_x, c_y}; }
};

inline const std::vector<RiemannCase>& riemann_cases() {
  static const std::vector<RiemannCase> cases = {
      {"no_shocks", {4, 2, 1, 3}, WaveCase::NoShocks, SubCase::None},
      {"no_rarefactions", {1, 2, 4, 3}, WaveCase::NoRarefactions, SubCase::None},
      {"one_shock", {3, 2, 1, 4}, WaveCase::OneShock, SubCase::A},
      {"one_rarefaction", {1, 2, 3, 4}, WaveCase::OneRarefaction, SubCase::A},
      {"two_shocks_two_rarefactions", {3, 1, 2, 4}, WaveCase::TwoShocksTwoRarefactions,
       SubCase::NonNeighbor},
  };
  return cases;
}

inline const RiemannCase& riemann_case(const std::string& name) {
  for (const auto& c : riemann_cases()) {
    if (c.name == name) return c;
  }
  throw ParameterError("unknown Riemann scenario '" + name + "'");
}

/// Normalized per-class state of one quadrant.
inline ClassState quadrant_state(double rho, const RiemannSetup& setup) {
  return {rho / setup.normalization, setup.truck_ratio * rho / setup.normalization};
}

/// Normalized total densities r = rho + mu of the four quadrants.
inline QuadrantData quadrant_data(const std::array<double, 4>& rho, const RiemannSetup& setup) {
  auto r = [&](double v) {
    const ClassState s = quadrant_state(v, setup);
    return s.rho + s.mu;
  };
  return {r(rho[0]), r(rho[1]), r(rho[2]), r(rho[3])};
}

/// Piecewise-constant field: Q1 = (+,+), Q2 = (-,+), Q3 = (-,-), Q4 = (+,-).
inline Field2D riemann_initial_field(const std::array<double, 4>& rho, const RiemannSetup& setup) {
  const Grid2D g = setup.grid();
  Field2D field(g);
  for (std::size_t j = 0; j < g.ny; ++j) {
    const double y = g.y_center(j);
    for (std::size_t i = 0; i < g.nx; ++i) {
      const double x = g.x_center(i);
      const std::size_t q = x >= 0.0 ? (y >= 0.0 ? 0 : 3) : (y >= 0.0 ? 1 : 2);
      field(i, j) = quadrant_state(rho[q], setup);
    }
  }
  return field;
}

// ---------------------------------------------------------------------------
// Overtaking on a two-lane road: a stationary truck ahead of car 2 in the
// lower lane, car 1 in the upper lane. Positions are fixed choices; the y
// bandwidth is widened so that a single vehicle stays below jam occupancy.

struct VehiclePlacement {
  std::string name;
  VehicleClass vehicle_class;
  Point2 position;
};

struct OvertakingScenario {
  double lx = 100.0;
  double ly = 6.0;
  double spacing = 0.2;
  double t_final = 4.0;
  int lanes = 2;
  double effective_length = 7.5;
  double c_x_rho_kmh = 80.0;
  double c_y_rho_kmh = -0.4;
  double c_x_mu_kmh = 0.0;
  double c_y_mu_kmh = 0.0;
  KernelConfig car_kernel{5.0, 1.0};
  KernelConfig truck_kernel{5.0, 1.0};
  std::vector<VehiclePlacement> vehicles{
      {"car 2", VehicleClass::Car, {30.0, 1.5}},
      {"truck", VehicleClass::Truck, {60.0, 1.5}},
      {"car 1", VehicleClass::Car, {62.0, 4.5}},
  };

  Grid2D grid() const { return Grid2D::from_spacing(lx, ly, spacing, spacing); }

  /// Jam density per unit area (veh/m^2).
  double r_max() const {
    return units::line_to_area_density(rmax_from_geometry(lanes, effective_length), ly);
  }

  PerClassFlux flux() const {
    return {units::kmh_to_mps(c_x_rho_kmh), units::kmh_to_mps(c_y_rho_kmh),
            units::kmh_to_mps(c_x_mu_kmh), units::kmh_to_mps(c_y_mu_kmh), r_max()};
  }

  Field2D initial_field() const {
    const Grid2D g = grid();
    std::vector<Point2> cars, trucks;
    for (const auto& v : vehicles) (v.vehicle_class == VehicleClass::Car ? cars : trucks).push_back(v.position);
    const ScalarField rc = reconstruct_density(cars, g, car_kernel);
    const ScalarField rt = reconstruct_density(trucks, g, truck_kernel);
    Field2D f(g);
    for (std::size_t j = 0; j < g.ny; ++j) {
      for (std::size_t i = 0; i < g.nx; ++i) f(i, j) = {rc(i, j), rt(i, j)};
    }
    return f;
  }

  /// Lateral band [y_lo, y_hi) of the truck's lane.
  std::array<double, 2> truck_lane() const {
    for (const auto& v : vehicles) {
      if (v.vehicle_class == VehicleClass::Truck) {
        const double w = ly / lanes;
        const double k = std::floor(v.position.y / w);
        return {k * w, (k + 1.0) * w};
      }
    }
    throw ParameterError("overtaking scenario has no truck");
  }
};

struct CenterOfMass {
  double mass = 0.0;
  double x = 0.0;
  double y = 0.0;
};

/// Center of mass of one class, optionally restricted to y in [y_lo, y_hi).
inline CenterOfMass center_of_mass(const Field2D& f, bool trucks, double y_lo = -std::numeric_limits<double>::infinity(),
                                   double y_hi = std::numeric_limits<double>::infinity()) {
  const Grid2D& g = f.grid();
  CenterOfMass c;
  for (std::size_t j = 0; j < g.ny; ++j) {
    const double y = g.y_center(j);
    if (y < y_lo || y >= y_hi) continue;
    for (std::size_t i = 0; i < g.nx; ++i) {
      const double m = trucks ? f(i, j).mu : f(i, j).rho;
      c.mass += m;
      c.x += m * g.x_center(i);
      c.y += m * y;
    }
  }
  if (c.mass > 0.0) {
    c.x /= c.mass;
    c.y /= c.mass;
  }
  c.mass *= g.cell_area();
  return c;
}

// ---------------------------------------------------------------------------
// Two-lane comparison: the same vehicles on two 1D lanes.

struct MultilaneScenario {
  double length = 100.0;
  double spacing = 0.2;
  double t_final = 4.0;
  double c_rho_kmh = 80.0;
  double c_mu_kmh = 0.0;
  /// Lane-change constant per km.
  double C_per_km = 1.0;
  double effective_length = 7.5;
  double bandwidth = 5.0;
  double car_lane1 = 62.0;
  double car_lane2 = 30.0;
  double truck_lane2 = 60.0;

  LaneGrid grid() const {
    return {length, static_cast<std::size_t>(std::llround(length / spacing)), 0.0};
  }

  MultilaneParams params() const {
    return {units::kmh_to_mps(c_rho_kmh), units::kmh_to_mps(c_mu_kmh),
            units::per_km_to_per_m(rmax_from_geometry(1, effective_length)),
            C_per_km / units::kMetersPerKm};
  }

  LaneField initial_field() const {
    const LaneGrid g = grid();
    g.validate();
    const double c1[] = {car_lane1}, c2[] = {car_lane2}, tr[] = {truck_lane2};
    const auto d1 = reconstruct_density_1d(c1, g.x0, g.dx(), g.n, bandwidth);
    const auto d2 = reconstruct_density_1d(c2, g.x0, g.dx(), g.n, bandwidth);
    const auto dt = reconstruct_density_1d(tr, g.x0, g.dx(), g.n, bandwidth);
    LaneField f(g);
    for (std::size_t i = 0; i < g.n; ++i) {
      f.lane1[i] = {d1[i], 0.0};
      f.lane2[i] = {d2[i], dt[i]};
    }
    return f;
  }
};

// ---------------------------------------------------------------------------
// Stand-in for the highway section used for the KDE comparison: 450 m x 14 m,
// three cars and one truck moving at constant velocity. The measured
// trajectories of the original data set are not available; this synthetic
// set only reproduces the geometry and the vehicle mix.

struct HighwayStandIn {
  double lx = 450.0;
  double ly = 14.0;
  double spacing_x = 2.0;
  double spacing_y = 0.2;
  int lanes = 3;
  double effective_length = 7.5;
  double c_x_kmh = 97.04;
  double c_y_kmh = -0.41;
  double t_start = 14.0;
  double duration = 10.0;
  double error_interval = 0.5;
  double sample_dt = 0.5;
  double record_until = 30.0;

  Grid2D grid() const { return Grid2D::from_spacing(lx, ly, spacing_x, spacing_y); }
  double r_max() const {
    return units::line_to_area_density(rmax_from_geometry(lanes, effective_length), ly);
  }
  SharedFlux flux() const {
    return {units::kmh_to_mps(c_x_kmh), units::kmh_to_mps(c_y_kmh), r_max()};
  }
  KernelConfig kernel() const { return default_bandwidths(lx, ly); }

  TrajectoryDataset trajectories() const {
    struct Motion {
      const char* id;
      VehicleClass cls;
      double x0, y0, vx, vy;
    };
    static constexpr Motion kMotions[] = {
        {"car_a", VehicleClass::Car, -280.0, 2.3, 26.0, -0.02},
        {"car_b", VehicleClass::Car, -300.0, 6.9, 29.0, -0.05},
        {"car_c", VehicleClass::Car, -250.0, 11.5, 24.0, 0.0},
        {"truck_a", VehicleClass::Truck, -240.0, 2.3, 22.0, 0.0},
    };
    TrajectoryDataset out;
    for (const auto& m : kMotions) {
      for (double t = 0.0; t <= record_until + 1e-9; t += sample_dt) {
        const double x = m.x0 + m.vx * t;
        if (x < 0.0 || x > lx) continue;
        out.push_back({m.id, m.cls, t, x, m.y0 + m.vy * t});
      }
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Synthetic calibration data: every bin holds fresh vehicles moving exactly
// at the model speed of the bin's occupancy, with counts constant over each
// aggregation window.

struct SyntheticCalibration {
  FitVariant variant = FitVariant::Shared;
  /// (c_x, c_y) for the shared variant, (c_x_rho, c_y_rho, c_x_mu, c_y_mu) otherwise; km/h.
  std::vector<double> coefficients{97.04, -0.41};
  double lx = 450.0;
  double r_max = 400.0;
  double dt = 1.0;
  std::size_t kappa = 60;
  std::size_t windows = 20;
  bool with_trucks = true;

  TrajectoryDataset trajectories() const {
    const std::size_t need = variant == FitVariant::Shared ? 2 : 4;
    if (coefficients.size() != need) throw ParameterError("wrong number of generating coefficients");
    TrajectoryDataset out;
    const double max_vehicles = r_max * lx / units::kMetersPerKm;
    for (std::size_t w = 0; w < windows; ++w) {
      const double occ = 0.05 + 0.85 * static_cast<double>(w) / static_cast<double>(std::max<std::size_t>(1, windows - 1));
      const double share = with_trucks ? 0.1 + 0.3 * static_cast<double>((w * 7) % windows) / static_cast<double>(windows) : 0.0;
      const auto total = static_cast<std::size_t>(std::llround(occ * max_vehicles));
      const auto trucks = static_cast<std::size_t>(std::llround(share * static_cast<double>(total)));
      const std::size_t cars = total - trucks;
      const double rho = static_cast<double>(cars) * units::kMetersPerKm / lx;
      const double mu = static_cast<double>(trucks) * units::kMetersPerKm / lx;
      const double free = 1.0 - (rho + mu) / r_max;
      double ux_car, uy_car, ux_truck, uy_truck;
      if (variant == FitVariant::Shared) {
        // The shared speed is the sum of the class means.
        const double split = (cars > 0 && trucks > 0) ? 0.5 : 1.0;
        ux_car = ux_truck = split * coefficients[0] * free;
        uy_car = uy_truck = split * coefficients[1] * free;
      } else {
        ux_car = coefficients[0] * free;
        uy_car = coefficients[1] * free;
        ux_truck = coefficients[2] * free;
        uy_truck = coefficients[3] * free;
      }
      for (std::size_t b = 0; b < kappa; ++b) {
        const double tk = static_cast<double>(w * kappa + b) * dt;
        for (std::size_t v = 0; v < total; ++v) {
          const bool car = v < cars;
          const double vx = units::kmh_to_mps(car ? ux_car : ux_truck);
          const double vy = units::kmh_to_mps(car ? uy_car : uy_truck);
          const double x0 = 0.1 * lx + 0.8 * lx * static_cast<double>(v) / static_cast<double>(total);
          const double y0 = 2.0 + 3.5 * static_cast<double>(v % 3);
          const std::string id = "w" + std::to_string(w) + "b" + std::to_string(b) + "v" + std::to_string(v);
          for (double frac : {0.25, 0.75}) {
            const double t = tk + frac * dt;
            out.push_back({id, car ? VehicleClass::Car : VehicleClass::Truck, t,
                           x0 + vx * (frac - 0.25) * dt, y0 + vy * (frac - 0.25) * dt});
          }
        }
      }
    }
    return out;
  }
};

}  // namespace traffic2d
