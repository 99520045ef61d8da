#pragma once

// Unit conversions. Trajectories arrive in meters and seconds; macroscopic
// series use veh/km, km/h and veh/h; simulations run in SI units.

namespace traffic2d::units {

inline constexpr double kMetersPerKm = 1000.0;
inline constexpr double kSecondsPerHour = 3600.0;
inline constexpr double kKmhPerMps = kSecondsPerHour / kMetersPerKm;

constexpr double kmh_to_mps(double v) { return v / kKmhPerMps; }
constexpr double mps_to_kmh(double v) { return v * kKmhPerMps; }

/// veh/m to veh/km.
constexpr double per_m_to_per_km(double d) { return d * kMetersPerKm; }
constexpr double per_km_to_per_m(double d) { return d / kMetersPerKm; }

/// Line density (veh/km) spread over a road of width `width_m`, in veh/m^2.
constexpr double line_to_area_density(double per_km, double width_m) {
  return per_km_to_per_m(per_km) / width_m;
}

}  // namespace traffic2d::units
