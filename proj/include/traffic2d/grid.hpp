#pragma once

#include <traffic2d/error.hpp>
#include <traffic2d/model.hpp>

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace traffic2d {

/// Uniform cell-centered grid over [x0, x0+lx] x [y0, y0+ly].
struct Grid2D {
  double lx = 1.0;
  double ly = 1.0;
  std::size_t nx = 3;
  std::size_t ny = 3;
  double x0 = 0.0;
  double y0 = 0.0;

  double dx() const { return lx / static_cast<double>(nx); }
  double dy() const { return ly / static_cast<double>(ny); }
  double cell_area() const { return dx() * dy(); }
  double x_center(std::size_t i) const { return x0 + (static_cast<double>(i) + 0.5) * dx(); }
  double y_center(std::size_t j) const { return y0 + (static_cast<double>(j) + 0.5) * dy(); }
  std::size_t size() const { return nx * ny; }

  void validate() const {
    if (nx < 3 || ny < 3) throw ParameterError("grid needs at least 3 cells per axis");
    if (!(lx > 0.0) || !(ly > 0.0)) throw ParameterError("grid lengths must be positive");
  }

  /// Grid with the requested spacing; the lengths must be whole multiples of it.
  static Grid2D from_spacing(double lx, double ly, double dx, double dy,
                             double x0 = 0.0, double y0 = 0.0) {
    if (!(dx > 0.0) || !(dy > 0.0)) throw ParameterError("grid spacing must be positive");
    const auto nx = static_cast<std::size_t>(std::llround(lx / dx));
    const auto ny = static_cast<std::size_t>(std::llround(ly / dy));
    Grid2D g{lx, ly, nx, ny, x0, y0};
    g.validate();
    return g;
  }

  friend bool operator==(const Grid2D&, const Grid2D&) = default;
};

/// Row-major scalar field on a grid; index (i, j) with i along x.
template <class T>
class GridArray {
public:
  GridArray() = default;
  explicit GridArray(const Grid2D& grid, T value = T{})
      : grid_(grid), data_(grid.size(), value) {}

  const Grid2D& grid() const { return grid_; }
  T& operator()(std::size_t i, std::size_t j) { return data_[j * grid_.nx + i]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[j * grid_.nx + i]; }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

private:
  Grid2D grid_{};
  std::vector<T> data_;
};

using Field2D = GridArray<ClassState>;
using ScalarField = GridArray<double>;

/// Total (rho, mu) mass: sum of densities times cell area.
inline Vec2 total_mass(const Field2D& field) {
  double rho = 0.0, mu = 0.0;
  for (const auto& s : field.values()) {
    rho += s.rho;
    mu += s.mu;
  }
  const double a = field.grid().cell_area();
  return {rho * a, mu * a};
}

inline ScalarField rho_component(const Field2D& field) {
  ScalarField out(field.grid());
  auto src = field.values();
  auto dst = out.values();
  for (std::size_t k = 0; k < src.size(); ++k) dst[k] = src[k].rho;
  return out;
}

inline ScalarField mu_component(const Field2D& field) {
  ScalarField out(field.grid());
  auto src = field.values();
  auto dst = out.values();
  for (std::size_t k = 0; k < src.size(); ++k) dst[k] = src[k].mu;
  return out;
}

/// r = rho + mu per cell.
inline ScalarField total_density(const Field2D& field) {
  ScalarField out(field.grid());
  auto src = field.values();
  auto dst = out.values();
  for (std::size_t k = 0; k < src.size(); ++k) dst[k] = src[k].rho + src[k].mu;
  return out;
}

}  // namespace traffic2d
