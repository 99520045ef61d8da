#pragma once

// Snapshot files, JSON sidecars and report serialization.

#include <traffic2d/calibration.hpp>
#include <traffic2d/error.hpp>
#include <traffic2d/grid.hpp>
#include <traffic2d/model.hpp>
#include <traffic2d/multilane.hpp>
#include <traffic2d/riemann2d.hpp>
#include <traffic2d/trajectory.hpp>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <variant>

namespace traffic2d {

using nlohmann::json;

inline json to_json(const Grid2D& g) {
  return {{"lx", g.lx}, {"ly", g.ly}, {"nx", g.nx}, {"ny", g.ny}, {"x0", g.x0}, {"y0", g.y0},
          {"dx", g.dx()}, {"dy", g.dy()}};
}

inline Grid2D grid_from_json(const json& j) {
  Grid2D g{j.at("lx").get<double>(), j.at("ly").get<double>(), j.at("nx").get<std::size_t>(),
           j.at("ny").get<std::size_t>(), j.value("x0", 0.0), j.value("y0", 0.0)};
  g.validate();
  return g;
}

inline json to_json(const FluxParams& p) {
  json j = std::visit(
      [](const auto& f) -> json {
        using P = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<P, SharedFlux>) {
          return {{"c_x", f.c_x}, {"c_y", f.c_y}, {"r_max", f.r_max}};
        } else {
          return {{"c_x_rho", f.c_x_rho}, {"c_y_rho", f.c_y_rho}, {"c_x_mu", f.c_x_mu},
                  {"c_y_mu", f.c_y_mu}, {"r_max", f.r_max}};
        }
      },
      p);
  j["variant"] = variant_name(p);
  return j;
}

inline FluxParams flux_from_json(const json& j) {
  const std::string v = j.at("variant").get<std::string>();
  if (v == "shared") {
    return SharedFlux{j.at("c_x").get<double>(), j.at("c_y").get<double>(), j.at("r_max").get<double>()};
  }
  auto per_class = [&](auto p) {
    p.c_x_rho = j.at("c_x_rho").get<double>();
    p.c_y_rho = j.at("c_y_rho").get<double>();
    p.c_x_mu = j.at("c_x_mu").get<double>();
    p.c_y_mu = j.at("c_y_mu").get<double>();
    p.r_max = j.at("r_max").get<double>();
    return p;
  };
  if (v == "length_weighted") return per_class(LengthWeightedFlux{});
  if (v == "per_class_shared_max") return per_class(PerClassFlux{});
  throw ParameterError("unknown flux variant '" + v + "'");
}

inline json to_json(const SimilarityPoint& p) { return json::array({p.xi, p.eta}); }

inline json to_json(const ValidationReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"name", c.name}, {"expected", c.expected}, {"measured", c.measured},
                      {"discrepancy", std::isfinite(c.discrepancy) ? json(c.discrepancy) : json(nullptr)},
                      {"tolerance", c.tolerance}, {"passed", c.passed}});
  }
  json points = json::array();
  for (const auto& p : r.points) {
    points.push_back({{"name", p.name}, {"predicted", to_json(p.predicted)},
                      {"measured", p.measured ? to_json(*p.measured) : json(nullptr)}});
  }
  const QuadrantData& q = r.structure.data;
  return {{"case", to_string(r.structure.wave_case)},
          {"sub_case", to_string(r.structure.sub_case)},
          {"degenerate", r.structure.degenerate},
          {"quadrants", {q.v1, q.v2, q.v3, q.v4}},
          {"status", to_string(r.status)},
          {"tolerance", r.tolerance},
          {"jump_threshold", r.jump_threshold},
          {"discontinuous_cells", r.discontinuous_cells},
          {"checks", checks},
          {"points", points},
          {"note", r.note}};
}

inline json to_json(const FitResult& r) {
  json coeffs = json::object();
  for (const auto& c : r.coefficients) {
    coeffs[c.name] = {{"value", c.value ? json(*c.value) : json(nullptr)},
                      {"identifiable", c.value.has_value()},
                      {"residual", c.residual},
                      {"iterations", c.iterations},
                      {"bins_used", c.bins_used},
                      {"bounds", {c.bounds.lower, c.bounds.upper}}};
  }
  return {{"variant", to_string(r.variant)}, {"r_max", r.r_max}, {"residual_l2", r.residual_l2},
          {"coefficients", coeffs}};
}

/// Writes `x_m,y_m,rho,mu`, one row per cell, x fastest.
inline void write_snapshot_csv(std::ostream& out, const Field2D& f) {
  const Grid2D& g = f.grid();
  out << "x_m,y_m,rho,mu\n";
  out.precision(17);
  for (std::size_t j = 0; j < g.ny; ++j) {
    for (std::size_t i = 0; i < g.nx; ++i) {
      out << g.x_center(i) << ',' << g.y_center(j) << ',' << f(i, j).rho << ',' << f(i, j).mu << '\n';
    }
  }
}

/// Reads a snapshot written by write_snapshot_csv on the given grid.
inline Field2D read_snapshot_csv(std::istream& in, const Grid2D& g) {
  std::string line;
  if (!std::getline(in, line) || detail::split_csv_line(line) !=
                                     std::vector<std::string_view>{"x_m", "y_m", "rho", "mu"}) {
    throw InputError("snapshot CSV must start with x_m,y_m,rho,mu");
  }
  Field2D f(g);
  std::size_t k = 0, line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 4) throw InputError("snapshot line " + std::to_string(line_no) + ": expected 4 fields");
    if (k >= g.size()) throw InputError("snapshot has more rows than the grid has cells");
    f.values()[k++] = {detail::parse_double(fields[2], line_no), detail::parse_double(fields[3], line_no)};
  }
  if (k != g.size()) throw InputError("snapshot has fewer rows than the grid has cells");
  return f;
}

inline void write_lane_snapshot_csv(std::ostream& out, const LaneField& f) {
  out << "x_m,rho_lane1,mu_lane1,rho_lane2,mu_lane2\n";
  out.precision(17);
  for (std::size_t i = 0; i < f.grid.n; ++i) {
    out << f.grid.x_center(i) << ',' << f.lane1[i].rho << ',' << f.lane1[i].mu << ','
        << f.lane2[i].rho << ',' << f.lane2[i].mu << '\n';
  }
}

/// Fundamental-diagram points: one row per bin with its densities and fluxes.
inline void write_fd_points_csv(std::ostream& out, const MacroSeries& s) {
  out << "t_s,rho_veh_km,mu_veh_km,qx_rho_veh_h,qy_rho_veh_h,qx_mu_veh_h,qy_mu_veh_h\n";
  out.precision(17);
  auto opt = [&](const std::optional<double>& v) {
    if (v) out << *v;
  };
  for (const auto& b : s.bins) {
    out << b.t << ',' << b.rho << ',' << b.mu << ',';
    opt(b.qx_rho);
    out << ',';
    opt(b.qy_rho);
    out << ',';
    opt(b.qx_mu);
    out << ',';
    opt(b.qy_mu);
    out << '\n';
  }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  if (!out) throw InputError("failed writing " + path.string());
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace traffic2d
