// traffic2d <command> --config <path> --out <dir> [--seed N]
//
// Exit codes: 0 pass, 1 validation fail, 2 config error, 3 runtime error.

#include <traffic2d/calibration.hpp>
#include <traffic2d/io.hpp>
#include <traffic2d/kde.hpp>
#include <traffic2d/multilane.hpp>
#include <traffic2d/riemann2d.hpp>
#include <traffic2d/scenarios.hpp>
#include <traffic2d/solver.hpp>
#include <traffic2d/units.hpp>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace traffic2d;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Reads one JSON object, records every value it hands out (defaults
/// included) and rejects keys nobody asked for.
class Config {
public:
  Config(json j, std::string where) : j_(std::move(j)), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected a JSON object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  T get(const std::string& key, T fallback) {
    used_.insert(key);
    T v = fallback;
    if (j_.contains(key)) v = convert<T>(key);
    resolved_[key] = v;
    return v;
  }

  template <class T>
  T require(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) throw ConfigError(where_ + ": missing required key '" + key + "'");
    T v = convert<T>(key);
    resolved_[key] = v;
    return v;
  }

  template <class F>
  void section(const std::string& key, F&& fn) {
    used_.insert(key);
    Config child(j_.contains(key) ? j_.at(key) : json::object(), where_ + "." + key);
    fn(child);
    child.finish();
    resolved_[key] = child.resolved();
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) throw ConfigError(where_ + ": unknown key '" + k + "'");
    }
  }

  const json& resolved() const { return resolved_; }
  void note(const std::string& key, json value) { resolved_[key] = std::move(value); }

private:
  template <class T>
  T convert(const std::string& key) const {
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where_ + ": key '" + key + "' has the wrong type");
    }
  }

  json j_;
  std::string where_;
  std::set<std::string> used_;
  json resolved_ = json::object();
};

/// Collects output files relative to the output directory.
class Output {
public:
  explicit Output(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

  const fs::path& root() const { return root_; }

  void text(const std::string& rel, const std::string& body) {
    write_text_file(root_ / rel, body);
    files_.insert(rel);
  }
  void json_file(const std::string& rel, const json& j) { text(rel, j.dump(2) + "\n"); }

  void snapshot(const std::string& run, std::size_t idx, const Field2D& f, const FluxParams& p,
                double t, std::size_t step) {
    std::ostringstream csv;
    write_snapshot_csv(csv, f);
    const std::string stem = run + "/" + std::to_string(idx);
    text(stem + ".csv", csv.str());
    json_file(stem + ".json",
              {{"grid", to_json(f.grid())}, {"params", to_json(p)}, {"t", t}, {"step", step},
               {"columns", {"x_m", "y_m", "rho", "mu"}}});
  }

  void lane_snapshot(const std::string& run, std::size_t idx, const LaneField& f,
                     const MultilaneParams& p, double t, std::size_t step) {
    std::ostringstream csv;
    write_lane_snapshot_csv(csv, f);
    const std::string stem = run + "/" + std::to_string(idx);
    text(stem + ".csv", csv.str());
    json_file(stem + ".json",
              {{"grid", {{"length", f.grid.length}, {"n", f.grid.n}, {"x0", f.grid.x0}, {"dx", f.grid.dx()}}},
               {"params", {{"c_rho", p.c_rho}, {"c_mu", p.c_mu}, {"r_max", p.r_max}, {"C", p.C}}},
               {"t", t},
               {"step", step},
               {"columns", {"x_m", "rho_lane1", "mu_lane1", "rho_lane2", "mu_lane2"}}});
  }

  /// Writes manifest.json listing every file with its SHA-256.
  void manifest(const std::string& command, const json& extra) {
    json files = json::array();
    for (const auto& rel : files_) {
      const fs::path p = root_ / rel;
      files.push_back({{"path", rel}, {"bytes", fs::file_size(p)}, {"sha256", sha256_file(p)}});
    }
    json m = {{"command", command}, {"files", files}};
    for (const auto& [k, v] : extra.items()) m[k] = v;
    write_json_file(root_ / "manifest.json", m);
  }

private:
  static std::string sha256_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw InputError("cannot read " + p.string());
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
      EVP_MD_CTX_free(ctx);
      throw std::runtime_error("SHA-256 unavailable");
    }
    std::vector<char> buf(1 << 16);
    while (in) {
      in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
      if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int k = 0; k < len; ++k) {
      out += hex[md[k] >> 4];
      out += hex[md[k] & 0xf];
    }
    return out;
  }

  fs::path root_;
  std::set<std::string> files_;
};

BoundaryCondition parse_boundary(const std::string& s) {
  if (s == "outflow") return OutflowBoundary{};
  if (s == "periodic") return PeriodicBoundary{};
  throw ConfigError("boundary must be 'outflow' or 'periodic', got '" + s + "'");
}

SplittingForm parse_splitting(const std::string& s) {
  if (s == "standard") return SplittingForm::Standard;
  if (s == "flux_only_from_intermediate") return SplittingForm::FluxOnlyFromIntermediate;
  throw ConfigError("splitting must be 'standard' or 'flux_only_from_intermediate'");
}

/// Flux block: {"variant": ..., coefficients, "r_max": ...}; speeds in the
/// units of the run.
FluxParams read_flux(Config& c, const FluxParams& fallback) {
  const std::string variant = c.get<std::string>("variant", variant_name(fallback));
  const json base = to_json(fallback);
  auto num = [&](const char* key) {
    return c.get<double>(key, base.contains(key) ? base.at(key).get<double>() : 0.0);
  };
  json j = {{"variant", variant}, {"r_max", num("r_max")}};
  if (variant == "shared") {
    j["c_x"] = num("c_x");
    j["c_y"] = num("c_y");
  } else {
    for (const char* k : {"c_x_rho", "c_y_rho", "c_x_mu", "c_y_mu"}) j[k] = num(k);
  }
  try {
    return flux_from_json(j);
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
}

// ---------------------------------------------------------------------------

int cmd_riemann_validate(Config& cfg, Output& out) {
  RiemannSetup setup;
  std::optional<RiemannCase> named;
  std::array<double, 4> rho{};
  if (cfg.has("case") && cfg.has("quadrants")) throw ConfigError("give either 'case' or 'quadrants'");
  if (cfg.has("quadrants")) {
    const auto q = cfg.require<std::vector<double>>("quadrants");
    if (q.size() != 4) throw ConfigError("'quadrants' needs four car densities");
    std::copy(q.begin(), q.end(), rho.begin());
  } else {
    const std::string name = cfg.get<std::string>("case", "no_rarefactions");
    try {
      named = riemann_case(name);
    } catch (const ParameterError& e) {
      throw ConfigError(e.what());
    }
    rho = named->rho;
  }
  setup.half_width = cfg.get("half_width", setup.half_width);
  setup.spacing = cfg.get("spacing", setup.spacing);
  setup.truck_ratio = cfg.get("truck_ratio", setup.truck_ratio);
  setup.normalization = cfg.get("normalization", setup.normalization);
  setup.c_x = cfg.get("c_x", setup.c_x);
  setup.c_y = cfg.get("c_y", setup.c_y);
  setup.t_final = cfg.get("t_final", setup.t_final);
  SolverConfig sc;
  sc.t_final = setup.t_final;
  sc.cfl_safety = cfg.get("cfl_safety", sc.cfl_safety);
  sc.splitting = parse_splitting(cfg.get<std::string>("splitting", "standard"));
  ValidationOptions vo;
  vo.t = setup.t_final;
  vo.jump_fraction = cfg.get("jump_fraction", vo.jump_fraction);
  vo.tolerance = cfg.get("tolerance", vo.tolerance);
  const bool write_snapshots = cfg.get("write_snapshots", true);
  cfg.finish();
  if (!(setup.spacing > 0.0) || !(setup.half_width > 0.0) || !(setup.normalization > 0.0)) {
    throw ConfigError("half_width, spacing and normalization must be positive");
  }

  const QuadrantData data = quadrant_data(rho, setup);
  const WaveStructure w = classify(data, setup.scalar_flux());
  const FluxParams flux = setup.flux();
  const Field2D init = riemann_initial_field(rho, setup);
  const auto snaps = simulate(init, flux, sc);
  if (write_snapshots) {
    for (std::size_t k = 0; k < snaps.size(); ++k) {
      out.snapshot("snapshots", k, snaps[k].field, flux, snaps[k].t, snaps[k].step);
    }
  }
  ValidationReport rep = validate_field(total_density(snaps.back().field), w, vo);

  json report = to_json(rep);
  bool pass = rep.status == ValidationStatus::Pass;
  if (named) {
    const bool ok = w.wave_case == named->expected_case && w.sub_case == named->expected_sub_case;
    report["expected_case"] = to_string(named->expected_case);
    report["expected_sub_case"] = to_string(named->expected_sub_case);
    report["classification_matches"] = ok;
    pass = pass && ok;
  }
  if (w.triple_points) {
    // A is reported against the value printed with the scenario and against
    // the one that follows from the secant formula.
    const SimilarityPoint printed{0.25, 0.5};
    const SimilarityPoint derived = w.triple_points->a;
    std::optional<SimilarityPoint> measured;
    for (const auto& p : rep.points) {
      if (p.name == "A") measured = p.measured;
    }
    json a = {{"printed", to_json(printed)}, {"derived", to_json(derived)},
              {"measured", measured ? to_json(*measured) : json(nullptr)}, {"tolerance", rep.tolerance}};
    if (measured) {
      const double dp = distance(*measured, printed), dd = distance(*measured, derived);
      a["distance_to_printed"] = dp;
      a["distance_to_derived"] = dd;
      a["matches_printed"] = dp <= rep.tolerance;
      a["matches_derived"] = dd <= rep.tolerance;
    }
    report["a_location"] = a;
  }
  report["steps"] = snaps.back().step;
  report["config"] = cfg.resolved();
  report["passed"] = pass;
  out.json_file("report.json", report);
  out.manifest("riemann-validate", {{"passed", pass}});
  std::cout << "riemann-validate: " << to_string(w.wave_case) << ' ' << to_string(rep.status)
            << (pass ? " pass" : " fail") << '\n';
  return pass ? kExitPass : kExitFail;
}

// ---------------------------------------------------------------------------

Grid2D read_grid(Config& c, const Grid2D& fallback) {
  const double lx = c.get("lx", fallback.lx);
  const double ly = c.get("ly", fallback.ly);
  const auto nx = c.get<std::size_t>("nx", fallback.nx);
  const auto ny = c.get<std::size_t>("ny", fallback.ny);
  const double x0 = c.get("x0", fallback.x0);
  const double y0 = c.get("y0", fallback.y0);
  Grid2D g{lx, ly, nx, ny, x0, y0};
  try {
    g.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  return g;
}

ScalarField component(const Field2D& f, bool trucks, double scale) {
  ScalarField out(f.grid(), 0.0);
  auto src = f.values();
  auto dst = out.values();
  for (std::size_t k = 0; k < src.size(); ++k) dst[k] = (trucks ? src[k].mu : src[k].rho) / scale;
  return out;
}

Field2D kde_field(const std::vector<LinearTrack>& tracks, double t, const Grid2D& g,
                  const KernelConfig& k) {
  const ScalarField rc = reconstruct_density(positions_at(tracks, t, VehicleClass::Car), g, k);
  const ScalarField rt = reconstruct_density(positions_at(tracks, t, VehicleClass::Truck), g, k);
  Field2D f(g);
  for (std::size_t j = 0; j < g.ny; ++j) {
    for (std::size_t i = 0; i < g.nx; ++i) f(i, j) = {rc(i, j), rt(i, j)};
  }
  return f;
}

/// Runs the solver and writes the snapshots; returns them.
std::vector<Snapshot> run_and_store(const Field2D& init, const FluxParams& flux, const SolverConfig& sc,
                                    Output& out, bool write) {
  auto snaps = simulate(init, flux, sc);
  if (write) {
    for (std::size_t k = 0; k < snaps.size(); ++k) {
      out.snapshot("snapshots", k, snaps[k].field, flux, snaps[k].t, snaps[k].step);
    }
  }
  return snaps;
}

json mass_json(const Field2D& f) {
  const Vec2 m = total_mass(f);
  return {{"rho", m[0]}, {"mu", m[1]}};
}

int simulate_overtaking(Config& cfg, Output& out, json& report) {
  OvertakingScenario sc;
  sc.spacing = cfg.get("spacing", sc.spacing);
  sc.t_final = cfg.get("t_final", sc.t_final);
  SolverConfig solver;
  solver.t_final = sc.t_final;
  solver.cfl_safety = cfg.get("cfl_safety", solver.cfl_safety);
  solver.snapshot_interval = cfg.get("snapshot_interval", 0.1);
  const bool write = cfg.get("write_snapshots", true);
  cfg.finish();

  const FluxParams flux = sc.flux();
  const auto snaps = run_and_store(sc.initial_field(), flux, solver, out, write);
  const auto lane = sc.truck_lane();
  const CenterOfMass truck0 = center_of_mass(snaps.front().field, true);
  json trace = json::array();
  std::optional<double> crossing;
  double max_mu_drift = 0.0, max_truck_shift = 0.0, max_occ = 0.0;
  for (const auto& s : snaps) {
    const CenterOfMass car = center_of_mass(s.field, false, lane[0], lane[1]);
    const CenterOfMass truck = center_of_mass(s.field, true);
    max_mu_drift = std::max(max_mu_drift, std::abs(truck.mass - truck0.mass) / truck0.mass);
    max_truck_shift = std::max(max_truck_shift, std::abs(truck.x - truck0.x));
    for (const auto& v : s.field.values()) max_occ = std::max(max_occ, occupancy(v, flux));
    if (!crossing && car.x >= truck.x) crossing = s.t;
    trace.push_back({{"t", s.t}, {"car_x", car.x}, {"car_mass_truck_lane", car.mass},
                     {"truck_x", truck.x}, {"truck_mass", truck.mass}});
  }
  const double dx = sc.grid().dx();
  const bool mass_ok = max_mu_drift <= 1e-10;
  const bool still_ok = max_truck_shift <= 2.0 * dx;
  const bool cross_ok = crossing && *crossing < sc.t_final;
  report["com_trace"] = trace;
  report["truck_lane"] = {lane[0], lane[1]};
  report["crossing_time"] = crossing ? json(*crossing) : json(nullptr);
  report["checks"] = {
      {"truck_mass_relative_drift", {{"value", max_mu_drift}, {"tolerance", 1e-10}, {"passed", mass_ok}}},
      {"truck_com_shift_m", {{"value", max_truck_shift}, {"tolerance", 2.0 * dx}, {"passed", still_ok}}},
      {"car_passes_truck_before_t_final", {{"passed", cross_ok}}}};
  report["max_occupancy"] = max_occ;
  report["flux"] = to_json(flux);
  report["initial_mass"] = mass_json(snaps.front().field);
  report["final_mass"] = mass_json(snaps.back().field);
  return mass_ok && still_ok && cross_ok ? kExitPass : kExitFail;
}

/// KDE-initialized run compared against the KDE of the extrapolated tracks.
int simulate_tracks(Config& cfg, Output& out, json& report, bool stand_in) {
  HighwayStandIn hw;
  TrajectoryDataset data;
  if (stand_in) {
    data = hw.trajectories();
  } else {
    const std::string path = cfg.require<std::string>("trajectories");
    const std::string format = cfg.get<std::string>("format", "csv");
    std::ifstream in(path);
    if (!in) throw InputError("cannot open trajectory file " + path);
    data = TrajectoryAdapterRegistry{}.read(format, in);
  }
  hw.lx = cfg.get("lx", hw.lx);
  hw.ly = cfg.get("ly", hw.ly);
  hw.spacing_x = cfg.get("spacing_x", hw.spacing_x);
  hw.spacing_y = cfg.get("spacing_y", hw.spacing_y);
  hw.lanes = cfg.get("lanes", hw.lanes);
  hw.effective_length = cfg.get("effective_length", hw.effective_length);
  hw.c_x_kmh = cfg.get("c_x_kmh", hw.c_x_kmh);
  hw.c_y_kmh = cfg.get("c_y_kmh", hw.c_y_kmh);
  hw.t_start = cfg.get("t_start", hw.t_start);
  hw.duration = cfg.get("duration", hw.duration);
  hw.error_interval = cfg.get("error_interval", hw.error_interval);
  KernelConfig kernel = default_bandwidths(hw.lx, hw.ly);
  kernel.hx = cfg.get("hx", kernel.hx);
  kernel.hy = cfg.get("hy", kernel.hy);
  SolverConfig solver;
  solver.t_final = hw.duration;
  solver.snapshot_interval = hw.error_interval;
  solver.cfl_safety = cfg.get("cfl_safety", solver.cfl_safety);
  solver.boundary = parse_boundary(cfg.get<std::string>("boundary", "outflow"));
  const bool write = cfg.get("write_snapshots", true);
  cfg.finish();

  const Grid2D g = hw.grid();
  const FluxParams flux = hw.flux();
  const auto tracks = fit_linear_tracks(data);
  const Field2D init = kde_field(tracks, hw.t_start, g, kernel);
  const auto snaps = run_and_store(init, flux, solver, out, write);
  const double r_max = hw.r_max();

  std::ostringstream csv;
  csv.precision(17);
  csv << "t_s,E_rho,E_mu\n";
  json errors = json::array();
  for (const auto& s : snaps) {
    const Field2D ref = kde_field(tracks, hw.t_start + s.t, g, kernel);
    const double e_rho = l1_error(component(ref, false, r_max), component(s.field, false, r_max));
    const double e_mu = l1_error(component(ref, true, r_max), component(s.field, true, r_max));
    csv << s.t << ',' << e_rho << ',' << e_mu << '\n';
    errors.push_back({{"t", s.t}, {"E_rho", e_rho}, {"E_mu", e_mu}});
  }
  out.text("errors.csv", csv.str());
  {
    std::ostringstream tr;
    write_trajectory_csv(tr, data);
    out.text("trajectories.csv", tr.str());
  }
  std::size_t present = 0;
  for (const auto& t : tracks) {
    const Point2 p = t.at(hw.t_start);
    if (p.x >= 0.0 && p.x <= hw.lx) ++present;
  }
  report["errors"] = errors;
  report["kernel"] = {{"hx", kernel.hx}, {"hy", kernel.hy}};
  report["vehicles"] = tracks.size();
  report["vehicles_in_domain_at_start"] = present;
  report["truncation_loss_initial"] =
      truncation_loss(component(init, false, 1.0), positions_at(tracks, hw.t_start, VehicleClass::Car).size());
  report["flux"] = to_json(flux);
  report["stand_in"] = stand_in;
  return kExitPass;
}

int simulate_plain(Config& cfg, Output& out, json& report, const std::string& scenario,
                   std::uint64_t seed) {
  SolverConfig solver;
  solver.t_final = cfg.get("t_final", 1.0);
  solver.cfl_safety = cfg.get("cfl_safety", solver.cfl_safety);
  solver.snapshot_interval = cfg.get("snapshot_interval", 0.0);
  solver.boundary = parse_boundary(cfg.get<std::string>("boundary", scenario == "random" ? "periodic" : "outflow"));
  const bool write = cfg.get("write_snapshots", true);

  Field2D init;
  FluxParams flux = SharedFlux{-1.0, -1.0, 1.0};
  if (scenario == "file") {
    const fs::path csv = cfg.require<std::string>("initial");
    fs::path sidecar = csv;
    sidecar.replace_extension(".json");
    std::ifstream js(sidecar);
    if (!js) throw InputError("missing sidecar " + sidecar.string());
    json side;
    try {
      side = json::parse(js);
    } catch (const json::exception& e) {
      throw InputError("bad sidecar " + sidecar.string() + ": " + e.what());
    }
    const Grid2D g = grid_from_json(side.at("grid"));
    if (side.contains("params")) flux = flux_from_json(side.at("params"));
    std::ifstream in(csv);
    if (!in) throw InputError("cannot open " + csv.string());
    init = read_snapshot_csv(in, g);
  } else {
    Grid2D g{1.0, 1.0, 50, 50, 0.0, 0.0};
    cfg.section("grid", [&](Config& c) { g = read_grid(c, g); });
    init = Field2D(g);
    if (scenario == "random") {
      // Deterministic for a given seed.
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (auto& s : init.values()) {
        const double occ = 0.9 * u(rng);
        const double share = u(rng);
        s = {occ * (1.0 - share), occ * share};
      }
      cfg.note("seed", seed);
    }
  }
  cfg.section("flux", [&](Config& c) { flux = read_flux(c, flux); });
  const std::string reference = cfg.get<std::string>("reference", "");
  cfg.finish();

  const auto snaps = run_and_store(init, flux, solver, out, write);
  report["flux"] = to_json(flux);
  report["initial_mass"] = mass_json(snaps.front().field);
  report["final_mass"] = mass_json(snaps.back().field);
  report["steps"] = snaps.back().step;
  report["final_time"] = snaps.back().t;
  if (!reference.empty()) {
    std::ifstream in(reference);
    if (!in) throw InputError("cannot open reference " + reference);
    const Field2D ref = read_snapshot_csv(in, snaps.back().field.grid());
    const double r_max = r_max_of(flux);
    report["final_l1"] = {
        {"rho", l1_error(component(ref, false, r_max), component(snaps.back().field, false, r_max))},
        {"mu", l1_error(component(ref, true, r_max), component(snaps.back().field, true, r_max))}};
  }
  return kExitPass;
}

int cmd_simulate(Config& cfg, Output& out, std::uint64_t seed) {
  const std::string scenario = cfg.get<std::string>("scenario", "overtaking");
  json report = json::object();
  int code = kExitPass;
  if (scenario == "overtaking") {
    code = simulate_overtaking(cfg, out, report);
  } else if (scenario == "highway_standin") {
    code = simulate_tracks(cfg, out, report, true);
  } else if (scenario == "trajectories") {
    code = simulate_tracks(cfg, out, report, false);
  } else if (scenario == "zero" || scenario == "random" || scenario == "file") {
    code = simulate_plain(cfg, out, report, scenario, seed);
  } else {
    throw ConfigError("unknown scenario '" + scenario +
                      "' (overtaking, highway_standin, trajectories, zero, random, file)");
  }
  report["scenario"] = scenario;
  report["config"] = cfg.resolved();
  report["passed"] = code == kExitPass;
  out.json_file("report.json", report);
  json extra = {{"scenario", scenario}, {"passed", code == kExitPass}};
  if (scenario == "highway_standin") {
    extra["stand_in"] = true;
    extra["note"] = "synthetic trajectories standing in for the unavailable highway data set";
  }
  out.manifest("simulate", extra);
  std::cout << "simulate " << scenario << (code == kExitPass ? " pass" : " fail") << '\n';
  return code;
}

// ---------------------------------------------------------------------------

int cmd_calibrate(Config& cfg, Output& out) {
  const FitVariant variant = [&] {
    try {
      return parse_fit_variant(cfg.get<std::string>("variant", "shared"));
    } catch (const ParameterError& e) {
      throw ConfigError(e.what());
    }
  }();
  const double lx = cfg.get("lx", 450.0);
  const double dt = cfg.get("dt", 1.0);
  const auto kappa = cfg.get<std::size_t>("kappa", 60);
  const int lanes = cfg.get("lanes", 3);
  const double eff = cfg.get("effective_length", 7.5);
  const double r_max = cfg.get("r_max", rmax_from_geometry(lanes, eff));
  FitBounds bounds;
  cfg.section("bounds", [&](Config& c) {
    const auto x = c.get<std::vector<double>>("x", {bounds.x.lower, bounds.x.upper});
    const auto y = c.get<std::vector<double>>("y", {bounds.y.lower, bounds.y.upper});
    if (x.size() != 2 || y.size() != 2 || !(x[0] < x[1]) || !(y[0] < y[1])) {
      throw ConfigError("bounds need [lower, upper] with lower < upper");
    }
    bounds.x = {x[0], x[1]};
    bounds.y = {y[0], y[1]};
  });
  if (kappa == 0) throw ConfigError("kappa must be positive");

  TrajectoryDataset data;
  if (cfg.has("synthetic") && cfg.has("trajectories")) throw ConfigError("give either 'trajectories' or 'synthetic'");
  if (cfg.has("synthetic")) {
    SyntheticCalibration syn;
    syn.variant = variant;
    syn.lx = lx;
    syn.r_max = r_max;
    syn.dt = dt;
    syn.kappa = kappa;
    syn.coefficients = variant == FitVariant::Shared ? std::vector<double>{97.04, -0.41}
                                                      : std::vector<double>{99.61, -0.40, 74.86, -0.49};
    cfg.section("synthetic", [&](Config& c) {
      syn.coefficients = c.get("coefficients", syn.coefficients);
      syn.windows = c.get("windows", syn.windows);
      syn.with_trucks = c.get("with_trucks", syn.with_trucks);
    });
    try {
      data = syn.trajectories();
    } catch (const ParameterError& e) {
      throw ConfigError(e.what());
    }
    std::ostringstream tr;
    write_trajectory_csv(tr, data);
    out.text("trajectories.csv", tr.str());
  } else {
    const std::string path = cfg.require<std::string>("trajectories");
    const std::string format = cfg.get<std::string>("format", "csv");
    std::ifstream in(path);
    if (!in) throw InputError("cannot open trajectory file " + path);
    data = TrajectoryAdapterRegistry{}.read(format, in);
  }
  cfg.finish();

  const MacroSeries raw = macro_extract(data, lx, dt, variant);
  const MacroSeries agg = aggregate(raw, kappa);
  const FitResult fit = variant == FitVariant::Shared ? fit_shared(agg, r_max, bounds)
                                                      : fit_per_class(agg, r_max, bounds);
  json report = to_json(fit);
  json oracle = json::object();
  for (const auto& c : fit.coefficients) {
    if (!c.value) continue;
    const bool x = c.name.rfind("c_x", 0) == 0;
    const bool rho = variant == FitVariant::Shared || c.name.ends_with("_rho");
    const bool mu = variant == FitVariant::Shared || c.name.ends_with("_mu");
    oracle[c.name] = quadratic_oracle(flux_terms(agg, r_max, x, rho, mu), x ? bounds.x : bounds.y);
  }
  report["oracle"] = oracle;
  report["bins"] = raw.bins.size();
  report["aggregated_bins"] = agg.bins.size();
  report["config"] = cfg.resolved();
  out.json_file("fit.json", report);
  std::ostringstream fd, fd_raw;
  write_fd_points_csv(fd, agg);
  write_fd_points_csv(fd_raw, raw);
  out.text("fd_points.csv", fd.str());
  out.text("fd_points_raw.csv", fd_raw.str());
  out.manifest("calibrate", {{"variant", to_string(variant)}});
  std::cout << "calibrate " << to_string(variant);
  for (const auto& c : fit.coefficients) {
    std::cout << ' ' << c.name << '=' << (c.value ? std::to_string(*c.value) : std::string("unidentifiable"));
  }
  std::cout << '\n';
  return kExitPass;
}

// ---------------------------------------------------------------------------

int cmd_multilane(Config& cfg, Output& out) {
  MultilaneScenario sc;
  sc.length = cfg.get("length", sc.length);
  sc.spacing = cfg.get("spacing", sc.spacing);
  sc.t_final = cfg.get("t_final", sc.t_final);
  sc.c_rho_kmh = cfg.get("c_rho_kmh", sc.c_rho_kmh);
  sc.c_mu_kmh = cfg.get("c_mu_kmh", sc.c_mu_kmh);
  sc.C_per_km = cfg.get("C_per_km", sc.C_per_km);
  sc.effective_length = cfg.get("effective_length", sc.effective_length);
  sc.bandwidth = cfg.get("bandwidth", sc.bandwidth);
  sc.car_lane1 = cfg.get("car_lane1", sc.car_lane1);
  sc.car_lane2 = cfg.get("car_lane2", sc.car_lane2);
  sc.truck_lane2 = cfg.get("truck_lane2", sc.truck_lane2);
  MultilaneConfig mc;
  mc.t_final = sc.t_final;
  mc.cfl_safety = cfg.get("cfl_safety", mc.cfl_safety);
  mc.snapshot_interval = cfg.get("snapshot_interval", 0.5);
  const std::string bc = cfg.get<std::string>("boundary", "outflow");
  if (bc == "outflow") {
    mc.boundary = LaneBoundary::Outflow;
  } else if (bc == "periodic") {
    mc.boundary = LaneBoundary::Periodic;
  } else {
    throw ConfigError("boundary must be 'outflow' or 'periodic'");
  }
  const bool write = cfg.get("write_snapshots", true);
  cfg.finish();

  const MultilaneParams p = sc.params();
  const LaneField init = sc.initial_field();
  std::vector<LaneSnapshot> snaps;
  simulate_multilane(init, p, mc, [&](const LaneSnapshot& s) { snaps.push_back(s); });
  if (write) {
    for (std::size_t k = 0; k < snaps.size(); ++k) {
      out.lane_snapshot("snapshots", k, snaps[k].field, p, snaps[k].t, snaps[k].step);
    }
  }
  json masses = json::array();
  double mu_change = 0.0;
  for (const auto& s : snaps) {
    const LaneMass m = lane_mass(s.field);
    masses.push_back({{"t", s.t}, {"rho_lane1", m.rho1}, {"mu_lane1", m.mu1}, {"rho_lane2", m.rho2},
                      {"mu_lane2", m.mu2}});
    for (std::size_t i = 0; i < init.grid.n; ++i) {
      mu_change = std::max({mu_change, std::abs(s.field.lane1[i].mu - init.lane1[i].mu),
                            std::abs(s.field.lane2[i].mu - init.lane2[i].mu)});
    }
  }
  const LaneMass m0 = lane_mass(init), m1 = lane_mass(snaps.back().field);
  const double lane2_fraction = m0.rho2 > 0.0 ? m1.rho2 / m0.rho2 : 0.0;
  const double car_drift = std::abs((m1.rho1 + m1.rho2) - (m0.rho1 + m0.rho2)) / (m0.rho1 + m0.rho2);
  json checks = json::object();
  bool pass = true;
  if (p.c_mu == 0.0) {
    const bool ok = mu_change == 0.0;
    checks["mu_time_invariant"] = {{"max_change", mu_change}, {"passed", ok}};
    pass = pass && ok;
  }
  if (mc.boundary == LaneBoundary::Periodic) {
    const bool ok = car_drift <= 1e-10;
    checks["car_mass_conserved"] = {{"relative_drift", car_drift}, {"tolerance", 1e-10}, {"passed", ok}};
    pass = pass && ok;
  }
  json report = {{"lane_masses", masses},
                 {"lane2_car_mass_fraction", lane2_fraction},
                 {"lane2_car_mass_below_10_percent", lane2_fraction < 0.1},
                 {"combined_car_mass_relative_change", car_drift},
                 {"checks", checks},
                 {"params_si", {{"c_rho", p.c_rho}, {"c_mu", p.c_mu}, {"r_max", p.r_max}, {"C", p.C}}},
                 {"config", cfg.resolved()},
                 {"passed", pass}};
  out.json_file("report.json", report);
  out.manifest("multilane", {{"passed", pass}});
  std::cout << "multilane lane2_car_fraction=" << lane2_fraction << (pass ? " pass" : " fail") << '\n';
  return pass ? kExitPass : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-class 2D traffic model toolkit"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, CLI::App*>> commands;
  for (const char* name : {"riemann-validate", "simulate", "calibrate", "multilane"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON configuration")->required();
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_option("--seed", seed, "seed for randomized scenarios");
    commands.emplace_back(name, sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitConfig;
  }
  std::string command;
  for (const auto& [name, sub] : commands) {
    if (sub->parsed()) command = name;
  }

  try {
    json raw;
    {
      std::ifstream in(config_path);
      if (!in) throw ConfigError("cannot open config " + config_path);
      try {
        raw = json::parse(in);
      } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
      }
    }
    Config cfg(raw, "config");
    Output out(out_dir);
    if (command == "riemann-validate") return cmd_riemann_validate(cfg, out);
    if (command == "simulate") return cmd_simulate(cfg, out, seed);
    if (command == "calibrate") return cmd_calibrate(cfg, out);
    return cmd_multilane(cfg, out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParameterError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
