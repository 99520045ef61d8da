// Acceptance run: one PASS/FAIL line per primary criterion. Exits non-zero
// if any criterion fails.

#include <traffic2d/calibration.hpp>
#include <traffic2d/kde.hpp>
#include <traffic2d/multilane.hpp>
#include <traffic2d/riemann2d.hpp>
#include <traffic2d/scenarios.hpp>
#include <traffic2d/solver.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

using namespace traffic2d;

namespace {

int failures = 0;

void report(const char* id, bool pass, const std::string& detail) {
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

std::string fmt(const SimilarityPoint& p) { return "(" + fmt(p.xi) + ", " + fmt(p.eta) + ")"; }

struct RiemannRun {
  WaveStructure structure;
  ValidationReport report;
};

RiemannRun run_case(const RiemannCase& c) {
  RiemannSetup s;
  const WaveStructure w = classify(quadrant_data(c.rho, s), s.scalar_flux());
  SolverConfig cfg;
  cfg.t_final = s.t_final;
  const auto snaps = simulate(riemann_initial_field(c.rho, s), s.flux(), cfg);
  ValidationOptions vo;
  vo.t = s.t_final;
  return {w, validate_field(total_density(snaps.back().field), w, vo)};
}

std::optional<SimilarityPoint> measured_point(const ValidationReport& r, const std::string& name) {
  for (const auto& p : r.points) {
    if (p.name == name) return p.measured;
  }
  return std::nullopt;
}

void riemann_case_two() {
  const auto t0 = std::chrono::steady_clock::now();
  const RiemannRun run = run_case(riemann_case("no_rarefactions"));
  const double secs = seconds_since(t0);
  const double tol = 3.0 * RiemannSetup{}.spacing;
  const SimilarityPoint o_ref{0.25, 0.25}, b_ref{0.75, 0.0};
  const SimilarityPoint a_printed{0.25, 0.5}, a_derived{-0.25, 0.5};
  const auto o = measured_point(run.report, "O");
  const auto b = measured_point(run.report, "B");
  const auto a = measured_point(run.report, "A");
  const bool o_ok = o && distance(*o, o_ref) <= tol;
  const bool b_ok = b && distance(*b, b_ref) <= tol;
  const double da_printed = a ? distance(*a, a_printed) : INFINITY;
  const double da_derived = a ? distance(*a, a_derived) : INFINITY;
  const bool a_ok = da_printed <= tol || da_derived <= tol;
  std::string detail = "O=" + (o ? fmt(*o) : std::string("missing")) + " B=" + (b ? fmt(*b) : std::string("missing")) +
                       " A=" + (a ? fmt(*a) : std::string("missing")) + " |A-printed|=" + fmt(da_printed) +
                       " |A-derived|=" + fmt(da_derived) + " tol=" + fmt(tol) + " runtime=" + fmt(secs) + "s";
  report("riemann_case2_geometry", o_ok && b_ok && a_ok && secs <= 120.0, detail);
}

void riemann_all_cases() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::string detail;
  for (const auto& c : riemann_cases()) {
    const RiemannRun run = run_case(c);
    const bool cls = run.structure.wave_case == c.expected_case && run.structure.sub_case == c.expected_sub_case;
    const bool valid = run.report.status == ValidationStatus::Pass;
    ok = ok && cls && valid;
    detail += c.name + "=" + to_string(run.structure.wave_case) + "/" + to_string(run.report.status) + " ";
  }
  const double secs = seconds_since(t0);
  report("riemann_all_five_cases", ok && secs <= 600.0, detail + "runtime=" + fmt(secs) + "s");
}

void conservation() {
  const Grid2D g{1.0, 1.0, 64, 64};
  Field2D f(g);
  std::mt19937_64 rng(20240101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& s : f.values()) {
    const double occ = 0.9 * u(rng), share = u(rng);
    s = {occ * (1.0 - share), occ * share};
  }
  const FluxParams p = SharedFlux{-1.0, -0.7, 1.0};
  const Vec2 m0 = total_mass(f);
  for (int k = 0; k < 1000; ++k) {
    f = strang_step(f, p, compute_dt(g, max_wave_speed(f, p), 0.9), PeriodicBoundary{});
  }
  const Vec2 m = total_mass(f);
  const double d_rho = std::abs(m[0] - m0[0]) / m0[0], d_mu = std::abs(m[1] - m0[1]) / m0[1];
  report("conservation_1000_steps", d_rho <= 1e-10 && d_mu <= 1e-10,
         "relative drift rho=" + fmt(d_rho) + " mu=" + fmt(d_mu) + " tol=1e-10");
}

Field2D smooth_field(std::size_t n) {
  const Grid2D g{1.0, 1.0, n, n};
  Field2D f(g);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const double s = std::sin(2 * std::numbers::pi * g.x_center(i)) * std::cos(2 * std::numbers::pi * g.y_center(j));
      f(i, j) = {0.2 + 0.05 * s, 0.1 + 0.02 * s};
    }
  }
  return f;
}

Field2D run_to(const Field2D& f, const FluxParams& p, double t) {
  SolverConfig cfg;
  cfg.t_final = t;
  cfg.boundary = PeriodicBoundary{};
  return simulate(f, p, cfg).back().field;
}

/// L1 distance between a coarse field and the 2x2 averages of a fine one.
double l1_to_restricted(const Field2D& coarse, const Field2D& fine) {
  const Grid2D& g = coarse.grid();
  double s = 0.0;
  for (std::size_t j = 0; j < g.ny; ++j) {
    for (std::size_t i = 0; i < g.nx; ++i) {
      double r = 0.0, m = 0.0;
      for (std::size_t b = 0; b < 2; ++b) {
        for (std::size_t a = 0; a < 2; ++a) {
          r += 0.25 * fine(2 * i + a, 2 * j + b).rho;
          m += 0.25 * fine(2 * i + a, 2 * j + b).mu;
        }
      }
      s += std::abs(coarse(i, j).rho - r) + std::abs(coarse(i, j).mu - m);
    }
  }
  return s * g.cell_area();
}

void convergence() {
  const FluxParams p = SharedFlux{-1.0, -1.0, 1.0};
  const double t = 0.2;
  const Field2D a = run_to(smooth_field(32), p, t);
  const Field2D b = run_to(smooth_field(64), p, t);
  const Field2D c = run_to(smooth_field(128), p, t);
  const double e1 = l1_to_restricted(a, b), e2 = l1_to_restricted(b, c);
  const double order = std::log2(e1 / e2);
  report("convergence_order", order >= 0.7,
         "N=32,64,128 errors " + fmt(e1) + ", " + fmt(e2) + " observed order=" + fmt(order) + " (>= 0.7)");
}

void calibration() {
  struct Case {
    FitVariant variant;
    std::vector<double> coefficients;
    std::vector<std::string> names;
  };
  const Case cases[] = {
      {FitVariant::Shared, {97.04, -0.41}, {"c_x", "c_y"}},
      {FitVariant::PerClass, {99.61, -0.40, 74.86, -0.49}, {"c_x_rho", "c_y_rho", "c_x_mu", "c_y_mu"}},
  };
  bool ok = true;
  double worst_gen = 0.0, worst_oracle = 0.0;
  const FitBounds bounds;
  for (const Case& c : cases) {
    SyntheticCalibration syn;
    syn.variant = c.variant;
    syn.coefficients = c.coefficients;
    const MacroSeries s = aggregate(macro_extract(syn.trajectories(), syn.lx, syn.dt, c.variant), syn.kappa);
    const FitResult fit = c.variant == FitVariant::Shared ? fit_shared(s, syn.r_max) : fit_per_class(s, syn.r_max);
    for (std::size_t k = 0; k < c.names.size(); ++k) {
      const auto& v = fit.coefficient(c.names[k]).value;
      if (!v) {
        ok = false;
        continue;
      }
      const bool x = c.names[k].starts_with("c_x");
      const bool rho = c.variant == FitVariant::Shared || c.names[k].ends_with("_rho");
      const bool mu = c.variant == FitVariant::Shared || c.names[k].ends_with("_mu");
      const double oracle = quadratic_oracle(flux_terms(s, syn.r_max, x, rho, mu), x ? bounds.x : bounds.y);
      worst_gen = std::max(worst_gen, std::abs(*v - c.coefficients[k]));
      worst_oracle = std::max(worst_oracle, std::abs(*v - oracle));
    }
  }
  ok = ok && worst_gen <= 1e-4 && worst_oracle <= 1e-6;
  report("calibration_oracle", ok,
         "max |fit - generator|=" + fmt(worst_gen) + " (<= 1e-4), max |fit - oracle|=" + fmt(worst_oracle) + " (<= 1e-6)");
}

void rmax_geometry() {
  const double r = rmax_from_geometry(3, 7.5);
  report("rmax_geometry", r == 400.0, "3 lanes, 7.5 m -> " + fmt(r) + " veh/km");
}

void kde() {
  const KernelConfig k = default_bandwidths(450.0, 14.0);
  const bool bw_ok = std::abs(k.hx - 22.5) <= 1e-12 && std::abs(k.hy - 0.7) <= 1e-12;
  const Grid2D g = Grid2D::from_spacing(450.0, 14.0, 0.5, 0.1);
  const Point2 centre{g.x_center(450), g.y_center(70)};
  const std::vector<Point2> one{centre};
  const ScalarField peak_field = reconstruct_density(one, g, k);
  const double expected = 1.0 / (2.0 * std::numbers::pi * k.hx * k.hy);
  const double peak_err = std::abs(peak_field(450, 70) - expected);

  std::vector<double> fleet;
  for (int v = 0; v < 40; ++v) fleet.push_back(10.0 * v);
  const auto d = reconstruct_density_1d(fleet, 0.0, 1.0, 390, 10.0);
  const std::vector<double> interior(d.begin() + 100, d.begin() + 290);
  double mean = 0.0, var = 0.0;
  for (double v : interior) mean += v / static_cast<double>(interior.size());
  for (double v : interior) var += (v - mean) * (v - mean) / static_cast<double>(interior.size());
  const double cv = std::sqrt(var) / mean;
  report("kde", peak_err <= 1e-12 && bw_ok && cv <= 0.05,
         "peak error=" + fmt(peak_err) + " bandwidths=(" + fmt(k.hx) + ", " + fmt(k.hy) + ") interior CV=" + fmt(cv));
}

void overtaking() {
  OvertakingScenario sc;
  SolverConfig cfg;
  cfg.t_final = sc.t_final;
  cfg.snapshot_interval = 0.1;
  const auto snaps = simulate(sc.initial_field(), sc.flux(), cfg);
  const auto lane = sc.truck_lane();
  const CenterOfMass truck0 = center_of_mass(snaps.front().field, true);
  double drift = 0.0, shift = 0.0;
  std::optional<double> crossing;
  for (const auto& s : snaps) {
    const CenterOfMass truck = center_of_mass(s.field, true);
    drift = std::max(drift, std::abs(truck.mass - truck0.mass) / truck0.mass);
    shift = std::max(shift, std::abs(truck.x - truck0.x));
    if (!crossing && center_of_mass(s.field, false, lane[0], lane[1]).x >= truck.x) crossing = s.t;
  }
  const double dx = sc.grid().dx();
  const bool ok = drift <= 1e-10 && shift <= 2.0 * dx && crossing && *crossing < sc.t_final;
  report("overtaking", ok,
         "truck mass drift=" + fmt(drift) + " truck CoM shift=" + fmt(shift) + " m (<= " + fmt(2.0 * dx) +
             ") car CoM passes truck at t=" + (crossing ? fmt(*crossing) + " s" : std::string("never")));
}

void multilane() {
  MultilaneScenario sc;
  const MultilaneParams p = sc.params();
  const LaneField init = sc.initial_field();
  MultilaneConfig cfg;
  cfg.t_final = sc.t_final;

  LaneField last;
  double mu_change = 0.0;
  simulate_multilane(init, p, cfg, [&](const LaneSnapshot& s) {
    for (std::size_t i = 0; i < init.grid.n; ++i) {
      mu_change = std::max({mu_change, std::abs(s.field.lane1[i].mu - init.lane1[i].mu),
                            std::abs(s.field.lane2[i].mu - init.lane2[i].mu)});
    }
    last = s.field;
  });
  const LaneMass m0 = lane_mass(init), m1 = lane_mass(last);
  const double fraction = m1.rho2 / m0.rho2;

  cfg.boundary = LaneBoundary::Periodic;
  LaneField periodic;
  simulate_multilane(init, p, cfg, [&](const LaneSnapshot& s) { periodic = s.field; });
  const LaneMass mp = lane_mass(periodic);
  const double drift = std::abs((mp.rho1 + mp.rho2) - (m0.rho1 + m0.rho2)) / (m0.rho1 + m0.rho2);

  const bool ok = mu_change == 0.0 && fraction < 0.1 && drift <= 1e-10;
  report("multilane", ok,
         "mu max change=" + fmt(mu_change) + " (== 0), final lane-2 car mass=" + fmt(100.0 * fraction) +
             "% of initial (< 10%), periodic combined car mass drift=" + fmt(drift) + " (<= 1e-10)");
}

}  // namespace

int main() {
  riemann_case_two();
  riemann_all_cases();
  conservation();
  convergence();
  calibration();
  rmax_geometry();
  kde();
  overtaking();
  multilane();
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
