// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fpplab/experiment.hpp"
#include "fpplab/gff.hpp"
#include "fpplab/green_decay.hpp"
#include "fpplab/heat_kernel.hpp"
#include "fpplab/rcm.hpp"
#include "fpplab/schedule.hpp"
#include "support/path_oracle.hpp"

namespace fs = std::filesystem;
using namespace fpplab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Runner {
  fs::path work;
  int workers = 1;
  // Every CLI run, kept so the determinism criterion can repeat it.
  std::vector<std::pair<std::string, json>> runs;

  json run(const std::string& name, const json& config) {
    RunOptions opt;
    opt.out_dir = work / name;
    opt.workers = workers;
    const auto res = run_experiment(config, opt);
    if (res.exit_code != 0) throw std::runtime_error(name + ": exit " + std::to_string(res.exit_code) + " " + res.error);
    runs.emplace_back(name, config);
    return res.summary;
  }
};

std::string fmt(double x, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << x;
  return s.str();
}

// 1 -------------------------------------------------------------------------

Outcome gff_covariance(Runner& R) {
  const json c = {{"schema_version", 1}, {"experiment", "gff-covariance"}, {"seed", 11}, {"dimension", 3},
                  {"side", 9},           {"replicas", 10000},             {"pairs", 20}, {"sigma", 4.0}};
  const auto s = R.run("c01-gff-covariance", c);
  const double single = dirichlet_green(LatticeBox::cube(3, 1), 0, 0, {1e-15, 100});
  const double err = std::abs(single - 1.0 / 6.0);
  return {s.at("all_pass").get<bool>() && err <= 1e-12,
          "max |z| = " + fmt(s.at("max_abs_z").get<double>()) + " over 20 pairs, single-site error " + fmt(err)};
}

// 2 -------------------------------------------------------------------------

Outcome fpp_exactness(Runner&) {
  const int boxes = static_cast<int>(testing::small_boxes().size());
  const int bad = testing::count_fpp_mismatches(200, 77);
  return {bad == 0, std::to_string(bad) + " mismatches over 200 tables on " + std::to_string(boxes) + " boxes"};
}

// 3 -------------------------------------------------------------------------

json iid_config(double p, std::uint64_t seed) {
  return {{"schema_version", 1},
          {"experiment", "fpp-time-constant"},
          {"seed", seed},
          {"dimension", 2},
          {"n_levels", {32, 64, 128}},
          {"replicas", 200},
          {"environment", {{"type", "iid"}, {"law", "bernoulli-zero"}, {"p", p}, {"mode", "edge"}}}};
}

Outcome iid_criterion(Runner& R) {
  const auto lo = R.run("c03-iid-p0.1", iid_config(0.1, 31));
  const auto hi = R.run("c03-iid-p0.9", iid_config(0.9, 32));
  const auto& v = lo.at("variants").at(0);
  const double mu = v.at("mu_hat"), ci_low = v.at("mu_ci_low"), ci_high = v.at("mu_ci_high");
  // Mean d(0, 128 e1)/128 from the last level row.
  std::ifstream in(R.work / "c03-iid-p0.9" / "levels.csv");
  std::string line, last;
  while (std::getline(in, line))
    if (!line.empty()) last = line;
  std::vector<std::string> cells;
  std::stringstream ss(last);
  for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
  // config_hash, replicas, variant, n, mean, ...
  const double mean_hi = std::strtod(cells.at(4).c_str(), nullptr);
  const bool ok = mu >= 0.2 && ci_low > 0.0 && cells.at(3) == "128" && mean_hi <= 0.02;
  return {ok, "p=0.1: mu " + fmt(mu) + " CI [" + fmt(ci_low) + ", " + fmt(ci_high) + "]; p=0.9: mean d/n at 128 " +
                  fmt(mean_hi)};
}

// 4 -------------------------------------------------------------------------

Outcome gff_level_sets(Runner& R) {
  const json cross = {{"schema_version", 1},
                      {"experiment", "crossing"},
                      {"seed", 41},
                      {"dimension", 3},
                      {"L_grid", {64}},
                      {"h_range", {{"min", 0.0}, {"max", 1.5}, {"step", 0.01}}},
                      {"replicas", 20},
                      {"threshold", 0.05}};
  const auto cs = R.run("c04-crossing", cross);
  const auto hs_json = cs.at("h_star").at(0).at("h_star");
  if (hs_json.is_null()) return {false, "no grid level with crossing probability below the threshold"};
  const double hs = hs_json.get<double>();
  const std::vector<double> levels = {hs - 0.5, hs - 0.25, hs, hs + 0.25, hs + 0.5};
  const json tc = {{"schema_version", 1},
                   {"experiment", "fpp-time-constant"},
                   {"seed", 42},
                   {"dimension", 3},
                   {"n_levels", {21, 42, 84}},
                   {"box_sides", {128, 128, 128}},
                   {"replicas", 16},
                   {"environment", {{"type", "gff"}, {"levels", levels}}}};
  const auto ts = R.run("c04-time-constant", tc);
  const auto viol = ts.at("monotonicity_violations").get<std::int64_t>();
  const auto& below = ts.at("variants").at(0);
  const auto& above = ts.at("variants").at(levels.size() - 1);
  const double mu_below = below.at("mu_hat"), mu_above = above.at("mu_hat");
  const double half = 0.5 * (above.at("mu_ci_high").get<double>() - above.at("mu_ci_low").get<double>());
  const bool ok = viol == 0 && mu_above > half && mu_below <= 0.02;
  return {ok, "h*(64) = " + fmt(hs) + ", violations " + std::to_string(viol) + ", mu(h*+0.5) = " + fmt(mu_above) +
                  " vs half-width " + fmt(half) + ", mu(h*-0.5) = " + fmt(mu_below)};
}

// 5 -------------------------------------------------------------------------

ConductanceEnvironment gff_env(const LatticeBox& box, std::uint64_t seed, double beta, double h) {
  return build_gff_rcm(sample_gff_dirichlet(box, {seed, 0, 0}), beta, true, h);
}

Outcome green_oracles(Runner&) {
  const auto box = LatticeBox::cube(3, 5);
  const auto env = gff_env(box, 51, 0.25, 0.1);
  const Index x = box.center();
  const auto mc = green_monte_carlo(env, x, 100000, {52, 0, 0});
  const auto col = solve_green(env, x, Boundary::Absorbing, {1e-15, 10000});
  double worst_z = 0.0;
  for (Index y = 0; y < box.num_vertices(); ++y) {
    if (mc.std_error[y] > 0) worst_z = std::max(worst_z, std::abs(mc.mean[y] - col.g[y]) / mc.std_error[y]);
    else if (mc.mean[y] != col.g[y]) worst_z = kInfinity;
  }
  double worst_rel = 0.0;
  for (std::int64_t side : {2, 3, 4, 5}) {
    const auto b = LatticeBox::cube(3, side);
    for (double h : {0.0, 0.5}) {
      const auto e = gff_env(b, 53 + side, 0.25, h);
      const ExactHeatKernel hk(e);
      for (Index y : {Index{0}, b.center()}) {
        double tail = 0.0;
        const auto q = hk.integrate(y, tail);
        const auto g = solve_green(e, y, Boundary::Absorbing, {1e-15, 10000});
        for (Index v = 0; v < b.num_vertices(); ++v) worst_rel = std::max(worst_rel, std::abs(q[v] - g.g[v]) / g.g[v]);
      }
    }
  }
  return {worst_z <= 4.0 && worst_rel <= 1e-6 && mc.frozen == 0,
          "Monte Carlo max |z| " + fmt(worst_z) + " over 125 vertices, quadrature max rel error " + fmt(worst_rel)};
}

// 6, 7 ----------------------------------------------------------------------

json decay_config(const json& env, std::vector<double> h, std::uint64_t seed) {
  return {{"schema_version", 1},
          {"experiment", "green-decay"},
          {"seed", seed},
          {"dimension", 3},
          {"side", 48},
          {"h_grid", h},
          {"environment", env},
          {"pairs", {{"layout", "centered"}, {"distances", {8, 10, 12, 14, 16, 18, 20}}}}};
}

Outcome sqrt_h_decay(Runner& R) {
  const std::vector<double> h = {0.04, 0.16, 0.64};
  const auto a = R.run("c06-homogeneous", decay_config({{"type", "homogeneous"}}, h, 61));
  const auto b = R.run("c06-gff", decay_config({{"type", "gff"}, {"beta", 0.25}, {"fields", 2}}, h, 62));
  const double sa = a.at("ratio_spread"), sb = b.at("ratio_spread");
  return {sa <= 1.3 && sb <= 1.6, "ratio spread homogeneous " + fmt(sa) + " (≤ 1.3), GFF " + fmt(sb) + " (≤ 1.6)"};
}

Outcome polynomial_prefactor(Runner& R) {
  auto c = decay_config({{"type", "homogeneous"}}, {0.0}, 71);
  c["r_max"] = 20.0;
  R.run("c07-prefactor", c);
  std::ifstream in(R.work / "c07-prefactor" / "decay.csv");
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  std::vector<std::string> cells;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
  // config_hash, replicas, h, c_hat, stderr, ratio, loglog_slope, loglog_se
  const double slope = std::strtod(cells.at(6).c_str(), nullptr);
  return {std::abs(slope + 1.0) <= 0.15, "log-log slope " + fmt(slope) + " (target -1 ± 0.15)"};
}

// 8 -------------------------------------------------------------------------

Outcome heat_exponent(Runner& R) {
  std::vector<double> t;
  for (int k = 0; k <= 6; ++k) t.push_back(8.0 * std::pow(2.0, k / 2.0));
  const json c = {{"schema_version", 1}, {"experiment", "heat-kernel"},
                  {"seed", 81},          {"dimension", 3},
                  {"side", 48},          {"t_grid", t},
                  {"environment", {{"type", "gff"}, {"beta", 0.25}}},
                  {"method", "krylov"}};
  const auto s = R.run("c08-heat-kernel", c);
  const double slope = s.at("diagonal_slope");
  return {std::abs(slope + 1.5) <= 0.25, "diagonal slope " + fmt(slope) + " (target -1.5 ± 0.25)"};
}

// 9 -------------------------------------------------------------------------

Outcome interlacements(Runner& R) {
  const json c = {{"schema_version", 1}, {"experiment", "interlacement-occupation"},
                  {"seed", 91},          {"dimension", 3},
                  {"target_side", 5},    {"ambient_margin", 10},
                  {"u_grid", {0.5, 1.0, 2.0}}, {"replicas", 10000}};
  const auto s = R.run("c09-interlacement", c);
  bool ok = true;
  std::string d;
  for (const auto& r : s.at("results")) {
    const double zv = r.at("z"), zo = r.at("probe_occupation_z");
    ok &= std::abs(zv) <= 4.0 && std::abs(zo) <= 4.0;
    d += "u=" + fmt(r.at("u").get<double>()) + ": vacancy z " + fmt(zv, 3) + ", occupation z " + fmt(zo, 3) + "; ";
  }
  d += "ambient side " + std::to_string(s.at("ambient_sides").at(0).get<std::int64_t>());
  return {ok, d};
}

// 10 ------------------------------------------------------------------------

// Σ_{p>=k} (p+6)^{-δ}: 20000 terms summed from the small end in long double,
// then an Euler–Maclaurin tail with two Bernoulli corrections.
long double tail_sum(long double delta, int k) {
  constexpr int kTerms = 20000;
  const long double N = k + 6.0L + kTerms;
  long double s = powl(N, 1 - delta) / (delta - 1) + 0.5L * powl(N, -delta) + delta / 12.0L * powl(N, -delta - 1) -
                  delta * (delta + 1) * (delta + 2) / 720.0L * powl(N, -delta - 3);
  for (int j = kTerms - 1; j >= 0; --j) s += powl(k + 6.0L + j, -delta);
  return s;
}

Outcome schedule_invariants(Runner& R) {
  std::mt19937_64 gen(101);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  int violations = 0;
  double worst_a = 0.0, worst_eps = 0.0;
  double lib_seconds = 0.0;
  constexpr int kMax = 40;
  for (int trial = 0; trial < 100; ++trial) {
    const double delta = 4.0 - 3.0 * ud(gen);  // (1, 4]
    const double rho = 0.05 + 4.95 * ud(gen);
    const int K = static_cast<int>(gen() % 45);
    const double L0 = std::exp(6.0 * ud(gen) - 1.0);
    const auto t0 = std::chrono::steady_clock::now();
    const auto s = build_scale_schedule(delta, rho, K, L0, kMax);
    const auto eps = s.epsilon(1.0);
    lib_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (int k = 0; k <= kMax; ++k) {
      const double nk = s.normalized(k);
      violations += !(s.L[k] >= std::ldexp(1.0, k) * L0);
      violations += k > 0 && !(nk >= s.normalized(k - 1));
      violations += !(nk <= s.product_bound);
    }
    // a_k as a direct long double product; ε_k by accumulating from k = 40 down.
    long double a = 1.0L;
    for (int k = 0; k <= kMax; ++k) {
      worst_a = std::max(worst_a, double(fabsl((s.a[k] - a) / a)));
      a *= 2.0L * (1.0L - powl(k + 6.0L, -(long double)delta));
    }
    long double e = tail_sum(delta, kMax);
    for (int k = kMax; k >= 0; --k) {
      if (k < kMax) e += powl(k + 6.0L, -(long double)delta);
      worst_eps = std::max(worst_eps, double(fabsl((eps[k] - e) / e)));
    }
  }
  const json c = {{"schema_version", 1}, {"experiment", "schedule-diagnostics"}, {"delta", 1.5}, {"rho", 2.0},
                  {"K", 5}, {"L0", 3.0}, {"k_max", 40}, {"epsilon", 0.25}};
  const auto cs = R.run("c10-schedule", c);
  const bool ok = violations == 0 && worst_a <= 1e-12 && worst_eps <= 1e-12 && cs.at("all_ok").get<bool>() &&
                  lib_seconds <= 1.0;
  return {ok, std::to_string(violations) + " invariant violations, max rel error a_k " + fmt(worst_a) + ", eps_k " +
                  fmt(worst_eps) + ", library time " + fmt(lib_seconds, 3) + " s"};
}

// 11 ------------------------------------------------------------------------

Outcome metric_comparability(Runner&) {
  const auto box = LatticeBox::cube(3, 40);
  constexpr int kFields = 10, kSources = 20;
  std::vector<double> mins;
  for (int f = 0; f < kFields; ++f) {
    const auto env = build_gff_rcm(sample_gff_dirichlet(box, {111, std::uint64_t(f), 0}), 0.25, true);
    RandomSource rng({112, std::uint64_t(f), 0});
    double m = kInfinity;
    for (int s = 0; s < kSources; ++s) {
      const Index x = static_cast<Index>(rng.uniform_int(box.num_vertices()));
      const auto dist = theta_metric(env, {x});
      const Coord cx = box.coords(x);
      for (Index y = 0; y < box.num_vertices(); ++y) {
        const double r = euclidean_distance(cx, box.coords(y));
        if (r >= 16.0) m = std::min(m, dist[y] / r);
      }
    }
    mins.push_back(m);
  }
  const double lo = *std::min_element(mins.begin(), mins.end()), hi = *std::max_element(mins.begin(), mins.end());
  return {lo > 0.0 && hi / lo <= 1.25,
          "min d/|x-y| per field in [" + fmt(lo) + ", " + fmt(hi) + "], max/min " + fmt(hi / lo) + " (≤ 1.25)"};
}

// 12 ------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Repeats every earlier CLI run except the crossing sweep and the 128³ box,
// alternating the worker count.
Outcome determinism(Runner& R) {
  int files = 0, differ = 0, runs = 0;
  const auto first = R.runs;
  for (const auto& [name, config] : first) {
    if (name.rfind("c04", 0) == 0) continue;
    RunOptions opt;
    opt.out_dir = R.work / (name + "-repeat");
    opt.workers = runs % 2 ? 1 : 2;
    const auto res = run_experiment(config, opt);
    ++runs;
    if (res.exit_code != 0) return {false, name + " repeat failed: " + res.error};
    for (const auto& entry : fs::directory_iterator(R.work / name)) {
      if (entry.path().extension() != ".csv") continue;
      ++files;
      differ += slurp(entry.path()) != slurp(opt.out_dir / entry.path().filename());
    }
  }
  return {differ == 0 && files > 0, std::to_string(differ) + " of " + std::to_string(files) +
                                         " CSV files differ across " + std::to_string(runs) + " repeated runs"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fpplab acceptance"};
  std::string work = "acceptance_runs";
  std::vector<int> only;
  int workers = default_workers();
  app.add_option("--work", work, "directory for run outputs");
  app.add_option("--only", only, "criteria to run (default: all)");
  app.add_option("--workers", workers, "worker threads");
  CLI11_PARSE(app, argc, argv);

  Runner R{work, workers, {}};
  fs::create_directories(R.work);
  const std::vector<std::pair<int, std::function<Outcome(Runner&)>>> criteria = {
      {1, gff_covariance}, {2, fpp_exactness},        {3, iid_criterion},     {4, gff_level_sets},
      {5, green_oracles},  {6, sqrt_h_decay},         {7, polynomial_prefactor}, {8, heat_exponent},
      {9, interlacements}, {10, schedule_invariants}, {11, metric_comparability}, {12, determinism}};
  const std::set<int> chosen(only.begin(), only.end());
  int failed = 0;
  for (const auto& [id, fn] : criteria) {
    if (!chosen.empty() && !chosen.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn(R);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << " | " << o.detail << " | "
              << fmt(sec, 3) << " s" << std::endl;
  }
  return failed ? 1 : 0;
}
