#pragma once

// Config-driven experiments: validation, execution and run manifests.

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fpplab/analysis.hpp"
#include "fpplab/estimators.hpp"
#include "fpplab/field.hpp"
#include "fpplab/fpp.hpp"
#include "fpplab/gff.hpp"
#include "fpplab/green_decay.hpp"
#include "fpplab/heat_kernel.hpp"
#include "fpplab/interlacements.hpp"
#include "fpplab/io.hpp"
#include "fpplab/rcm.hpp"
#include "fpplab/schedule.hpp"
#include "fpplab/stats.hpp"
#include "fpplab/weights.hpp"

#ifndef FPPLAB_VERSION
#define FPPLAB_VERSION "dev"
#endif

namespace fpplab {

inline constexpr int kSchemaVersion = 1;

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> k = {"gff-covariance", "fpp-time-constant", "shape",
                                             "crossing",       "decoupling",        "green-decay",
                                             "heat-kernel",    "interlacement-occupation",
                                             "schedule-diagnostics"};
  return k;
}

// --------------------------------------------------------------------------
// Reading with error collection

class ConfigReader {
 public:
  std::vector<std::string> errors;

  template <class T>
  T get(const json& node, const std::string& path, const std::string& key, T def, bool required = false) {
    if (!node.is_object() || !node.contains(key)) {
      if (required) errors.push_back(join(path, key) + ": required");
      return def;
    }
    try {
      return node.at(key).get<T>();
    } catch (const std::exception&) {
      errors.push_back(join(path, key) + ": wrong type");
      return def;
    }
  }

  json sub(const json& node, const std::string& key) {
    if (node.is_object() && node.contains(key)) {
      if (node.at(key).is_object()) return node.at(key);
      errors.push_back(key + ": must be an object");
    }
    return json::object();
  }

  void require(bool ok, const std::string& message) {
    if (!ok) errors.push_back(message);
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }
};

// --------------------------------------------------------------------------
// Parsed specs

struct EnvSpec {
  std::string type = "iid";  // iid | gff | interlacement
  IidLaw law = law::Constant{1.0};
  std::vector<LevelVariant> variants;
  WeightMode mode = WeightMode::Edge;
  double u = 1.0;
  std::int64_t ambient_margin = 0;
  // Ordering of variants for the pointwise monotonicity check: distances
  // must be non-decreasing along this order.
  std::vector<std::size_t> monotone_order;
};

inline FieldFunctional parse_functional(ConfigReader& rd, const json& node, const std::string& path) {
  const auto type = rd.get<std::string>(node, path, "type", "indicator-below");
  if (type == "indicator-below") return functional::IndicatorBelow{rd.get<double>(node, path, "h", 0.0)};
  if (type == "exp") return functional::ExpDecay{rd.get<double>(node, path, "gamma", 1.0)};
  if (type == "tabulated")
    return functional::Tabulated{rd.get<std::vector<double>>(node, path, "x", {}, true),
                                 rd.get<std::vector<double>>(node, path, "y", {}, true)};
  rd.errors.push_back(path + ".type: unknown functional '" + type + "'");
  return functional::IndicatorBelow{0.0};
}

inline EnvSpec parse_fpp_environment(ConfigReader& rd, const json& root, int d) {
  EnvSpec e;
  const json env = rd.sub(root, "environment");
  const std::string p = "environment";
  e.type = rd.get<std::string>(env, p, "type", "iid");
  try {
    e.mode = weight_mode_from_string(rd.get<std::string>(env, p, "mode", "edge"));
  } catch (const std::exception& ex) {
    rd.errors.push_back(p + ".mode: " + ex.what());
  }
  if (e.type == "iid") {
    const auto l = rd.get<std::string>(env, p, "law", "constant");
    if (l == "constant") e.law = law::Constant{rd.get<double>(env, p, "c", 1.0)};
    else if (l == "bernoulli-zero") e.law = law::BernoulliZero{rd.get<double>(env, p, "p", 0.5)};
    else if (l == "exponential") e.law = law::Exponential{rd.get<double>(env, p, "rate", 1.0)};
    else if (l == "lognormal") e.law = law::Lognormal{rd.get<double>(env, p, "mu", 0.0), rd.get<double>(env, p, "sigma", 1.0)};
    else rd.errors.push_back(p + ".law: unknown law '" + l + "'");
    try {
      validate_law(e.law);
    } catch (const std::exception& ex) {
      rd.errors.push_back(p + ": " + ex.what());
    }
    e.monotone_order = {0};
    return e;
  }
  if (e.type != "gff" && e.type != "interlacement") {
    rd.errors.push_back(p + ".type: unknown environment '" + e.type + "'");
    return e;
  }
  if (e.type == "interlacement") {
    rd.require(d >= 3, "environment: interlacements requires d ≥ 3");
    e.u = rd.get<double>(env, p, "u", 1.0);
    rd.require(e.u > 0.0, "environment.u: must be > 0");
    e.ambient_margin = rd.get<std::int64_t>(env, p, "ambient_margin", 0, true);
  }
  const auto levels = rd.get<std::vector<double>>(env, p, "levels", {});
  if (!levels.empty()) {
    // Indicator weights 1{φ < h}, one variant per level h.
    for (double h : levels) e.variants.push_back({functional::IndicatorBelow{h}, 0.0});
    e.monotone_order.resize(levels.size());
    std::iota(e.monotone_order.begin(), e.monotone_order.end(), 0);
    std::sort(e.monotone_order.begin(), e.monotone_order.end(),
              [&](std::size_t a, std::size_t b) { return levels[a] < levels[b]; });
  } else {
    const FieldFunctional f = parse_functional(rd, rd.sub(env, "functional"), p + ".functional");
    try {
      validate_functional(f);
    } catch (const std::exception& ex) {
      rd.errors.push_back(p + ".functional: " + ex.what());
    }
    const auto shifts = rd.get<std::vector<double>>(env, p, "shifts", {0.0});
    rd.require(!shifts.empty(), p + ".shifts: must not be empty");
    for (double u : shifts) e.variants.push_back({f, u});
    // Raising the shift lowers every weight of a decreasing f.
    e.monotone_order.resize(shifts.size());
    std::iota(e.monotone_order.begin(), e.monotone_order.end(), 0);
    std::sort(e.monotone_order.begin(), e.monotone_order.end(),
              [&](std::size_t a, std::size_t b) { return shifts[a] > shifts[b]; });
  }
  return e;
}

inline WeightModel make_weight_model(const EnvSpec& e) {
  if (e.type == "iid") return iid_model(e.law, e.mode);
  if (e.type == "gff") return gff_model(e.variants, e.mode);
  return interlacement_model(e.u, e.ambient_margin, e.variants, e.mode);
}

struct RcmEnvSpec {
  std::string type = "homogeneous";  // homogeneous | gff
  double a = 1.0, kappa = 1.0, theta = 1.0;
  double beta = 0.25;
  bool include_killing = true;
  std::int64_t fields = 1;
};

inline RcmEnvSpec parse_rcm_environment(ConfigReader& rd, const json& root) {
  RcmEnvSpec e;
  const json env = rd.sub(root, "environment");
  const std::string p = "environment";
  e.type = rd.get<std::string>(env, p, "type", "homogeneous");
  if (e.type == "homogeneous") {
    e.a = rd.get<double>(env, p, "a", 1.0);
    e.kappa = rd.get<double>(env, p, "kappa", 1.0);
    e.theta = rd.get<double>(env, p, "theta", 1.0);
    rd.require(e.a > 0 && e.kappa > 0 && e.theta > 0, p + ": a, kappa and theta must be > 0");
  } else if (e.type == "gff") {
    e.beta = rd.get<double>(env, p, "beta", 0.25);
    e.include_killing = rd.get<bool>(env, p, "include_killing", true);
    e.fields = rd.get<std::int64_t>(env, p, "fields", 1);
    rd.require(e.beta > 0, p + ".beta: must be > 0");
    rd.require(e.fields >= 1, p + ".fields: must be >= 1");
  } else {
    rd.errors.push_back(p + ".type: unknown environment '" + e.type + "'");
  }
  return e;
}

inline ConductanceEnvironment make_rcm_environment(const RcmEnvSpec& e, const LatticeBox& box, const RngStream& s) {
  if (e.type == "homogeneous") return homogeneous_environment(box, e.a, e.theta, e.kappa, 0.0);
  return build_gff_rcm(DirichletGffSampler(box).sample(s), e.beta, e.include_killing, 0.0);
}

// --------------------------------------------------------------------------
// Run context

struct RunOptions {
  std::filesystem::path out_dir;  // empty: config "output" or runs/<kind>-<hash>
  int workers = 1;
  std::optional<std::uint64_t> seed;
};

struct RunResult {
  int exit_code = 0;
  std::filesystem::path out_dir;
  std::string config_hash;
  json summary = json::object();
  std::string error;
};

class RunContext {
 public:
  RunContext(std::filesystem::path dir, std::string hash, std::int64_t replicas)
      : dir_(std::move(dir)), hash_(std::move(hash)), replicas_(replicas) {}

  const std::filesystem::path& dir() const { return dir_; }
  const std::string& hash() const { return hash_; }

  /// CSV whose first two columns attribute each row to the run.
  CsvWriter csv(const std::string& name, std::vector<std::string> columns) {
    columns.insert(columns.begin(), {"config_hash", "replicas"});
    outputs.push_back(name);
    return CsvWriter(dir_ / name, std::move(columns));
  }

  std::vector<CsvCell> cells(std::vector<CsvCell> c) const {
    c.insert(c.begin(), {CsvCell{hash_}, CsvCell{replicas_}});
    return c;
  }

  template <class F>
  void stage(const std::string& name, F&& f) {
    current = name;
    const auto t0 = std::chrono::steady_clock::now();
    f();
    stages.push_back({{"name", name},
                      {"seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}});
  }

  void warn(const std::string& w) { warnings.push_back(w); }

  std::vector<std::string> outputs, warnings;
  json stages = json::array();
  std::string current = "setup";
  json summary = json::object();

 private:
  std::filesystem::path dir_;
  std::string hash_;
  std::int64_t replicas_;
};

// --------------------------------------------------------------------------
// Experiments. Each kind has a parser (which only records errors) and a runner.

struct Experiment {
  std::function<void(ConfigReader&, const json&)> check;
  std::function<void(const json&, RunContext&, int workers)> run;
  std::function<std::int64_t(const json&)> replicas = [](const json& c) { return c.value("replicas", std::int64_t{1}); };
};

namespace exp_detail {

inline RngStream stream_of(const json& c) { return {c.value("seed", std::uint64_t{0}), 0, 0}; }

inline void check_replicas(ConfigReader& rd, const json& c, std::int64_t min = 1) {
  const auto r = rd.get<std::int64_t>(c, "", "replicas", 1);
  rd.require(r >= min, "replicas: must be >= " + std::to_string(min));
}

inline int check_dimension(ConfigReader& rd, const json& c, int def, int min = 1) {
  const int d = rd.get<int>(c, "", "dimension", def);
  rd.require(d >= min, "dimension: requires d ≥ " + std::to_string(min));
  rd.require(d <= 8, "dimension: at most 8 supported");
  return d;
}

inline void check_h(ConfigReader& rd, double h, const std::string& where) {
  rd.require(h >= 0.0 && h <= 1.0, where + ": h ∈ [0,1] required (got " + format_double(h) + ")");
}

// gff-covariance -----------------------------------------------------------

inline void gff_cov_check(ConfigReader& rd, const json& c) {
  check_dimension(rd, c, 3);
  check_replicas(rd, c, 2);
  rd.require(rd.get<std::int64_t>(c, "", "side", 9) >= 1, "side: must be >= 1");
  rd.require(rd.get<std::int64_t>(c, "", "pairs", 20) >= 1, "pairs: must be >= 1");
  rd.require(rd.get<double>(c, "", "sigma", 4.0) > 0, "sigma: must be > 0");
}

inline void gff_cov_run(const json& c, RunContext& ctx, int workers) {
  const int d = c.value("dimension", 3);
  const auto side = c.value("side", std::int64_t{9});
  const auto replicas = c.at("replicas").get<std::int64_t>();
  const auto npairs = c.value("pairs", std::int64_t{20});
  const double sigma = c.value("sigma", 4.0);
  const auto stream = stream_of(c);
  const LatticeBox box = LatticeBox::cube(d, side);
  std::vector<VertexPair> pairs;
  {
    RandomSource rng(stream.with_substream(99));
    for (std::int64_t i = 0; i < npairs; ++i)
      pairs.push_back({static_cast<Index>(rng.uniform_int(box.num_vertices())),
                       static_cast<Index>(rng.uniform_int(box.num_vertices()))});
  }
  std::vector<std::vector<double>> prod(npairs, std::vector<double>(replicas));
  ctx.stage("sample", [&] {
    const DirichletGffSampler sampler(box);
    parallel_for(replicas, workers, [&](std::int64_t r) {
      const auto phi = sampler.sample(stream.with_replica(static_cast<std::uint64_t>(r)));
      for (std::int64_t i = 0; i < npairs; ++i) prod[i][r] = phi[pairs[i].x] * phi[pairs[i].y];
    });
  });
  std::vector<double> green(npairs);
  ctx.stage("oracle", [&] {
    for (std::int64_t i = 0; i < npairs; ++i) green[i] = dirichlet_green_column(box, pairs[i].y)[pairs[i].x];
  });
  auto out = ctx.csv("covariance.csv", {"pair", "x", "y", "empirical", "stderr", "green", "z", "pass"});
  bool all = true;
  double max_z = 0.0;
  for (std::int64_t i = 0; i < npairs; ++i) {
    const auto s = summarize(prod[i]);
    const double z = (s.mean - green[i]) / s.std_error();
    const bool pass = std::abs(z) <= sigma;
    all &= pass;
    max_z = std::max(max_z, std::abs(z));
    out.row(ctx.cells({i, pairs[i].x, pairs[i].y, s.mean, s.std_error(), green[i], z, std::string(pass ? "true" : "false")}));
  }
  const double single = dirichlet_green(LatticeBox::cube(d, 1), 0, 0, {1e-14, 1000});
  ctx.summary = {{"all_pass", all},
                 {"max_abs_z", max_z},
                 {"single_site_variance", single},
                 {"single_site_expected", 1.0 / (2.0 * d)}};
}

// fpp-time-constant ---------------------------------------------------------

struct TimeConstantSpec {
  int d = 2;
  std::vector<std::int64_t> direction, n_levels, box_sides;
  std::int64_t padding = -1;
  double confidence = 0.95;
  std::optional<double> tail_C, growth_q;
  EnvSpec env;
};

inline TimeConstantSpec parse_time_constant(ConfigReader& rd, const json& c) {
  TimeConstantSpec s;
  s.d = check_dimension(rd, c, 2);
  check_replicas(rd, c);
  std::vector<std::int64_t> e1(std::max(s.d, 1), 0);
  e1[0] = 1;
  s.direction = rd.get<std::vector<std::int64_t>>(c, "", "direction", e1);
  rd.require(static_cast<int>(s.direction.size()) == s.d, "direction: length must equal dimension");
  rd.require(std::any_of(s.direction.begin(), s.direction.end(), [](auto v) { return v != 0; }),
             "direction: must be non-zero");
  s.n_levels = rd.get<std::vector<std::int64_t>>(c, "", "n_levels", {}, true);
  try {
    check_levels(s.n_levels);
  } catch (const std::exception& ex) {
    rd.errors.push_back(std::string("n_levels: ") + ex.what());
  }
  s.padding = rd.get<std::int64_t>(c, "", "padding", -1);
  s.box_sides = rd.get<std::vector<std::int64_t>>(c, "", "box_sides", {});
  s.confidence = rd.get<double>(c, "", "confidence", 0.95);
  rd.require(s.confidence > 0 && s.confidence < 1, "confidence: must lie in (0,1)");
  if (c.contains("tail_C")) s.tail_C = rd.get<double>(c, "", "tail_C", 1.0);
  if (c.contains("growth_q")) s.growth_q = rd.get<double>(c, "", "growth_q", 1.0);
  if (s.tail_C) rd.require(*s.tail_C > 0, "tail_C: must be > 0");
  if (s.growth_q) rd.require(*s.growth_q > 0, "growth_q: must be > 0");
  s.env = parse_fpp_environment(rd, c, s.d);
  if (!s.n_levels.empty() && static_cast<int>(s.direction.size()) == s.d && s.n_levels.back() >= 1) {
    const auto n_max = s.n_levels.back();
    const auto pad = s.padding < 0 ? default_padding(n_max) : s.padding;
    rd.require(4 * pad >= n_max, "padding: must be at least n_max/4 = " + format_double(n_max / 4.0));
    if (!s.box_sides.empty()) {
      try {
        segment_box(s.direction, n_max, pad, s.box_sides);
      } catch (const std::exception& ex) {
        rd.errors.push_back(std::string("box_sides: box too small for the largest n level (") + ex.what() + ")");
      }
    }
    if (s.env.type == "interlacement") {
      const auto box = segment_box(s.direction, n_max, std::max<std::int64_t>(pad, 0), s.box_sides);
      const auto side = *std::max_element(box.sides().begin(), box.sides().end());
      rd.require(s.env.ambient_margin >= 2 * side,
                 "environment.ambient_margin: must be at least twice the box side (" + std::to_string(2 * side) + ")");
    }
  }
  return s;
}

inline void time_constant_run(const json& c, RunContext& ctx, int workers) {
  ConfigReader rd;
  const auto s = parse_time_constant(rd, c);
  const auto replicas = c.at("replicas").get<std::int64_t>();
  const auto model = make_weight_model(s.env);
  EstimatorOptions opt;
  opt.padding = s.padding;
  opt.box_sides = s.box_sides;
  opt.level = s.confidence;
  opt.workers = workers;
  TimeConstantRun run;
  ctx.stage("distances", [&] { run = estimate_time_constant(model, s.direction, s.n_levels, replicas, stream_of(c), opt); });
  auto out = ctx.csv("levels.csv", {"variant", "n", "mean", "variance", "ci_low", "ci_high", "infinite"});
  json variants = json::array();
  for (std::size_t v = 0; v < run.per_variant.size(); ++v) {
    const auto& est = run.per_variant[v];
    for (const auto& ls : est.levels) {
      out.row(ctx.cells({std::int64_t(v), ls.n, ls.mean, ls.variance, ls.ci_low, ls.ci_high, ls.infinite}));
      if (ls.infinite > 0) ctx.warn("variant " + std::to_string(v) + ", n = " + std::to_string(ls.n) + ": " +
                                    std::to_string(ls.infinite) + " replicas unreachable (censored)");
    }
    json jv = {{"mu_hat", est.mu_hat},         {"mu_ci_low", est.mu_ci_low}, {"mu_ci_high", est.mu_ci_high},
               {"censored", est.censored},     {"subadditive_trend", est.subadditive_trend}};
    if (s.env.type != "iid") jv["variant"] = variants_to_json({s.env.variants[v]}).front();
    variants.push_back(jv);
  }
  // Pointwise monotonicity across coupled variants.
  std::int64_t violations = 0;
  for (std::size_t r = 0; r < run.distance.size(); ++r)
    for (std::size_t k = 1; k < s.env.monotone_order.size(); ++k)
      for (std::size_t i = 0; i < s.n_levels.size(); ++i)
        if (run.distance[r][s.env.monotone_order[k]][i] < run.distance[r][s.env.monotone_order[k - 1]][i])
          ++violations;
  ctx.summary = {{"variants", variants},
                 {"padding", run.per_variant.front().padding},
                 {"box_sides", run.box.sides()},
                 {"monotonicity_violations", violations},
                 {"environment", model.description}};
  if (s.tail_C) {
    auto tail = ctx.csv("tail.csv", {"n", "hits", "probability", "ci_low", "ci_high"});
    json arr = json::array();
    for (std::size_t i = 0; i < s.n_levels.size(); ++i) {
      std::int64_t hits = 0;
      for (std::int64_t r = 0; r < replicas; ++r) hits += run.distance[r][0][i] <= *s.tail_C * double(s.n_levels[i]);
      const auto w = wilson_interval(hits, replicas, s.confidence);
      tail.row(ctx.cells({s.n_levels[i], hits, w.estimate, w.low, w.high}));
    }
    ctx.summary["tail_C"] = *s.tail_C;
  }
  if (s.growth_q) {
    std::vector<double> lx, ly;
    bool ok = s.n_levels.size() >= 3;
    for (const auto& ls : run.per_variant.front().levels) {
      const double m = ls.mean * double(ls.n);
      ok &= m > 0.0 && std::isfinite(m);
      lx.push_back(std::log(double(ls.n)));
      ly.push_back(std::log(m));
    }
    if (ok) {
      const auto f = least_squares(lx, ly);
      const double bound = 1.0 - double(s.d - 1) / *s.growth_q;
      ctx.summary["growth"] = {{"slope", f.slope}, {"slope_se", f.slope_se}, {"lower_bound", bound},
                               {"consistent", f.slope >= bound - 0.05}};
    } else {
      ctx.warn("growth exponent skipped: need >= 3 levels with finite positive means");
    }
  }
}

// shape ---------------------------------------------------------------------

inline void shape_check(ConfigReader& rd, const json& c) {
  const int d = check_dimension(rd, c, 2);
  check_replicas(rd, c);
  rd.require(rd.get<std::int64_t>(c, "", "side", 0, true) >= 3, "side: must be >= 3");
  const auto t = rd.get<std::vector<double>>(c, "", "t_levels", {}, true);
  rd.require(t.size() >= 2, "t_levels: need at least 2 values");
  for (std::size_t i = 0; i < t.size(); ++i)
    rd.require(t[i] > 0 && (i == 0 || t[i] > t[i - 1]), "t_levels: must be positive and increasing");
  const auto env = parse_fpp_environment(rd, c, d);
  if (env.type == "interlacement") {
    const auto side = rd.get<std::int64_t>(c, "", "side", 0);
    rd.require(env.ambient_margin >= 2 * side, "environment.ambient_margin: must be at least twice the box side");
  }
}

inline void shape_run(const json& c, RunContext& ctx, int workers) {
  ConfigReader rd;
  const int d = c.value("dimension", 2);
  const auto env = parse_fpp_environment(rd, c, d);
  const auto model = make_weight_model(env);
  const auto side = c.at("side").get<std::int64_t>();
  const auto t = c.at("t_levels").get<std::vector<double>>();
  const auto replicas = c.at("replicas").get<std::int64_t>();
  const LatticeBox box = LatticeBox::cube(d, side);
  ShapeConvergenceReport rep;
  ctx.stage("shape", [&] { rep = shape_convergence(model, box, t, replicas, stream_of(c), workers); });
  auto out = ctx.csv("shape.csv", {"t_from", "t_to", "hausdorff", "stderr"});
  for (std::size_t i = 0; i + 1 < t.size(); ++i) out.row(ctx.cells({t[i], t[i + 1], rep.hausdorff[i], rep.hausdorff_se[i]}));
  ctx.stage("ball", [&] {
    const auto ws = model.sample(box, stream_of(c).with_replica(0));
    const auto ball = shape_ball(ws.front(), box.center(), t.back());
    std::vector<std::string> cols;
    for (int a = 0; a < d; ++a) cols.push_back("x" + std::to_string(a));
    auto bw = ctx.csv("ball.csv", cols);
    const Coord o = box.coords(box.center());
    for (Index v : ball) {
      const Coord x = box.coords(v);
      std::vector<CsvCell> row;
      for (int a = 0; a < d; ++a) row.push_back(std::int64_t(x[a] - o[a]));
      bw.row(ctx.cells(row));
    }
  });
  if (rep.boundary_hits > 0)
    ctx.warn(std::to_string(rep.boundary_hits) + " balls touched the box boundary; enlarge 'side'");
  ctx.summary = {{"convexity_defect", rep.convexity_defect}, {"boundary_hits", rep.boundary_hits},
                 {"box_sides", rep.box_sides}, {"environment", model.description}};
}

// crossing ------------------------------------------------------------------

inline std::vector<double> h_grid_of(ConfigReader& rd, const json& c) {
  if (c.contains("h_grid")) return rd.get<std::vector<double>>(c, "", "h_grid", {});
  const json r = rd.sub(c, "h_range");
  const double lo = rd.get<double>(r, "h_range", "min", 0.0, true);
  const double hi = rd.get<double>(r, "h_range", "max", 0.0, true);
  const double st = rd.get<double>(r, "h_range", "step", 0.1, true);
  std::vector<double> out;
  if (!(st > 0) || !(hi >= lo) || (hi - lo) / st > 1e6) {
    rd.errors.push_back("h_range: need step > 0 and max >= min");
    return out;
  }
  const auto n = static_cast<std::int64_t>(std::floor((hi - lo) / st + 1e-9));
  for (std::int64_t i = 0; i <= n; ++i) out.push_back(lo + st * double(i));
  return out;
}

inline void crossing_check(ConfigReader& rd, const json& c) {
  check_dimension(rd, c, 3);
  check_replicas(rd, c);
  const auto L = rd.get<std::vector<std::int64_t>>(c, "", "L_grid", {}, true);
  rd.require(!L.empty(), "L_grid: must not be empty");
  for (auto l : L) rd.require(l >= 1, "L_grid: values must be >= 1");
  rd.require(!h_grid_of(rd, c).empty(), "h_grid: must not be empty");
  const auto side = rd.get<std::int64_t>(c, "", "sampling_side", 0);
  if (side > 0 && !L.empty())
    rd.require(side >= 4 * *std::max_element(L.begin(), L.end()) + 3, "sampling_side: 2L + margin must fit (need >= 4L + 3)");
  const double th = rd.get<double>(c, "", "threshold", 0.05);
  rd.require(th > 0 && th < 1, "threshold: must lie in (0,1)");
}

inline void crossing_run(const json& c, RunContext& ctx, int workers) {
  ConfigReader rd;
  const int d = c.value("dimension", 3);
  const auto L = c.at("L_grid").get<std::vector<std::int64_t>>();
  const auto h = h_grid_of(rd, c);
  const auto replicas = c.at("replicas").get<std::int64_t>();
  CrossingOptions opt;
  opt.threshold = c.value("threshold", 0.05);
  opt.sampling_side = c.value("sampling_side", std::int64_t{0});
  opt.level = c.value("confidence", 0.95);
  opt.workers = workers;
  std::vector<CrossingCurve> curves;
  ctx.stage("crossing", [&] { curves = crossing_curve(gff_field_sampler(), d, L, h, replicas, stream_of(c), opt); });
  auto out = ctx.csv("crossing.csv", {"L", "h", "probability", "ci_low", "ci_high"});
  auto crit = ctx.csv("critical_levels.csv", {"L", "replica", "h_c"});
  json hs = json::array();
  for (const auto& cc : curves) {
    for (std::size_t j = 0; j < cc.h.size(); ++j)
      out.row(ctx.cells({cc.L, cc.h[j], cc.probability[j], cc.ci[j].low, cc.ci[j].high}));
    for (std::size_t r = 0; r < cc.critical_levels.size(); ++r)
      crit.row(ctx.cells({cc.L, std::int64_t(r), cc.critical_levels[r]}));
    hs.push_back({{"L", cc.L}, {"h_star", std::isfinite(cc.h_star) ? json(cc.h_star) : json(nullptr)}});
    if (!std::isfinite(cc.h_star)) ctx.warn("L = " + std::to_string(cc.L) + ": no grid level below the threshold");
  }
  ctx.summary = {{"h_star", hs}, {"threshold", opt.threshold}, {"sampling_side", curves.front().sampling_side}};
}

// decoupling ----------------------------------------------------------------

inline BoxFunctional parse_box_functional(ConfigReader& rd, const json& node, const std::string& path) {
  BoxFunctional f;
  const auto t = rd.get<std::string>(node, path, "type", "min-above");
  if (t == "one") f.kind = BoxFunctional::One;
  else if (t != "min-above") rd.errors.push_back(path + ".type: unknown functional '" + t + "'");
  f.h = rd.get<double>(node, path, "h", 0.0);
  return f;
}

inline void decoupling_check_cfg(ConfigReader& rd, const json& c) {
  check_dimension(rd, c, 3);
  check_replicas(rd, c, 2);
  rd.require(rd.get<std::int64_t>(c, "", "L", 0, true) >= 0, "L: must be >= 0");
  const auto seps = rd.get<std::vector<std::int64_t>>(c, "", "separations", {}, true);
  rd.require(!seps.empty(), "separations: must not be empty");
  for (auto s : seps) rd.require(s >= 1, "separations: overlapping boxes (separation must be >= 1)");
  const double u = rd.get<double>(c, "", "u", 0.0, true), uh = rd.get<double>(c, "", "u_hat", 0.0, true);
  rd.require(uh <= u, "u_hat: must be <= u");
  const auto field = rd.get<std::string>(c, "", "field", "gff");
  rd.require(field == "gff" || field == "iid-normal", "field: must be 'gff' or 'iid-normal'");
  parse_box_functional(rd, rd.sub(c, "f1"), "f1");
  parse_box_functional(rd, rd.sub(c, "f2"), "f2");
}

inline void decoupling_run(const json& c, RunContext& ctx, int workers) {
  ConfigReader rd;
  const int d = c.value("dimension", 3);
  const auto L = c.at("L").get<std::int64_t>();
  const auto seps = c.at("separations").get<std::vector<std::int64_t>>();
  const double u = c.at("u").get<double>(), uh = c.at("u_hat").get<double>();
  const auto f1 = parse_box_functional(rd, rd.sub(c, "f1"), "f1");
  const auto f2 = parse_box_functional(rd, rd.sub(c, "f2"), "f2");
  const auto replicas = c.at("replicas").get<std::int64_t>();
  const auto sampler = c.value("field", std::string("gff")) == "gff" ? gff_field_sampler() : iid_normal_field_sampler(1.0);
  DecouplingOptions opt;
  opt.tolerance = c.value("tolerance", 0.0);
  opt.level = c.value("confidence", 0.95);
  opt.paired = c.value("paired", true);
  opt.workers = workers;
  auto out = ctx.csv("decoupling.csv", {"separation", "e_hat_f1f2", "e_u_f1", "e_u_f2", "slack", "slack_se",
                                        "slack_low", "slack_high", "holds"});
  json reps = json::array();
  for (std::size_t i = 0; i < seps.size(); ++i) {
    CorrelationReport rep;
    ctx.stage("separation-" + std::to_string(seps[i]), [&] {
      rep = decoupling_check(sampler, d, L, seps[i], u, uh, f1, f2, replicas,
                             stream_of(c).with_substream(16 * (i + 1)), opt);
    });
    out.row(ctx.cells({seps[i], rep.e_hat_f1f2, rep.e_u_f1, rep.e_u_f2, rep.slack, rep.slack_se, rep.slack_low,
                       rep.slack_high, std::string(rep.holds ? "true" : "false")}));
    reps.push_back({{"separation", seps[i]}, {"slack", rep.slack}, {"holds", rep.holds}});
  }
  ctx.summary = {{"reports", reps}, {"paired", opt.paired}, {"u", u}, {"u_hat", uh}};
}

// green-decay ---------------------------------------------------------------

inline void green_check(ConfigReader& rd, const json& c) {
  const int d = check_dimension(rd, c, 3);
  rd.require(d >= 3, "dimension: green-decay requires d ≥ 3");
  const auto side = rd.get<std::int64_t>(c, "", "side", 0, true);
  rd.require(side >= 3, "side: must be >= 3");
  const auto hs = rd.get<std::vector<double>>(c, "", "h_grid", {}, true);
  rd.require(!hs.empty(), "h_grid: must not be empty");
  for (double h : hs) check_h(rd, h, "h_grid");
  parse_rcm_environment(rd, c);
  const json p = rd.sub(c, "pairs");
  const auto layout = rd.get<std::string>(p, "pairs", "layout", "centered");
  rd.require(layout == "centered" || layout == "ray", "pairs.layout: must be 'centered' or 'ray'");
  const auto dist = rd.get<std::vector<std::int64_t>>(p, "pairs", "distances", {}, true);
  const double r_min = rd.get<double>(c, "", "r_min", 8.0);
  std::size_t levels = 0;
  for (auto r : dist) levels += double(r) >= r_min;
  rd.require(levels >= 3, "pairs.distances: need at least 3 distances >= r_min");
  for (auto r : dist) rd.require(r >= 1 && r < side, "pairs.distances: must lie in [1, side)");
  if (layout == "ray") {
    const auto src = rd.get<std::vector<std::int64_t>>(p, "pairs", "source", {}, true);
    rd.require(static_cast<int>(src.size()) == d, "pairs.source: must have one coordinate per axis");
    if (static_cast<int>(src.size()) == d && !dist.empty() && side >= 1) {
      bool ok = true;
      for (int a = 0; a < d; ++a) ok &= src[a] >= 0 && src[a] < side;
      ok &= src[0] + *std::max_element(dist.begin(), dist.end()) < side;
      rd.require(ok, "pairs: ray leaves the box");
    }
  }
}

inline void green_run(const json& c, RunContext& ctx, int workers) {
  ConfigReader rd;
  const int d = c.value("dimension", 3);
  const auto side = c.at("side").get<std::int64_t>();
  const auto hs = c.at("h_grid").get<std::vector<double>>();
  const auto env_spec = parse_rcm_environment(rd, c);
  const LatticeBox box = LatticeBox::cube(d, side);
  const json p = c.at("pairs");
  const auto dist = p.at("distances").get<std::vector<std::int64_t>>();
  std::vector<VertexPair> pairs;
  if (p.value("layout", std::string("centered")) == "ray")
    pairs = ray_pairs(box, box.index_checked(p.at("source").get<std::vector<std::int64_t>>()), dist);
  else
    pairs = centered_axis_pairs(box, dist);
  std::vector<ConductanceEnvironment> envs;
  ctx.stage("environments", [&] {
    const std::int64_t n = env_spec.type == "gff" ? env_spec.fields : 1;
    for (std::int64_t k = 0; k < n; ++k)
      envs.push_back(make_rcm_environment(env_spec, box, stream_of(c).with_replica(static_cast<std::uint64_t>(k))));
  });
  GreenDecayOptions opt;
  opt.r_min = c.value("r_min", 8.0);
  opt.r_max = c.value("r_max", kInfinity);
  opt.cg.tolerance = c.value("cg_tolerance", 1e-14);
  opt.cg.max_iterations = c.value("cg_max_iterations", 200000);
  opt.workers = workers;
  std::vector<GreenDecayFit> fits;
  ctx.stage("solve", [&] { fits = fit_green_decay(envs, hs, pairs, opt); });
  auto out = ctx.csv("decay.csv", {"h", "c_hat", "stderr", "ratio_to_sqrt_h", "loglog_slope", "loglog_se"});
  json arr = json::array();
  double rmin = kInfinity, rmax = 0.0;
  for (const auto& f : fits) {
    out.row(ctx.cells({f.h, f.c_hat, f.stderr_, f.ratio_to_sqrt_h, f.loglog_slope, f.loglog_se}));
    arr.push_back({{"h", f.h}, {"c_hat", f.c_hat}, {"ratio_to_sqrt_h", f.ratio_to_sqrt_h}});
    if (f.h > 0) {
      rmin = std::min(rmin, f.ratio_to_sqrt_h);
      rmax = std::max(rmax, f.ratio_to_sqrt_h);
    }
  }
  ctx.summary = {{"fits", arr}, {"environments", envs.size()}, {"pairs_used", fits.front().pairs_used}};
  if (rmax > 0) ctx.summary["ratio_spread"] = rmax / rmin;
  if (c.value("snapshot", false)) {
    const auto col = solve_green(envs.front().with_h(hs.front()), pairs.front().y, Boundary::Absorbing, opt.cg);
    write_snapshot(ctx.dir() / "green_column", box, col.g, "green",
                   {"solve_green", stream_of(c), {{"h", hs.front()}, {"y", col.y}}});
    ctx.outputs.push_back("green_column.bin");
  }
}

// heat-kernel ---------------------------------------------------------------

inline void heat_check(ConfigReader& rd, const json& c) {
  const int d = check_dimension(rd, c, 3);
  const auto side = rd.get<std::int64_t>(c, "", "side", 0, true);
  rd.require(side >= 1, "side: must be >= 1");
  const auto t = rd.get<std::vector<double>>(c, "", "t_grid", {}, true);
  rd.require(!t.empty(), "t_grid: must not be empty");
  for (std::size_t i = 0; i < t.size(); ++i)
    rd.require(t[i] > 0 && (i == 0 || t[i] > t[i - 1]), "t_grid: must be positive and increasing");
  check_h(rd, rd.get<double>(c, "", "h", 0.0), "h");
  parse_rcm_environment(rd, c);
  const auto m = rd.get<std::string>(c, "", "method", "krylov");
  try {
    const auto method = heat_method_from_string(m);
    double n = 1;
    for (int a = 0; a < d; ++a) n *= double(side);
    if (method == HeatMethod::ExactSmall)
      rd.require(n <= kExactHeatMaxVertices, "method: exact-small needs at most 4096 vertices");
    if (method == HeatMethod::MonteCarlo)
      rd.require(rd.get<std::int64_t>(c, "", "walks", 0, true) >= 2, "walks: monte-carlo needs a budget >= 2");
  } catch (const std::exception& ex) {
    rd.errors.push_back(std::string("method: ") + ex.what());
  }
}

inline void heat_run(const json& c, RunContext& ctx, int) {
  ConfigReader rd;
  const int d = c.value("dimension", 3);
  const auto side = c.at("side").get<std::int64_t>();
  const auto t = c.at("t_grid").get<std::vector<double>>();
  const auto method = heat_method_from_string(c.value("method", std::string("krylov")));
  const LatticeBox box = LatticeBox::cube(d, side);
  const auto env = make_rcm_environment(parse_rcm_environment(rd, c), box, stream_of(c)).with_h(c.value("h", 0.0));
  const Index x = box.center();
  std::vector<HeatKernelSlice> slices;
  ctx.stage("heat", [&] {
    if (method == HeatMethod::Krylov) {
      slices = krylov_heat_kernel(env, x, t);
    } else if (method == HeatMethod::ExactSmall) {
      const ExactHeatKernel hk(env);
      for (double s : t) slices.push_back(hk.slice(x, s));
    } else {
      for (std::size_t i = 0; i < t.size(); ++i)
        slices.push_back(monte_carlo_heat_kernel(env, x, t[i], c.at("walks").get<std::int64_t>(),
                                                 stream_of(c).with_substream(i + 1)));
    }
  });
  auto out = ctx.csv("heat.csv", {"t", "p_diag", "mass", "error_estimate"});
  for (const auto& s : slices) out.row(ctx.cells({s.t, s.p[x], s.mass, s.error_estimate}));
  std::vector<Index> targets;
  const Coord cx = box.coords(x);
  for (std::int64_t r = 1;; ++r) {
    Coord y = cx;
    y[0] += r;
    const Index v = box.index(y);
    if (v == kNoIndex) break;
    targets.push_back(v);
  }
  ctx.summary = {{"method", to_string(method)}, {"source", x}};
  if (slices.size() >= 2 && slices.back().t >= 8 * slices.front().t) {
    const auto fit = heat_kernel_shape_fit(box, slices, targets);
    ctx.summary["diagonal_slope"] = fit.diagonal_slope;
    ctx.summary["diagonal_se"] = fit.diagonal_se;
    ctx.summary["expected_slope"] = -d / 2.0;
    auto g = ctx.csv("gaussian_fit.csv", {"t", "gaussian_slope", "stderr"});
    for (std::size_t i = 0; i < fit.t.size(); ++i) g.row(ctx.cells({fit.t[i], fit.gaussian_slope[i], fit.gaussian_se[i]}));
  } else {
    ctx.warn("t grid spans less than a factor 8; shape fit skipped");
  }
}

// interlacement-occupation --------------------------------------------------

inline void inter_check(ConfigReader& rd, const json& c) {
  const int d = check_dimension(rd, c, 3);
  rd.require(d >= 3, "dimension: interlacements requires d ≥ 3");
  check_replicas(rd, c, 2);
  const auto side = rd.get<std::int64_t>(c, "", "target_side", 0, true);
  rd.require(side >= 1, "target_side: must be >= 1");
  const auto m = rd.get<std::int64_t>(c, "", "ambient_margin", 0, true);
  rd.require(m >= 2 * side, "ambient_margin: must be at least twice the target side (" + std::to_string(2 * side) + ")");
  const auto us = rd.get<std::vector<double>>(c, "", "u_grid", {}, true);
  rd.require(!us.empty(), "u_grid: must not be empty");
  for (double u : us) rd.require(u > 0, "u_grid: values must be > 0");
}

inline void inter_run(const json& c, RunContext& ctx, int workers) {
  const int d = c.value("dimension", 3);
  const auto side = c.at("target_side").get<std::int64_t>();
  const auto margin = c.at("ambient_margin").get<std::int64_t>();
  const auto us = c.at("u_grid").get<std::vector<double>>();
  const auto replicas = c.at("replicas").get<std::int64_t>();
  const double sigma = c.value("sigma", 4.0);
  const LatticeBox target = LatticeBox::cube(d, side);
  std::unique_ptr<InterlacementSampler> sampler;
  ctx.stage("equilibrium", [&] { sampler = std::make_unique<InterlacementSampler>(target, margin); });
  const Index probe = target.center();
  double g_probe = 0;
  ctx.stage("oracle", [&] { g_probe = walk_green(sampler->ambient(), sampler->ambient().index_checked(target.coords(probe)),
                                                 sampler->ambient().index_checked(target.coords(probe))); });
  auto vac = ctx.csv("vacancy.csv", {"u", "vacancy", "stderr", "exact", "z"});
  auto occ = ctx.csv("occupation.csv", {"u", "vertex", "mean", "stderr", "campbell", "z"});
  json arr = json::array();
  bool all = true;
  for (std::size_t k = 0; k < us.size(); ++k) {
    std::vector<std::vector<double>> L(replicas);
    ctx.stage("sample-u" + format_double(us[k]), [&] {
      parallel_for(replicas, workers, [&](std::int64_t r) {
        L[r] = sampler->sample(us[k], stream_of(c).with_substream(k + 1).with_replica(static_cast<std::uint64_t>(r))).values;
      });
    });
    std::size_t zeros = 0;
    for (const auto& l : L) zeros += l[probe] == 0.0;
    const double pv = double(zeros) / double(replicas);
    const double exact = std::exp(-us[k] / g_probe);
    const double se = std::sqrt(exact * (1 - exact) / double(replicas));
    const double zv = (pv - exact) / se;
    vac.row(ctx.cells({us[k], pv, se, exact, zv}));
    const auto mean = sampler->campbell_mean(us[k]);
    double worst = 0.0, probe_z = 0.0;
    for (Index v = 0; v < target.num_vertices(); ++v) {
      std::vector<double> x(replicas);
      for (std::int64_t r = 0; r < replicas; ++r) x[r] = L[r][v];
      const auto s = summarize(x);
      const double z = (s.mean - mean[v]) / s.std_error();
      worst = std::max(worst, std::abs(z));
      if (v == probe) probe_z = z;
      occ.row(ctx.cells({us[k], v, s.mean, s.std_error(), mean[v], z}));
    }
    all &= std::abs(zv) <= sigma;
    arr.push_back({{"u", us[k]}, {"vacancy", pv}, {"exact", exact}, {"z", zv}, {"max_abs_z_occupation", worst},
                   {"probe_occupation_z", probe_z}});
  }
  ctx.summary = {{"results", arr}, {"capacity", sampler->capacity()}, {"g_probe", g_probe},
                 {"ambient_sides", sampler->ambient().sides()}, {"vacancy_all_pass", all},
                 {"ambient_margin", margin},
                 {"escape_error_scale", std::pow(double(margin), 2.0 - d)}};
}

// schedule-diagnostics ------------------------------------------------------

inline void schedule_check(ConfigReader& rd, const json& c) {
  rd.require(rd.get<double>(c, "", "delta", 2.0) > 1.0, "delta: must be > 1");
  rd.require(rd.get<double>(c, "", "rho", 1.0) > 0.0, "rho: must be > 0");
  rd.require(rd.get<int>(c, "", "K", 0) >= 0, "K: must be >= 0");
  rd.require(rd.get<double>(c, "", "L0", 1.0) > 0.0, "L0: must be > 0");
  const int k = rd.get<int>(c, "", "k_max", 20);
  rd.require(k >= 0 && k <= 1000, "k_max: must lie in [0, 1000]");
}

inline void schedule_run(const json& c, RunContext& ctx, int) {
  ScaleSchedule s;
  ctx.stage("schedule", [&] {
    s = build_scale_schedule(c.value("delta", 2.0), c.value("rho", 1.0), c.value("K", 0), c.value("L0", 1.0),
                             c.value("k_max", 20));
  });
  const auto eps = s.epsilon(c.value("epsilon", 1.0));
  auto out = ctx.csv("schedule.csv", {"k", "L_k", "rho_k", "a_k", "eps_k", "normalized", "lower_ok", "monotone_ok",
                                      "bounded_ok"});
  bool lower = true, mono = true, bounded = true;
  for (int k = 0; k <= s.k_max; ++k) {
    const double nk = s.normalized(k);
    const bool l = s.L[k] >= std::ldexp(1.0, k) * s.L0;
    const bool m = k == 0 || nk >= s.normalized(k - 1);
    const bool b = nk <= s.product_bound * (1 + 1e-12);
    lower &= l;
    mono &= m;
    bounded &= b;
    out.row(ctx.cells({std::int64_t(k), s.L[k], s.rho_k[k], s.a[k], eps[k], nk, std::string(l ? "true" : "false"),
                       std::string(m ? "true" : "false"), std::string(b ? "true" : "false")}));
  }
  ctx.summary = {{"lower_ok", lower}, {"monotone_ok", mono}, {"bounded_ok", bounded},
                 {"product_bound", s.product_bound}, {"all_ok", lower && mono && bounded}};
}

}  // namespace exp_detail

inline const std::map<std::string, Experiment>& experiment_registry() {
  using namespace exp_detail;
  static const std::map<std::string, Experiment> reg = {
      {"gff-covariance", {gff_cov_check, gff_cov_run}},
      {"fpp-time-constant", {[](ConfigReader& rd, const json& c) { parse_time_constant(rd, c); }, time_constant_run}},
      {"shape", {shape_check, shape_run}},
      {"crossing", {crossing_check, crossing_run}},
      {"decoupling", {decoupling_check_cfg, decoupling_run}},
      {"green-decay",
       {green_check, green_run,
        [](const json& c) {
          const auto& e = c.value("environment", json::object());
          return e.value("type", std::string("homogeneous")) == "gff" ? e.value("fields", std::int64_t{1}) : std::int64_t{1};
        }}},
      {"heat-kernel", {heat_check, heat_run, [](const json& c) { return c.value("walks", std::int64_t{1}); }}},
      {"interlacement-occupation", {inter_check, inter_run}},
      {"schedule-diagnostics", {schedule_check, schedule_run, [](const json&) { return std::int64_t{1}; }}},
  };
  return reg;
}

/// All violated preconditions; empty when the config is runnable.
inline std::vector<std::string> validate_config(const json& c) {
  ConfigReader rd;
  if (!c.is_object()) return {"config: top level must be an object"};
  const auto version = rd.get<int>(c, "", "schema_version", kSchemaVersion);
  rd.require(version == kSchemaVersion, "schema_version: unsupported (expected " + std::to_string(kSchemaVersion) + ")");
  const auto kind = rd.get<std::string>(c, "", "experiment", "", true);
  rd.get<std::uint64_t>(c, "", "seed", 0);
  const auto& reg = experiment_registry();
  const auto it = reg.find(kind);
  if (it == reg.end()) {
    if (!kind.empty()) rd.errors.push_back("experiment: unknown kind '" + kind + "'");
    return rd.errors;
  }
  it->second.check(rd, c);
  return rd.errors;
}

inline json load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return json::parse(in);
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Validates and runs; never throws. Exit code 2 for an invalid config, 1
/// for a runtime failure (error.json written), 0 on success.
inline RunResult run_experiment(json config, const RunOptions& opt) {
  RunResult res;
  if (opt.seed) config["seed"] = *opt.seed;
  const auto errors = validate_config(config);
  if (!errors.empty()) {
    res.exit_code = 2;
    res.error = json({{"status", "invalid-config"}, {"errors", errors}}).dump();
    return res;
  }
  const std::string kind = config.at("experiment");
  res.config_hash = config_hash(config);
  res.out_dir = !opt.out_dir.empty() ? opt.out_dir
                : config.contains("output") ? std::filesystem::path(config.at("output").get<std::string>())
                                            : std::filesystem::path("runs") / (kind + "-" + res.config_hash.substr(0, 8));
  const auto& ex = experiment_registry().at(kind);
  const auto t0 = std::chrono::steady_clock::now();
  const std::string started = utc_timestamp();
  std::unique_ptr<RunContext> ctx;
  try {
    std::filesystem::create_directories(res.out_dir);
    ctx = std::make_unique<RunContext>(res.out_dir, res.config_hash, ex.replicas(config));
    ex.run(config, *ctx, std::max(1, opt.workers));
  } catch (const std::exception& e) {
    res.exit_code = 1;
    const json err = {{"status", "runtime-failure"},
                      {"stage", ctx ? ctx->current : std::string("setup")},
                      {"error", e.what()},
                      {"config_hash", res.config_hash}};
    res.error = err.dump();
    try {
      write_json(res.out_dir / "error.json", err);
    } catch (...) {
    }
    return res;
  }
  json manifest = {{"config_hash", res.config_hash},
                   {"schema_version", kSchemaVersion},
                   {"experiment", kind},
                   {"generator", RngStream::kAlgorithm},
                   {"version", FPPLAB_VERSION},
                   {"seed", config.value("seed", std::uint64_t{0})},
                   {"workers", std::max(1, opt.workers)},
                   {"started_at", started},
                   {"wall_clock_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()},
                   {"stages", ctx->stages},
                   {"warnings", ctx->warnings},
                   {"outputs", ctx->outputs},
                   {"config", config}};
  ctx->summary["config_hash"] = res.config_hash;
  write_json(res.out_dir / "summary.json", ctx->summary);
  write_json(res.out_dir / "manifest.json", manifest);
  res.summary = ctx->summary;
  return res;
}

}  // namespace fpplab
