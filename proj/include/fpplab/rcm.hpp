#pragma once

// Random conductance models with killing on a box.
//
// Generator, with speed measure θ:
//   (L_θ f)(x) = θ(x)^{-1} [ Σ_{y~x} a(x,y) (f(y) - f(x)) - h κ(x) f(x) ],
// where neighbors outside the box hold f = 0 (absorbing boundary). The
// conductance from x to the outside is stored per vertex as `exit`.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "fpplab/field.hpp"
#include "fpplab/fpp.hpp"
#include "fpplab/lattice.hpp"
#include "fpplab/linear_solve.hpp"
#include "fpplab/rng.hpp"
#include "fpplab/stats.hpp"

namespace fpplab {

enum class Boundary { Absorbing, Free };

inline const char* to_string(Boundary b) { return b == Boundary::Absorbing ? "absorbing" : "free"; }

struct ConductanceEnvironment {
  LatticeBox box;
  std::vector<double> a;      // per edge, >= 0
  std::vector<double> exit;   // per vertex: total conductance to the outer boundary
  std::vector<double> theta;  // per vertex, > 0
  std::vector<double> kappa;  // per vertex, > 0
  double h = 0.0;
  json provenance = json::object();

  /// μ(x) = Σ_{y~x} a(x,y), outer-boundary edges included.
  double mu(Index x) const {
    double s = exit[x];
    box.for_each_neighbor(x, [&](Index, Index e) { s += a[e]; });
    return s;
  }

  /// Conductance to in-box neighbors only.
  double mu_inner(Index x) const {
    double s = 0.0;
    box.for_each_neighbor(x, [&](Index, Index e) { s += a[e]; });
    return s;
  }

  /// ν(x) = Σ_{y~x, a>0} 1/a(x,y). Outer-boundary edges of one vertex are
  /// assumed to share one conductance value.
  double nu(Index x) const {
    double s = 0.0;
    box.for_each_neighbor(x, [&](Index, Index e) {
      if (a[e] > 0.0) s += 1.0 / a[e];
    });
    const int out = box.exterior_degree(x);
    if (out > 0 && exit[x] > 0.0) s += out * out / exit[x];
    return s;
  }

  void validate() const {
    if (static_cast<Index>(a.size()) != box.num_edges() || static_cast<Index>(exit.size()) != box.num_vertices() ||
        static_cast<Index>(theta.size()) != box.num_vertices() ||
        static_cast<Index>(kappa.size()) != box.num_vertices())
      throw std::invalid_argument("ConductanceEnvironment: array sizes do not match box");
    for (double v : a)
      if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("ConductanceEnvironment: bad conductance");
    for (double v : exit)
      if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("ConductanceEnvironment: bad exit conductance");
    for (double v : theta)
      if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("ConductanceEnvironment: θ must be > 0");
    for (double v : kappa)
      if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("ConductanceEnvironment: κ must be > 0");
    if (!(h >= 0.0 && h <= 1.0)) throw std::invalid_argument("ConductanceEnvironment: h must lie in [0,1]");
  }

  ConductanceEnvironment with_h(double h_new) const {
    ConductanceEnvironment e = *this;
    e.h = h_new;
    e.validate();
    return e;
  }
};

/// Constant conductance a, speed θ and killing κ; edges to the outside carry a too.
inline ConductanceEnvironment homogeneous_environment(const LatticeBox& box, double a = 1.0, double theta = 1.0,
                                                      double kappa = 1.0, double h = 0.0) {
  ConductanceEnvironment env;
  env.box = box;
  env.a.assign(box.num_edges(), a);
  env.exit.resize(box.num_vertices());
  for (Index v = 0; v < box.num_vertices(); ++v) env.exit[v] = a * box.exterior_degree(v);
  env.theta.assign(box.num_vertices(), theta);
  env.kappa.assign(box.num_vertices(), kappa);
  env.h = h;
  env.provenance = {{"environment", "homogeneous"}, {"a", a}, {"theta", theta}, {"kappa", kappa}};
  env.validate();
  return env;
}

inline constexpr double kExpClamp = 40.0;

/**
 * a(e) = exp(β(φ_{e-} + φ_{e+})), κ(x) = exp(βφ_x) (or 1 without killing),
 * θ ≡ 1. The field is zero outside the box, so an edge to the outside has
 * conductance exp(βφ_x). Fields with |βφ| > 40 somewhere are rejected.
 */
inline ConductanceEnvironment build_gff_rcm(const ScalarField& field, double beta, bool include_killing,
                                            double h = 0.0) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("build_gff_rcm: beta must be > 0");
  const LatticeBox& box = field.box;
  if (static_cast<Index>(field.values.size()) != box.num_vertices())
    throw std::invalid_argument("build_gff_rcm: field size does not match box");
  for (Index v = 0; v < box.num_vertices(); ++v) {
    const double x = beta * field.values[v];
    if (!std::isfinite(x) || std::abs(x) > kExpClamp)
      throw std::domain_error("build_gff_rcm: |beta*phi| = " + std::to_string(std::abs(x)) + " at vertex " +
                              std::to_string(v) + " exceeds the safe range " + std::to_string(kExpClamp));
  }
  ConductanceEnvironment env;
  env.box = box;
  env.a.resize(box.num_edges());
  for (Index e = 0; e < box.num_edges(); ++e) {
    const auto [p, q] = box.edge_endpoints(e);
    env.a[e] = std::exp(beta * (field.values[p] + field.values[q]));
  }
  env.exit.resize(box.num_vertices());
  env.kappa.resize(box.num_vertices());
  for (Index v = 0; v < box.num_vertices(); ++v) {
    const double w = std::exp(beta * field.values[v]);
    env.exit[v] = box.exterior_degree(v) * w;
    env.kappa[v] = include_killing ? w : 1.0;
  }
  env.theta.assign(box.num_vertices(), 1.0);
  env.h = h;
  env.provenance = {{"environment", "gff"}, {"beta", beta}, {"include_killing", include_killing},
                    {"sampler", field.provenance.sampler}, {"seed", field.provenance.stream.seed},
                    {"replica", field.provenance.stream.replica}};
  env.validate();
  return env;
}

/// θ(x)·(-L_θ) as a symmetric operator: diag μ + hκ (μ without the exit part
/// under a free boundary), off-diagonal -a.
inline LatticeOperator rcm_operator(const ConductanceEnvironment& env, Boundary boundary) {
  LatticeOperator op;
  op.box = env.box;
  op.conductance = env.a;
  op.diag.resize(env.box.num_vertices());
  for (Index v = 0; v < env.box.num_vertices(); ++v)
    op.diag[v] = env.mu_inner(v) + (boundary == Boundary::Absorbing ? env.exit[v] : 0.0) + env.h * env.kappa[v];
  return op;
}

/// (L_θ f)(x).
inline std::vector<double> apply_generator(const ConductanceEnvironment& env, const std::vector<double>& f,
                                           Boundary boundary = Boundary::Absorbing) {
  std::vector<double> out;
  rcm_operator(env, boundary).apply(f, out);
  for (Index v = 0; v < env.box.num_vertices(); ++v) out[v] = -out[v] / env.theta[v];
  return out;
}

/// Σ_e a (∇f)² + h Σ κ f², with f = 0 outside the box for the absorbing boundary.
inline double dirichlet_form(const ConductanceEnvironment& env, const std::vector<double>& f,
                             Boundary boundary = Boundary::Absorbing) {
  std::vector<double> terms;
  terms.reserve(env.box.num_edges() + 2 * env.box.num_vertices());
  for (Index e = 0; e < env.box.num_edges(); ++e) {
    const auto [p, q] = env.box.edge_endpoints(e);
    terms.push_back(env.a[e] * (f[q] - f[p]) * (f[q] - f[p]));
  }
  for (Index v = 0; v < env.box.num_vertices(); ++v) {
    if (boundary == Boundary::Absorbing) terms.push_back(env.exit[v] * f[v] * f[v]);
    terms.push_back(env.h * env.kappa[v] * f[v] * f[v]);
  }
  return stable_sum(terms);
}

// --------------------------------------------------------------------------
// Green function

struct GreenColumn {
  Index y = 0;
  std::vector<double> g;
  double residual = 0.0;
  int iterations = 0;
  Boundary boundary = Boundary::Absorbing;
  double min_value = 0.0;
};

/// g(·, y) = ∫_0^∞ P_·[X_t = y, t < ζ] dt / θ(y), i.e. the solution of
/// -L g = δ_y with the unweighted generator; symmetric in (x, y).
inline GreenColumn solve_green(const ConductanceEnvironment& env, Index y, Boundary boundary = Boundary::Absorbing,
                               CgOptions opt = {}) {
  env.validate();
  if (y < 0 || y >= env.box.num_vertices()) throw std::out_of_range("solve_green: vertex outside box");
  if (boundary == Boundary::Free && !(env.h > 0.0))
    throw std::invalid_argument("solve_green: h = 0 with a free boundary gives a singular system");
  const auto op = rcm_operator(env, boundary);
  std::vector<double> b(env.box.num_vertices(), 0.0);
  b[y] = 1.0;
  GreenColumn col;
  col.y = y;
  col.boundary = boundary;
  const auto st = conjugate_gradient(op, b, col.g, opt);
  col.residual = st.relative_residual;
  col.iterations = st.iterations;
  col.min_value = *std::min_element(col.g.begin(), col.g.end());
  return col;
}

// --------------------------------------------------------------------------
// Intrinsic metrics

/// Edge weight (1 ∧ (m(x) ∧ m(y)) / a)^{1/2}; +inf on a = 0.
inline DistanceMap speed_metric(const ConductanceEnvironment& env, const std::vector<double>& m,
                                std::vector<Index> sources, Metric tag) {
  DistanceMap out;
  out.box = env.box;
  out.sources = std::move(sources);
  out.metric = tag;
  out.distance = lattice_dijkstra(
      env.box, out.sources,
      [&](Index e, Index) {
        const double ae = env.a[e];
        if (!(ae > 0.0)) return kInfinity;
        const auto [p, q] = env.box.edge_endpoints(e);
        return std::sqrt(std::min(1.0, std::min(m[p], m[q]) / ae));
      },
      [](Index) { return 0.0; });
  return out;
}

inline DistanceMap theta_metric(const ConductanceEnvironment& env, std::vector<Index> sources) {
  return speed_metric(env, env.theta, std::move(sources), Metric::Theta);
}

inline DistanceMap kappa_metric(const ConductanceEnvironment& env, std::vector<Index> sources) {
  return speed_metric(env, env.kappa, std::move(sources), Metric::Kappa);
}

/// ρ: graph distance through edges with a > 0.
inline DistanceMap chemical_metric(const ConductanceEnvironment& env, std::vector<Index> sources) {
  std::vector<std::uint8_t> open(env.a.size());
  for (std::size_t e = 0; e < env.a.size(); ++e) open[e] = env.a[e] > 0.0;
  return chemical_distances(env.box, open, std::move(sources));
}

// --------------------------------------------------------------------------
// Moments

struct MomentReport {
  double p = 1, q = 1, r = 1;  // declared exponents
  double mu_over_theta_p = 0.0;   // mean of (μ/θ)^p
  double nu_q = 0.0;              // mean of ν^q
  double theta_r = 0.0;           // mean of θ^r
  double inv_theta_q = 0.0;       // mean of θ^{-q}
  double condition_lhs = 0.0;     // 1/r + (1/p)(r-1)/r + 1/q
  double condition_rhs = 0.0;     // 2/d
  bool condition_holds = false;
  bool all_finite = true;
};

inline MomentReport moment_diagnostics(const ConductanceEnvironment& env, double p, double q, double r) {
  if (!(p > 0 && q > 0 && r > 0)) throw std::invalid_argument("moment_diagnostics: exponents must be > 0");
  MomentReport m;
  m.p = p;
  m.q = q;
  m.r = r;
  const Index n = env.box.num_vertices();
  std::vector<double> t1(n), t2(n), t3(n), t4(n);
  for (Index x = 0; x < n; ++x) {
    t1[x] = std::pow(env.mu(x) / env.theta[x], p);
    t2[x] = std::pow(env.nu(x), q);
    t3[x] = std::pow(env.theta[x], r);
    t4[x] = std::pow(env.theta[x], -q);
  }
  m.mu_over_theta_p = stable_sum(t1) / double(n);
  m.nu_q = stable_sum(t2) / double(n);
  m.theta_r = stable_sum(t3) / double(n);
  m.inv_theta_q = stable_sum(t4) / double(n);
  m.all_finite = std::isfinite(m.mu_over_theta_p) && std::isfinite(m.nu_q) && std::isfinite(m.theta_r) &&
                 std::isfinite(m.inv_theta_q);
  m.condition_lhs = 1.0 / r + (1.0 / p) * (r - 1.0) / r + 1.0 / q;
  m.condition_rhs = 2.0 / env.box.dim();
  m.condition_holds = m.condition_lhs < m.condition_rhs;
  return m;
}

// --------------------------------------------------------------------------
// Killed random walk

enum class WalkEnd { Horizon, Killed, Exited, Frozen };

inline const char* to_string(WalkEnd e) {
  switch (e) {
    case WalkEnd::Horizon: return "horizon";
    case WalkEnd::Killed: return "killed";
    case WalkEnd::Exited: return "exited";
    case WalkEnd::Frozen: return "frozen";
  }
  return "?";
}

struct Trajectory {
  std::vector<double> times;  // jump-in time of each visited vertex, times[0] = 0
  std::vector<Index> vertices;
  WalkEnd end = WalkEnd::Horizon;
  double end_time = 0.0;
};

namespace detail {

/// One step from x: holding time and the next state. Returns kNoIndex for
/// exit/kill (reported through `end`).
inline Index walk_step(const ConductanceEnvironment& env, Index x, RandomSource& rng, double& hold, WalkEnd& end,
                       Boundary boundary) {
  double inner = 0.0;
  env.box.for_each_neighbor(x, [&](Index, Index e) { inner += env.a[e]; });
  const double out = boundary == Boundary::Absorbing ? env.exit[x] : 0.0;
  const double kill = env.h * env.kappa[x];
  const double total = inner + out + kill;
  if (!(total > 0.0)) {
    end = WalkEnd::Frozen;
    hold = kInfinity;
    return kNoIndex;
  }
  hold = rng.exponential(total / env.theta[x]);
  double pick = rng.uniform() * total;
  Index next = kNoIndex;
  env.box.for_each_neighbor(x, [&](Index w, Index e) {
    if (next != kNoIndex) return;
    if (pick < env.a[e]) next = w;
    else pick -= env.a[e];
  });
  if (next != kNoIndex) return next;
  end = pick < out ? WalkEnd::Exited : WalkEnd::Killed;
  if (end == WalkEnd::Killed && !(kill > 0.0)) end = WalkEnd::Exited;  // rounding at the top of the range
  return kNoIndex;
}

}  // namespace detail

/// Continuous-time walk up to time T (may be +inf).
inline Trajectory simulate_killed_walk(const ConductanceEnvironment& env, Index x, double T, const RngStream& stream,
                                       Boundary boundary = Boundary::Absorbing) {
  if (x < 0 || x >= env.box.num_vertices()) throw std::out_of_range("simulate_killed_walk: start outside box");
  if (!(T >= 0.0)) throw std::invalid_argument("simulate_killed_walk: horizon must be >= 0");
  RandomSource rng(stream);
  Trajectory tr;
  tr.times.push_back(0.0);
  tr.vertices.push_back(x);
  double t = 0.0;
  while (true) {
    double hold = 0.0;
    WalkEnd end = WalkEnd::Horizon;
    const Index next = detail::walk_step(env, x, rng, hold, end, boundary);
    if (t + hold >= T) {
      tr.end = end == WalkEnd::Frozen ? WalkEnd::Frozen : WalkEnd::Horizon;
      tr.end_time = T;
      return tr;
    }
    t += hold;
    if (next == kNoIndex) {
      tr.end = end;
      tr.end_time = t;
      return tr;
    }
    x = next;
    tr.times.push_back(t);
    tr.vertices.push_back(x);
  }
}

struct GreenEstimate {
  std::vector<double> mean;  // per target vertex
  std::vector<double> std_error;
  std::int64_t walks = 0;
  std::int64_t frozen = 0;
};

/// Occupation-time estimator of g(x, ·): per walk, time spent at y divided by θ(y).
inline GreenEstimate green_monte_carlo(const ConductanceEnvironment& env, Index x, std::int64_t walks,
                                       const RngStream& stream, Boundary boundary = Boundary::Absorbing) {
  env.validate();
  if (walks < 2) throw std::invalid_argument("green_monte_carlo: need >= 2 walks");
  if (boundary == Boundary::Free && !(env.h > 0.0))
    throw std::invalid_argument("green_monte_carlo: h = 0 with a free boundary never terminates");
  const Index n = env.box.num_vertices();
  std::vector<double> sum(n, 0.0), sum2(n, 0.0), occ(n, 0.0);
  std::vector<Index> touched;
  GreenEstimate est;
  est.walks = walks;
  for (std::int64_t w = 0; w < walks; ++w) {
    RandomSource rng(stream.with_replica(static_cast<std::uint64_t>(w)));
    Index v = x;
    while (true) {
      double hold = 0.0;
      WalkEnd end = WalkEnd::Horizon;
      const Index next = detail::walk_step(env, v, rng, hold, end, boundary);
      if (end == WalkEnd::Frozen) {
        ++est.frozen;
        break;
      }
      if (occ[v] == 0.0) touched.push_back(v);
      occ[v] += hold;
      if (next == kNoIndex) break;
      v = next;
    }
    for (Index y : touched) {
      const double g = occ[y] / env.theta[y];
      sum[y] += g;
      sum2[y] += g * g;
      occ[y] = 0.0;
    }
    touched.clear();
  }
  if (est.frozen > 0) throw std::runtime_error("green_monte_carlo: walker frozen at a vertex with zero total rate");
  est.mean.resize(n);
  est.std_error.resize(n);
  const double N = double(walks);
  for (Index y = 0; y < n; ++y) {
    est.mean[y] = sum[y] / N;
    const double var = std::max(0.0, (sum2[y] - N * est.mean[y] * est.mean[y]) / (N - 1.0));
    est.std_error[y] = std::sqrt(var / N);
  }
  return est;
}

}  // namespace fpplab
