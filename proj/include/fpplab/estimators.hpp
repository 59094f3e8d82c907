#pragma once

// Monte Carlo estimators built on fpp_distances: time constant, growth
// exponent, tail curves and limit-shape diagnostics.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "fpplab/field.hpp"
#include "fpplab/fpp.hpp"
#include "fpplab/gff.hpp"
#include "fpplab/interlacements.hpp"
#include "fpplab/lattice.hpp"
#include "fpplab/parallel.hpp"
#include "fpplab/stats.hpp"
#include "fpplab/weights.hpp"

namespace fpplab {

/**
 * A random environment turned into passage times. One call draws one
 * environment realization and returns one weight map per variant (e.g. several
 * levels on the same field), so variants are always coupled.
 */
struct WeightModel {
  std::string name;
  json description = json::object();
  std::size_t variants = 1;
  std::function<std::vector<PassageWeights>(const LatticeBox&, const RngStream&)> sample;
};

inline WeightModel iid_model(IidLaw l, WeightMode mode) {
  validate_law(l);
  WeightModel m;
  m.name = "iid";
  m.description = law_to_json(l);
  m.description["mode"] = to_string(mode);
  m.sample = [l, mode](const LatticeBox& box, const RngStream& s) {
    return std::vector<PassageWeights>{sample_iid_weights(box, l, mode, s)};
  };
  return m;
}

inline WeightModel constant_model(double c, WeightMode mode) { return iid_model(law::Constant{c}, mode); }

struct LevelVariant {
  FieldFunctional f;
  double shift = 0.0;
};

inline json variants_to_json(const std::vector<LevelVariant>& vs) {
  json a = json::array();
  for (const auto& v : vs) {
    json j = functional_to_json(v.f);
    j["shift"] = v.shift;
    a.push_back(j);
  }
  return a;
}

/// Dirichlet GFF on the estimation box; every variant reads the same field.
inline WeightModel gff_model(std::vector<LevelVariant> vs, WeightMode mode) {
  if (vs.empty()) throw std::invalid_argument("gff_model: no variants");
  for (const auto& v : vs) validate_functional(v.f);
  WeightModel m;
  m.name = "gff";
  m.description = {{"variants", variants_to_json(vs)}, {"mode", to_string(mode)}};
  m.variants = vs.size();
  m.sample = [vs, mode](const LatticeBox& box, const RngStream& s) {
    const ScalarField phi = DirichletGffSampler(box).sample(s);
    std::vector<PassageWeights> out;
    for (const auto& v : vs) out.push_back(weights_from_field(phi, v.f, v.shift, mode));
    return out;
  };
  return m;
}

/// Interlacement occupation times L_{x,u} through decreasing functionals.
inline WeightModel interlacement_model(double u, std::int64_t ambient_margin, std::vector<LevelVariant> vs,
                                       WeightMode mode) {
  if (vs.empty()) throw std::invalid_argument("interlacement_model: no variants");
  for (const auto& v : vs) validate_functional(v.f);
  struct Cache {
    std::mutex m;
    std::unique_ptr<InterlacementSampler> sampler;
  };
  auto cache = std::make_shared<Cache>();
  WeightModel m;
  m.name = "interlacement";
  m.description = {{"u", u}, {"ambient_margin", ambient_margin}, {"variants", variants_to_json(vs)},
                   {"mode", to_string(mode)}};
  m.variants = vs.size();
  m.sample = [=](const LatticeBox& box, const RngStream& s) {
    const InterlacementSampler* sampler = nullptr;
    {
      std::lock_guard lock(cache->m);
      if (!cache->sampler || !(cache->sampler->target() == box))
        cache->sampler = std::make_unique<InterlacementSampler>(box, ambient_margin);
      sampler = cache->sampler.get();
    }
    const ScalarField occ = sampler->sample(u, s);
    std::vector<PassageWeights> out;
    for (const auto& v : vs) out.push_back(weights_from_field(occ, v.f, v.shift, mode));
    return out;
  };
  return m;
}

// --------------------------------------------------------------------------
// Time constant

struct LevelStats {
  std::int64_t n = 0;
  double mean = 0.0;      // of d(0, n x) / n
  double variance = 0.0;
  double ci_low = 0.0, ci_high = 0.0;
  std::int64_t replicas = 0;
  std::int64_t infinite = 0;  // replicas where n x was unreachable
};

struct TimeConstantEstimate {
  std::vector<std::int64_t> direction;
  std::vector<LevelStats> levels;
  double mu_hat = 0.0;
  double mu_ci_low = 0.0, mu_ci_high = 0.0;
  bool censored = false;          // largest level unreachable in every replica
  bool subadditive_trend = true;  // means non-increasing along doubling levels (within CI)
  std::int64_t padding = 0;
  std::vector<std::int64_t> box_sides;
};

struct EstimatorOptions {
  std::int64_t padding = -1;             // < 0: ceil(n_max / 4)
  std::vector<std::int64_t> box_sides;   // optional; the segment is then centered in this box
  double level = 0.95;
  int workers = 1;
};

struct TimeConstantRun {
  std::vector<TimeConstantEstimate> per_variant;
  // distance[r][v][i] = d(0, n_i x) for replica r, variant v
  std::vector<std::vector<std::vector<double>>> distance;
  LatticeBox box;
};

/// Box holding the segment [0, n_max x]. Without explicit sides it leaves
/// `pad` vertices of margin on every side; with them the segment is centered
/// and the margin must still be at least `pad`.
inline LatticeBox segment_box(const std::vector<std::int64_t>& dir, std::int64_t n_max, std::int64_t pad,
                              const std::vector<std::int64_t>& sides_in = {}) {
  const int d = static_cast<int>(dir.size());
  if (!sides_in.empty() && static_cast<int>(sides_in.size()) != d)
    throw std::invalid_argument("segment_box: box sides do not match the direction's dimension");
  std::vector<std::int64_t> sides(d), off(d);
  for (int a = 0; a < d; ++a) {
    const std::int64_t lo = std::min<std::int64_t>(0, n_max * dir[a]);
    const std::int64_t hi = std::max<std::int64_t>(0, n_max * dir[a]);
    if (sides_in.empty()) {
      off[a] = lo - pad;
      sides[a] = hi - lo + 2 * pad + 1;
      continue;
    }
    sides[a] = sides_in[a];
    const std::int64_t slack = sides[a] - (hi - lo + 1);
    off[a] = lo - slack / 2;
    if (slack / 2 < pad || slack - slack / 2 < pad)
      throw std::invalid_argument("segment_box: box too small for the largest level with padding " +
                                  std::to_string(pad));
  }
  return LatticeBox::build(d, sides, off);
}

inline void check_levels(const std::vector<std::int64_t>& n_levels) {
  if (n_levels.empty()) throw std::invalid_argument("estimator: empty level list");
  for (std::size_t i = 0; i < n_levels.size(); ++i) {
    if (n_levels[i] < 1) throw std::invalid_argument("estimator: levels must be >= 1");
    if (i > 0 && n_levels[i] <= n_levels[i - 1]) throw std::invalid_argument("estimator: levels must increase");
  }
}

inline std::int64_t default_padding(std::int64_t n_max) { return (n_max + 3) / 4; }

inline TimeConstantRun estimate_time_constant(const WeightModel& model, const std::vector<std::int64_t>& direction,
                                              const std::vector<std::int64_t>& n_levels, std::int64_t replicas,
                                              const RngStream& stream, const EstimatorOptions& opt = {}) {
  check_levels(n_levels);
  if (direction.empty() || std::all_of(direction.begin(), direction.end(), [](auto c) { return c == 0; }))
    throw std::invalid_argument("estimate_time_constant: direction must be non-zero");
  if (replicas < 1) throw std::invalid_argument("estimate_time_constant: need >= 1 replica");
  const std::int64_t n_max = n_levels.back();
  const std::int64_t pad = opt.padding < 0 ? default_padding(n_max) : opt.padding;
  if (4 * pad < n_max) throw std::invalid_argument("estimate_time_constant: padding must be at least n_max/4");
  TimeConstantRun run;
  run.box = segment_box(direction, n_max, pad, opt.box_sides);
  const LatticeBox& box = run.box;
  const int d = box.dim();
  const Index origin = box.index_checked(Coord(d, 0));
  std::vector<Index> targets;
  for (auto n : n_levels) {
    Coord x(d);
    for (int a = 0; a < d; ++a) x[a] = n * direction[a];
    targets.push_back(box.index_checked(x));
  }
  const std::size_t V = model.variants;
  run.distance.assign(replicas, std::vector<std::vector<double>>(V, std::vector<double>(n_levels.size())));
  parallel_for(replicas, opt.workers, [&](std::int64_t r) {
    const auto ws = model.sample(box, stream.with_replica(static_cast<std::uint64_t>(r)));
    if (ws.size() != V) throw std::logic_error("weight model returned the wrong number of variants");
    for (std::size_t v = 0; v < V; ++v) {
      const auto dm = fpp_distances(ws[v], {origin});
      for (std::size_t i = 0; i < targets.size(); ++i) run.distance[r][v][i] = dm.distance[targets[i]];
    }
  });
  const double z = z_value(opt.level);
  for (std::size_t v = 0; v < V; ++v) {
    TimeConstantEstimate est;
    est.direction = direction;
    est.padding = pad;
    est.box_sides = box.sides();
    for (std::size_t i = 0; i < n_levels.size(); ++i) {
      LevelStats ls;
      ls.n = n_levels[i];
      ls.replicas = replicas;
      std::vector<double> x;
      for (std::int64_t r = 0; r < replicas; ++r) {
        const double dist = run.distance[r][v][i];
        if (std::isinf(dist)) ++ls.infinite;
        x.push_back(dist / double(ls.n));
      }
      if (ls.infinite > 0) {
        ls.mean = ls.ci_low = ls.ci_high = kInfinity;
        ls.variance = std::numeric_limits<double>::quiet_NaN();
      } else {
        const auto s = summarize(x);
        ls.mean = s.mean;
        ls.variance = s.variance;
        const double hw = replicas >= 2 ? z * s.std_error() : kInfinity;
        ls.ci_low = s.mean - hw;
        ls.ci_high = s.mean + hw;
      }
      est.levels.push_back(ls);
    }
    const auto& last = est.levels.back();
    est.mu_hat = last.mean;
    est.mu_ci_low = last.ci_low;
    est.mu_ci_high = last.ci_high;
    est.censored = last.infinite == replicas;
    for (std::size_t i = 0; i < n_levels.size(); ++i)
      for (std::size_t j = i + 1; j < n_levels.size(); ++j) {
        if (n_levels[j] != 2 * n_levels[i]) continue;
        const auto& a = est.levels[i];
        const auto& b = est.levels[j];
        if (std::isinf(a.mean) || std::isinf(b.mean)) continue;
        if (b.mean > a.mean + (a.ci_high - a.mean) + (b.ci_high - b.mean)) est.subadditive_trend = false;
      }
    run.per_variant.push_back(std::move(est));
  }
  return run;
}

/// Pointwise check d(0, 2n x) <= d(0, n x) + d(n x, 2n x) on one weight map.
inline bool subadditive_on(const PassageWeights& w, const std::vector<std::int64_t>& direction, std::int64_t n,
                           Coord origin) {
  const int d = w.box.dim();
  Coord mid(origin), far(origin);
  for (int a = 0; a < d; ++a) {
    mid[a] += n * direction[a];
    far[a] += 2 * n * direction[a];
  }
  const Index o = w.box.index_checked(origin), m = w.box.index_checked(mid), f = w.box.index_checked(far);
  const auto d0 = fpp_distances(w, {o});
  const auto dm = fpp_distances(w, {m});
  // In vertex mode the shared midpoint is charged on both sides.
  return d0.distance[f] <= d0.distance[m] + dm.distance[f] + 1e-9 * (1.0 + d0.distance[f]);
}

// --------------------------------------------------------------------------
// Growth exponent and tail curves

struct GrowthExponentReport {
  std::vector<std::int64_t> levels;
  std::vector<double> mean_distance;
  double slope = 0.0, slope_se = 0.0;
  double ci_low = 0.0, ci_high = 0.0;
  double lower_bound = 0.0;  // 1 - (d-1)/q
  bool consistent = true;    // slope >= lower_bound - tolerance
};


inline GrowthExponentReport growth_exponent(const WeightModel& model, const std::vector<std::int64_t>& direction,
                                            const std::vector<std::int64_t>& n_levels, std::int64_t replicas,
                                            const RngStream& stream, double q, double tolerance = 0.05,
                                            const EstimatorOptions& opt = {}) {
  if (n_levels.size() < 3) throw std::invalid_argument("growth_exponent: need at least 3 levels");
  if (!(q > 0.0)) throw std::invalid_argument("growth_exponent: q must be > 0");
  const auto run = estimate_time_constant(model, direction, n_levels, replicas, stream, opt);
  GrowthExponentReport rep;
  rep.levels = n_levels;
  std::vector<double> lx, ly;
  for (const auto& ls : run.per_variant.front().levels) {
    const double m = ls.mean * double(ls.n);
    rep.mean_distance.push_back(m);
    if (!(m > 0.0) || std::isinf(m)) throw std::runtime_error("growth_exponent: mean distance is zero or infinite");
    lx.push_back(std::log(double(ls.n)));
    ly.push_back(std::log(m));
  }
  const auto fit = least_squares(lx, ly);
  const double z = z_value(opt.level);
  rep.slope = fit.slope;
  rep.slope_se = fit.slope_se;
  rep.ci_low = fit.slope - z * fit.slope_se;
  rep.ci_high = fit.slope + z * fit.slope_se;
  rep.lower_bound = 1.0 - double(direction.size() - 1) / q;
  rep.consistent = rep.slope >= rep.lower_bound - tolerance;
  return rep;
}

struct TailPoint {
  std::int64_t n = 0;
  std::size_t hits = 0, replicas = 0;
  ProportionInterval p;
};

/// Empirical P(d(0, n x) <= C n) per level, with Wilson intervals.
inline std::vector<TailPoint> tail_probability_curve(const WeightModel& model,
                                                     const std::vector<std::int64_t>& direction, double C,
                                                     const std::vector<std::int64_t>& n_levels,
                                                     std::int64_t replicas, const RngStream& stream,
                                                     const EstimatorOptions& opt = {}) {
  if (!(C > 0.0)) throw std::invalid_argument("tail_probability_curve: C must be > 0");
  const auto run = estimate_time_constant(model, direction, n_levels, replicas, stream, opt);
  std::vector<TailPoint> out;
  for (std::size_t i = 0; i < n_levels.size(); ++i) {
    TailPoint tp;
    tp.n = n_levels[i];
    tp.replicas = static_cast<std::size_t>(replicas);
    for (std::int64_t r = 0; r < replicas; ++r)
      if (run.distance[r][0][i] <= C * double(tp.n)) ++tp.hits;
    tp.p = wilson_interval(tp.hits, tp.replicas, opt.level);
    out.push_back(tp);
  }
  return out;
}

// --------------------------------------------------------------------------
// Limit shape

namespace detail {

/// Directions for support-function probing: an even spread on the circle or
/// sphere, and ±axes plus ±diagonals in other dimensions.
inline std::vector<std::vector<double>> probe_directions(int d, int count) {
  std::vector<std::vector<double>> out;
  if (d == 2) {
    for (int i = 0; i < count; ++i) {
      const double a = 2.0 * std::numbers::pi * i / count;
      out.push_back({std::cos(a), std::sin(a)});
    }
  } else if (d == 3) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
      const double y = 1.0 - 2.0 * (i + 0.5) / count;
      const double r = std::sqrt(1.0 - y * y);
      out.push_back({r * std::cos(golden * i), y, r * std::sin(golden * i)});
    }
  } else {
    for (int a = 0; a < d; ++a)
      for (int s : {-1, 1}) {
        std::vector<double> u(d, 0.0);
        u[a] = s;
        out.push_back(u);
      }
    for (int mask = 0; mask < (1 << std::min(d, 10)); ++mask) {
      std::vector<double> u(d);
      for (int a = 0; a < d; ++a) u[a] = (mask >> a & 1) ? 1.0 : -1.0;
      out.push_back(u);
    }
  }
  return out;
}

}  // namespace detail

/**
 * Hausdorff distance between {z / s : z ∈ A} and {z / t : z ∈ B}, A and B
 * given as sets of box vertices with coordinates relative to `origin`.
 * Exact: nearest points of B are found by scanning ℓ∞ shells on the lattice.
 */
inline double normalized_hausdorff(const LatticeBox& box, Index origin, const std::vector<Index>& A, double s,
                                   const std::vector<Index>& B, double t) {
  if (A.empty() || B.empty()) throw std::invalid_argument("normalized_hausdorff: empty set");
  const int d = box.dim();
  const Coord o = box.coords(origin);
  auto directed = [&](const std::vector<Index>& P, double sp, const std::vector<Index>& Q, double sq) {
    std::vector<std::uint8_t> inQ(box.num_vertices(), 0);
    for (Index v : Q) inQ[v] = 1;
    std::int64_t max_r = 0;
    for (int a = 0; a < d; ++a) max_r = std::max<std::int64_t>(max_r, box.sides()[a]);
    double worst = 0.0;
    std::vector<double> p(d);
    Coord c(d), y(d);
    for (Index v : P) {
      const Coord x = box.coords(v);
      // p in Q's lattice units
      for (int a = 0; a < d; ++a) {
        p[a] = double(x[a] - o[a]) * sq / sp;
        c[a] = static_cast<std::int64_t>(std::llround(p[a]));
      }
      double best = kInfinity;
      for (std::int64_t r = 0; r <= max_r; ++r) {
        if (double(r) - 0.5 > best) break;
        // visit the shell ‖y - c‖∞ = r
        std::vector<std::int64_t> k(d, -r);
        while (true) {
          bool on_shell = false;
          for (int a = 0; a < d; ++a) on_shell |= (k[a] == -r || k[a] == r);
          if (on_shell) {
            for (int a = 0; a < d; ++a) y[a] = o[a] + c[a] + k[a];
            const Index w = box.index(y);
            if (w != kNoIndex && inQ[w]) {
              double dist2 = 0.0;
              for (int a = 0; a < d; ++a) {
                const double diff = double(c[a] + k[a]) - p[a];
                dist2 += diff * diff;
              }
              best = std::min(best, std::sqrt(dist2));
            }
          }
          int a = d - 1;
          while (a >= 0 && k[a] == r) k[a--] = -r;
          if (a < 0) break;
          ++k[a];
        }
      }
      worst = std::max(worst, best / sq);
    }
    return worst;
  };
  return std::max(directed(A, s, B, t), directed(B, t, A, s));
}

/// Fraction of midpoints of hull-vertex pairs lying outside the ball. Hull
/// vertices are maximizers of linear functionals over the ball (lexicographic
/// tie-break); midpoints are truncated toward the origin onto the lattice.
inline double convexity_defect(const DistanceMap& dm, Index origin, double t, int directions = 64) {
  const LatticeBox& box = dm.box;
  const int d = box.dim();
  const auto ball = shape_ball(dm, t);
  if (ball.empty()) throw std::invalid_argument("convexity_defect: empty ball");
  const Coord o = box.coords(origin);
  std::vector<Coord> hull;
  for (const auto& u : detail::probe_directions(d, directions)) {
    Coord best_x;
    double best = -kInfinity;
    for (Index v : ball) {
      Coord x = box.coords(v);
      for (int a = 0; a < d; ++a) x[a] -= o[a];
      double s = 0.0;
      for (int a = 0; a < d; ++a) s += u[a] * double(x[a]);
      if (s > best + 1e-12 || (std::abs(s - best) <= 1e-12 && x < best_x)) {
        best = s;
        best_x = x;
      }
    }
    hull.push_back(best_x);
  }
  std::sort(hull.begin(), hull.end());
  hull.erase(std::unique(hull.begin(), hull.end()), hull.end());
  std::size_t pairs = 0, outside = 0;
  Coord m(d);
  for (std::size_t i = 0; i < hull.size(); ++i)
    for (std::size_t j = i + 1; j < hull.size(); ++j) {
      ++pairs;
      for (int a = 0; a < d; ++a) {
        const std::int64_t s = hull[i][a] + hull[j][a];
        m[a] = o[a] + s / 2;  // integer division truncates toward zero
      }
      const Index w = box.index(m);
      if (w == kNoIndex || !(dm.distance[w] <= t)) ++outside;
    }
  return pairs == 0 ? 0.0 : double(outside) / double(pairs);
}

struct ShapeConvergenceReport {
  std::vector<double> t_levels;
  std::vector<double> hausdorff;        // mean over replicas, between levels i and i+1
  std::vector<double> hausdorff_se;
  double convexity_defect = 0.0;        // mean over replicas at the last level
  std::int64_t boundary_hits = 0;       // replica-levels whose ball touched the box boundary
  std::vector<std::int64_t> box_sides;
};

inline ShapeConvergenceReport shape_convergence(const WeightModel& model, const LatticeBox& box,
                                                const std::vector<double>& t_levels, std::int64_t replicas,
                                                const RngStream& stream, int workers = 1) {
  if (t_levels.size() < 2) throw std::invalid_argument("shape_convergence: need at least 2 t levels");
  for (std::size_t i = 0; i < t_levels.size(); ++i)
    if (!(t_levels[i] > 0.0) || (i > 0 && !(t_levels[i] > t_levels[i - 1])))
      throw std::invalid_argument("shape_convergence: t levels must be positive and increasing");
  if (replicas < 1) throw std::invalid_argument("shape_convergence: need >= 1 replica");
  const Index origin = box.center();
  const std::size_t gaps = t_levels.size() - 1;
  std::vector<std::vector<double>> gap(replicas, std::vector<double>(gaps));
  std::vector<double> defect(replicas);
  std::vector<std::int64_t> hits(replicas, 0);
  parallel_for(replicas, workers, [&](std::int64_t r) {
    const auto ws = model.sample(box, stream.with_replica(static_cast<std::uint64_t>(r)));
    const auto dm = fpp_distances(ws.front(), {origin});
    bool reachable = false;
    for (Index v = 0; v < box.num_vertices() && !reachable; ++v) reachable = v != origin && std::isfinite(dm[v]);
    if (!reachable) throw std::runtime_error("shape_convergence: degenerate ball (all distances infinite)");
    std::vector<std::vector<Index>> balls;
    for (double t : t_levels) {
      balls.push_back(shape_ball(dm, t));
      if (balls.back().empty()) throw std::runtime_error("shape_convergence: empty ball at t = " + std::to_string(t));
      for (Index v : balls.back())
        if (box.exterior_degree(v) > 0) {
          ++hits[r];
          break;
        }
    }
    for (std::size_t i = 0; i < gaps; ++i)
      gap[r][i] = normalized_hausdorff(box, origin, balls[i], t_levels[i], balls[i + 1], t_levels[i + 1]);
    defect[r] = convexity_defect(dm, origin, t_levels.back());
  });
  ShapeConvergenceReport rep;
  rep.t_levels = t_levels;
  rep.box_sides = box.sides();
  for (std::size_t i = 0; i < gaps; ++i) {
    std::vector<double> x(replicas);
    for (std::int64_t r = 0; r < replicas; ++r) x[r] = gap[r][i];
    const auto s = summarize(x);
    rep.hausdorff.push_back(s.mean);
    rep.hausdorff_se.push_back(s.std_error());
  }
  rep.convexity_defect = summarize(defect).mean;
  for (auto h : hits) rep.boundary_hits += h;
  return rep;
}

}  // namespace fpplab
