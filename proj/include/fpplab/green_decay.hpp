#pragma once

// Exponential and polynomial decay of the killed Green function.

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "fpplab/lattice.hpp"
#include "fpplab/parallel.hpp"
#include "fpplab/rcm.hpp"
#include "fpplab/stats.hpp"

namespace fpplab {

struct VertexPair {
  Index x = 0, y = 0;
};

struct GreenDecayFit {
  double h = 0.0;
  double c_hat = 0.0;   // rate in log g + (d-2) log r ≈ const - c r
  double stderr_ = 0.0;
  double ratio_to_sqrt_h = 0.0;
  double loglog_slope = 0.0;  // slope of log g vs log r
  double loglog_se = 0.0;
  std::size_t pairs_used = 0;
  std::size_t environments = 0;
};

struct GreenDecayOptions {
  double r_min = 8.0;  // pairs closer than this are excluded
  double r_max = kInfinity;
  CgOptions cg{1e-14, 200000};
  int workers = 1;
};

/// log g(x,y) per pair, one CG solve per distinct y.
inline std::vector<double> pair_log_green(const ConductanceEnvironment& env, const std::vector<VertexPair>& pairs,
                                          const CgOptions& cg) {
  std::map<Index, std::vector<std::size_t>> by_y;
  for (std::size_t i = 0; i < pairs.size(); ++i) by_y[pairs[i].y].push_back(i);
  std::vector<double> out(pairs.size());
  for (const auto& [y, idx] : by_y) {
    const auto col = solve_green(env, y, Boundary::Absorbing, cg);
    for (auto i : idx) {
      const double g = col.g[pairs[i].x];
      if (!(g > 0.0)) throw std::runtime_error("fit_green_decay: non-positive Green value; tighten the solver");
      out[i] = std::log(g);
    }
  }
  return out;
}

/**
 * For each h, fits log g(x,y) + (d-2) log r = const - ĉ r over the pairs with
 * r_min <= r <= r_max (r Euclidean), and log g vs log r. With several
 * environments ĉ is averaged and its standard error taken across them.
 */
inline std::vector<GreenDecayFit> fit_green_decay(const std::vector<ConductanceEnvironment>& envs,
                                                  const std::vector<double>& h_grid,
                                                  const std::vector<VertexPair>& pairs,
                                                  const GreenDecayOptions& opt = {}) {
  if (envs.empty()) throw std::invalid_argument("fit_green_decay: no environment");
  if (h_grid.empty()) throw std::invalid_argument("fit_green_decay: empty h grid");
  const LatticeBox& box = envs.front().box;
  const int d = box.dim();
  std::vector<VertexPair> used;
  std::vector<double> r;
  for (const auto& p : pairs) {
    const double dist = euclidean_distance(box.coords(p.x), box.coords(p.y));
    if (dist >= opt.r_min && dist <= opt.r_max) {
      used.push_back(p);
      r.push_back(dist);
    }
  }
  std::vector<double> levels(r);
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  if (levels.size() < 3) throw std::invalid_argument("fit_green_decay: fewer than 3 distance levels");
  std::vector<double> logr(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) logr[i] = std::log(r[i]);

  const std::size_t H = h_grid.size(), E = envs.size();
  std::vector<LinearFit> rate(H * E), poly(H * E);
  parallel_for(static_cast<std::int64_t>(H * E), opt.workers, [&](std::int64_t k) {
    const std::size_t hi = k / E, ei = k % E;
    const auto env = envs[ei].with_h(h_grid[hi]);
    const auto lg = pair_log_green(env, used, opt.cg);
    std::vector<double> y(lg.size());
    for (std::size_t i = 0; i < lg.size(); ++i) y[i] = lg[i] + (d - 2) * logr[i];
    rate[k] = least_squares(r, y);
    poly[k] = least_squares(logr, lg);
  });
  std::vector<GreenDecayFit> out;
  for (std::size_t hi = 0; hi < H; ++hi) {
    GreenDecayFit f;
    f.h = h_grid[hi];
    f.pairs_used = used.size();
    f.environments = E;
    std::vector<double> c(E), s(E);
    for (std::size_t ei = 0; ei < E; ++ei) {
      c[ei] = -rate[hi * E + ei].slope;
      s[ei] = poly[hi * E + ei].slope;
    }
    const auto cs = summarize(c), ss = summarize(s);
    f.c_hat = cs.mean;
    f.loglog_slope = ss.mean;
    if (E > 1) {
      f.stderr_ = cs.std_error();
      f.loglog_se = ss.std_error();
    } else {
      f.stderr_ = rate[hi * E].slope_se;
      f.loglog_se = poly[hi * E].slope_se;
    }
    f.ratio_to_sqrt_h = f.h > 0.0 ? f.c_hat / std::sqrt(f.h) : kInfinity;
    out.push_back(f);
  }
  return out;
}

/// Pairs (c - ⌊r/2⌋ e_axis, c + ⌈r/2⌉ e_axis) around the box center, r in `distances`.
inline std::vector<VertexPair> centered_axis_pairs(const LatticeBox& box, const std::vector<std::int64_t>& distances,
                                                   int axis = 0) {
  std::vector<VertexPair> out;
  const Coord c = box.coords(box.center());
  for (auto r : distances) {
    Coord a = c, b = c;
    a[axis] -= r / 2;
    b[axis] += r - r / 2;
    out.push_back({box.index_checked(a), box.index_checked(b)});
  }
  return out;
}

/// Pairs (s, s + r e_axis) from a fixed source.
inline std::vector<VertexPair> ray_pairs(const LatticeBox& box, Index source, const std::vector<std::int64_t>& distances,
                                         int axis = 0) {
  std::vector<VertexPair> out;
  const Coord s = box.coords(source);
  for (auto r : distances) {
    Coord b = s;
    b[axis] += r;
    out.push_back({box.index_checked(b), source});
  }
  return out;
}

/// Decay rate ω of the massive lattice Green function along an axis:
/// cosh ω = 1 + m/2 for the operator -Δ + m, m = hκ.
inline double axis_mass_rate(double m) { return std::acosh(1.0 + m / 2.0); }

/// The same rate measured on a 1D segment by a direct tridiagonal solve of
/// (2 + m) g(i) - g(i-1) - g(i+1) = δ_{i, source}, fitted over [r0, r1].
inline double segment_mass_rate(double m, std::int64_t length, std::int64_t r0, std::int64_t r1) {
  if (!(m > 0.0) || length < 3 || !(r0 < r1)) throw std::invalid_argument("segment_mass_rate: bad arguments");
  const std::int64_t s = length / 2;
  if (s + r1 >= length) throw std::invalid_argument("segment_mass_rate: fit window leaves the segment");
  // Thomas algorithm; sub- and super-diagonal are -1.
  std::vector<double> cp(length), dp(length), g(length);
  const double diag = 2.0 + m;
  for (std::int64_t i = 0; i < length; ++i) {
    const double rhs = i == s ? 1.0 : 0.0;
    const double den = i > 0 ? diag + cp[i - 1] : diag;
    cp[i] = -1.0 / den;
    dp[i] = (rhs + (i > 0 ? dp[i - 1] : 0.0)) / den;
  }
  g[length - 1] = dp[length - 1];
  for (std::int64_t i = length - 2; i >= 0; --i) g[i] = dp[i] - cp[i] * g[i + 1];
  std::vector<double> x, y;
  for (std::int64_t r = r0; r <= r1; ++r) {
    x.push_back(double(r));
    y.push_back(std::log(g[s + r]));
  }
  return -least_squares(x, y).slope;
}

}  // namespace fpplab
