#pragma once

// Crossing curves for level sets, sprinkled decoupling checks and heat-kernel
// shape fits.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "fpplab/field.hpp"
#include "fpplab/gff.hpp"
#include "fpplab/heat_kernel.hpp"
#include "fpplab/lattice.hpp"
#include "fpplab/parallel.hpp"
#include "fpplab/stats.hpp"

namespace fpplab {

using FieldSampler = std::function<ScalarField(const LatticeBox&, const RngStream&)>;

inline FieldSampler gff_field_sampler() {
  return [](const LatticeBox& box, const RngStream& s) { return DirichletGffSampler(box).sample(s); };
}

/// Independent N(0, σ²) values; a decorrelated reference environment.
inline FieldSampler iid_normal_field_sampler(double sigma = 1.0) {
  return [sigma](const LatticeBox& box, const RngStream& s) {
    RandomSource rng(s);
    ScalarField f;
    f.box = box;
    f.values.resize(box.num_vertices());
    for (auto& v : f.values) v = sigma * rng.normal();
    f.provenance = {"iid-normal", s, {{"sigma", sigma}}};
    return f;
  };
}

// --------------------------------------------------------------------------
// Crossing curves

/// Smallest n >= min_side with n + 1 a product of 2, 3, 5 and 7, which keeps
/// the sine transform fast.
inline std::int64_t transform_friendly_side(std::int64_t min_side) {
  for (std::int64_t n = std::max<std::int64_t>(1, min_side);; ++n) {
    std::int64_t m = n + 1;
    for (int p : {2, 3, 5, 7})
      while (m % p == 0) m /= p;
    if (m == 1) return n;
  }
}

/**
 * Largest h such that Q_L ↔ Q_{2L}^c in {φ >= h}, both balls ℓ∞ around
 * `center`. Vertices of Q_{2L+1} are added in decreasing φ; the answer is the
 * value at which the two sets first share a cluster. The ball Q_{2L+1} must
 * fit inside the box.
 */
inline double critical_crossing_level(const ScalarField& field, Index center, std::int64_t L) {
  const LatticeBox& box = field.box;
  const int d = box.dim();
  const Coord c = box.coords(center);
  const std::int64_t R = 2 * L + 1;
  std::vector<std::int64_t> sides(d, 2 * R + 1), off(d);
  for (int a = 0; a < d; ++a) off[a] = c[a] - R;
  const LatticeBox sub = LatticeBox::build(d, sides, off);
  for (Index corner : {Index{0}, sub.num_vertices() - 1})
    if (!box.contains(sub.coords(corner)))
      throw std::invalid_argument("critical_crossing_level: Q_{2L+1} does not fit the sampling box");
  const Index n = sub.num_vertices();
  if (n > std::numeric_limits<std::uint32_t>::max()) throw std::length_error("critical_crossing_level: region too large");
  std::vector<double> val(n);
  std::vector<std::uint8_t> flag(n, 0);  // 1: in Q_L, 2: outside Q_{2L}
  {
    Coord x(d);
    std::vector<std::int64_t> k(d, 0);
    for (Index v = 0; v < n; ++v) {
      std::int64_t dist = 0;
      for (int a = 0; a < d; ++a) {
        x[a] = off[a] + k[a];
        dist = std::max<std::int64_t>(dist, std::abs(k[a] - R));
      }
      val[v] = field.values[box.index(x)];
      flag[v] = dist <= L ? 1 : (dist > 2 * L ? 2 : 0);
      for (int a = d - 1; a >= 0; --a) {
        if (++k[a] < sides[a]) break;
        k[a] = 0;
      }
    }
  }
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t p, std::uint32_t q) {
    return val[p] > val[q] || (val[p] == val[q] && p < q);
  });
  constexpr std::uint32_t kAbsent = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> parent(n, kAbsent);
  auto find = [&](std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (std::uint32_t v : order) {
    parent[v] = v;
    std::uint8_t f = flag[v];
    std::uint32_t root = v;
    for (int a = 0; a < d; ++a)
      for (int s : {-1, 1}) {
        const Index w = sub.neighbor(v, a, s);
        if (w == kNoIndex || parent[w] == kAbsent) continue;
        const std::uint32_t rw = find(static_cast<std::uint32_t>(w));
        if (rw == root) continue;
        f |= flag[rw];
        // the smaller root index survives, for determinism
        if (rw < root) {
          parent[root] = rw;
          root = rw;
        } else {
          parent[rw] = root;
        }
      }
    flag[root] = f;
    if (f == 3) return val[v];
  }
  return -kInfinity;
}

struct CrossingCurve {
  std::int64_t L = 0;
  std::vector<double> h;
  std::vector<double> probability;
  std::vector<ProportionInterval> ci;
  std::vector<double> critical_levels;  // per field
  double h_star = kInfinity;            // smallest grid h with probability < threshold
  double threshold = 0.05;
  std::int64_t sampling_side = 0;
};

struct CrossingOptions {
  double threshold = 0.05;
  double level = 0.95;
  std::int64_t sampling_side = 0;  // 0: smallest fast side >= 4 L_max + 3 + L_max / 4
  int workers = 1;
};

/// One field per replica on a cube large enough for the largest L; every L
/// uses the same field, centered.
inline std::vector<CrossingCurve> crossing_curve(const FieldSampler& sampler, int d,
                                                 const std::vector<std::int64_t>& L_grid,
                                                 const std::vector<double>& h_grid, std::int64_t replicas,
                                                 const RngStream& stream, const CrossingOptions& opt = {}) {
  if (L_grid.empty() || h_grid.empty()) throw std::invalid_argument("crossing_curve: empty grid");
  if (replicas < 1) throw std::invalid_argument("crossing_curve: need >= 1 replica");
  for (auto L : L_grid)
    if (L < 1) throw std::invalid_argument("crossing_curve: L must be >= 1");
  std::vector<double> hs(h_grid);
  std::sort(hs.begin(), hs.end());
  const std::int64_t L_max = *std::max_element(L_grid.begin(), L_grid.end());
  const std::int64_t need = 4 * L_max + 3;
  const std::int64_t side = opt.sampling_side > 0 ? opt.sampling_side : transform_friendly_side(need + L_max / 4);
  if (side < need) throw std::invalid_argument("crossing_curve: sampling side must be >= 4L + 3");
  const LatticeBox box = LatticeBox::cube(d, side);
  const Index center = box.center();
  std::vector<std::vector<double>> hc(L_grid.size(), std::vector<double>(replicas));
  parallel_for(replicas, opt.workers, [&](std::int64_t r) {
    const ScalarField phi = sampler(box, stream.with_replica(static_cast<std::uint64_t>(r)));
    for (std::size_t i = 0; i < L_grid.size(); ++i) hc[i][r] = critical_crossing_level(phi, center, L_grid[i]);
  });
  std::vector<CrossingCurve> out;
  for (std::size_t i = 0; i < L_grid.size(); ++i) {
    CrossingCurve cc;
    cc.L = L_grid[i];
    cc.h = hs;
    cc.threshold = opt.threshold;
    cc.sampling_side = side;
    cc.critical_levels = hc[i];
    for (double h : hs) {
      std::size_t k = 0;
      for (double v : hc[i]) k += v >= h;
      cc.probability.push_back(double(k) / double(replicas));
      cc.ci.push_back(wilson_interval(k, static_cast<std::size_t>(replicas), opt.level));
    }
    for (std::size_t j = 0; j < hs.size(); ++j)
      if (cc.probability[j] < opt.threshold) {
        cc.h_star = hs[j];
        break;
      }
    out.push_back(std::move(cc));
  }
  return out;
}

// --------------------------------------------------------------------------
// Sprinkled decoupling

/// Increasing [0,1]-valued functional of the shifted field on one box.
struct BoxFunctional {
  enum Kind { MinAbove, One } kind = MinAbove;
  double h = 0.0;  // MinAbove: 1{min_box(φ + u) >= h}
};

struct CorrelationReport {
  std::int64_t L = 0, separation = 0;
  double u = 0.0, u_hat = 0.0, tolerance = 0.0;
  double e_hat_f1f2 = 0.0, e_u_f1 = 0.0, e_u_f2 = 0.0;
  double slack = 0.0;  // E^u[f1] E^u[f2] + tolerance - E^û[f1 f2]
  double slack_se = 0.0;
  double slack_low = 0.0, slack_high = 0.0;
  bool holds = true;  // not violated at the configured confidence
  bool paired = true;
  std::int64_t replicas = 0;
};

struct DecouplingOptions {
  double tolerance = 0.0;
  double level = 0.95;
  bool paired = true;
  std::int64_t margin = -1;  // box margin around the two boxes; < 0: L
  int workers = 1;
};

/// Boxes Q(x1, L) and Q(x2, L) with x2 = x1 + (2L + s) e_1, so the ℓ∞ gap
/// between them is s.
inline CorrelationReport decoupling_check(const FieldSampler& sampler, int d, std::int64_t L, std::int64_t s,
                                          double u, double u_hat, BoxFunctional f1, BoxFunctional f2,
                                          std::int64_t replicas, const RngStream& stream,
                                          const DecouplingOptions& opt = {}) {
  if (L < 0) throw std::invalid_argument("decoupling_check: L must be >= 0");
  if (s < 1) throw std::invalid_argument("decoupling_check: boxes overlap or touch (separation must be >= 1)");
  if (u_hat > u) throw std::invalid_argument("decoupling_check: need u_hat <= u");
  if (replicas < 2) throw std::invalid_argument("decoupling_check: need >= 2 replicas");
  const std::int64_t m = opt.margin < 0 ? std::max<std::int64_t>(L, 1) : opt.margin;
  std::vector<std::int64_t> sides(d, 2 * L + 1 + 2 * m), off(d, -L - m);
  sides[0] = 2 * L + 1 + (2 * L + s) + 2 * m;
  const LatticeBox box = LatticeBox::build(d, sides, off);
  auto box_min = [&](const ScalarField& phi, std::int64_t shift) {
    std::vector<std::int64_t> qo(d, -L);
    qo[0] += shift;
    const LatticeBox Q = LatticeBox::cube(d, 2 * L + 1, qo);
    double mn = kInfinity;
    for (Index v = 0; v < Q.num_vertices(); ++v) mn = std::min(mn, phi.values[box.index(Q.coords(v))]);
    return mn;
  };
  auto eval = [](const BoxFunctional& f, double mn, double level) {
    return f.kind == BoxFunctional::One ? 1.0 : (mn + level >= f.h ? 1.0 : 0.0);
  };
  const std::int64_t x2 = 2 * L + s;
  std::vector<double> Y(replicas), A(replicas), B(replicas);
  parallel_for(replicas, opt.workers, [&](std::int64_t r) {
    const auto s0 = stream.with_replica(static_cast<std::uint64_t>(r));
    if (opt.paired) {
      const ScalarField phi = sampler(box, s0);
      const double m1 = box_min(phi, 0), m2 = box_min(phi, x2);
      Y[r] = eval(f1, m1, u_hat) * eval(f2, m2, u_hat);
      A[r] = eval(f1, m1, u);
      B[r] = eval(f2, m2, u);
    } else {
      const ScalarField p0 = sampler(box, s0.with_substream(s0.substream + 1));
      const ScalarField p1 = sampler(box, s0.with_substream(s0.substream + 2));
      const ScalarField p2 = sampler(box, s0.with_substream(s0.substream + 3));
      Y[r] = eval(f1, box_min(p0, 0), u_hat) * eval(f2, box_min(p0, x2), u_hat);
      A[r] = eval(f1, box_min(p1, 0), u);
      B[r] = eval(f2, box_min(p2, x2), u);
    }
  });
  CorrelationReport rep;
  rep.L = L;
  rep.separation = s;
  rep.u = u;
  rep.u_hat = u_hat;
  rep.tolerance = opt.tolerance;
  rep.paired = opt.paired;
  rep.replicas = replicas;
  const auto sy = summarize(Y), sa = summarize(A), sb = summarize(B);
  rep.e_hat_f1f2 = sy.mean;
  rep.e_u_f1 = sa.mean;
  rep.e_u_f2 = sb.mean;
  rep.slack = sa.mean * sb.mean + opt.tolerance - sy.mean;
  // Delta method on (A, B, Y) with gradient (b, a, -1).
  const double n = double(replicas);
  double var = 0.0;
  if (opt.paired) {
    std::vector<double> lin(replicas);
    for (std::int64_t r = 0; r < replicas; ++r) lin[r] = sb.mean * A[r] + sa.mean * B[r] - Y[r];
    var = summarize(lin).variance / n;
  } else {
    var = sb.mean * sb.mean * sa.variance / n + sa.mean * sa.mean * sb.variance / n + sy.variance / n;
  }
  rep.slack_se = std::sqrt(var);
  const double z = z_value(opt.level);
  rep.slack_low = rep.slack - z * rep.slack_se;
  rep.slack_high = rep.slack + z * rep.slack_se;
  rep.holds = rep.slack_high >= 0.0;
  return rep;
}

// --------------------------------------------------------------------------
// Heat-kernel shape

struct HeatShapeFit {
  double diagonal_slope = 0.0, diagonal_se = 0.0;  // log p(t,x,x) vs log t
  std::vector<double> t;
  std::vector<double> gaussian_slope;  // per t: log p(t,x,y) vs |x-y|²/t
  std::vector<double> gaussian_se;
  std::vector<double> mass;
};

/// `slices` at one source x and increasing t; `targets` are vertices y used
/// for the off-diagonal fit (those with |x-y| > t are skipped).
inline HeatShapeFit heat_kernel_shape_fit(const LatticeBox& box, const std::vector<HeatKernelSlice>& slices,
                                          const std::vector<Index>& targets) {
  if (slices.size() < 2) throw std::invalid_argument("heat_kernel_shape_fit: need at least 2 times");
  const double t0 = slices.front().t, t1 = slices.back().t;
  if (!(t0 > 0.0) || t1 < 8.0 * t0) throw std::invalid_argument("heat_kernel_shape_fit: t grid must span a factor 8");
  HeatShapeFit fit;
  std::vector<double> lt, lp;
  const Index x = slices.front().x;
  const Coord cx = box.coords(x);
  for (const auto& s : slices) {
    if (s.x != x) throw std::invalid_argument("heat_kernel_shape_fit: slices from different sources");
    lt.push_back(std::log(s.t));
    lp.push_back(std::log(s.p[x]));
    fit.t.push_back(s.t);
    fit.mass.push_back(s.mass);
    std::vector<double> gx, gy;
    for (Index y : targets) {
      const double r = euclidean_distance(cx, box.coords(y));
      if (r > s.t || !(s.p[y] > 0.0)) continue;
      gx.push_back(r * r / s.t);
      gy.push_back(std::log(s.p[y]));
    }
    if (gx.size() >= 3) {
      const auto f = least_squares(gx, gy);
      fit.gaussian_slope.push_back(f.slope);
      fit.gaussian_se.push_back(f.slope_se);
    } else {
      fit.gaussian_slope.push_back(std::numeric_limits<double>::quiet_NaN());
      fit.gaussian_se.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  const auto f = least_squares(lt, lp);
  fit.diagonal_slope = f.slope;
  fit.diagonal_se = f.slope_se;
  return fit;
}

}  // namespace fpplab
