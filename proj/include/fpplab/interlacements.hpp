#pragma once

// Random interlacements restricted to a finite target box.
//
// Trajectories are simple random walks with Exp(1) holding times, killed on
// leaving an ambient box that contains the target. With this walk the Green
// function is g(x,y) = 2d * dirichlet_green(x,y), the capacity satisfies
// cap({x}) g(x,x) = 1, and the target is hit by Poisson(u cap(K)) trajectories
// entering at points drawn from e_K / cap(K).

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "fpplab/field.hpp"
#include "fpplab/gff.hpp"
#include "fpplab/lattice.hpp"
#include "fpplab/linear_solve.hpp"
#include "fpplab/rng.hpp"

namespace fpplab {

struct EquilibriumMeasure {
  LatticeBox ambient;
  std::vector<Index> support;  // vertices of K (ambient indices), sorted
  std::vector<double> weight;  // e_K on `support`
  double capacity = 0.0;
  SolveStats solve;
};

/// Hitting probability of K, then e_K(x) = (1/2d) Σ_{y~x} (1 - P_y[hit K]),
/// where neighbors outside the ambient box count as escaped.
inline EquilibriumMeasure equilibrium_measure(std::vector<Index> K, const LatticeBox& ambient,
                                              const CgOptions& opt = {1e-12, 100000}) {
  if (ambient.dim() < 3) throw std::invalid_argument("equilibrium_measure: requires d >= 3");
  std::sort(K.begin(), K.end());
  K.erase(std::unique(K.begin(), K.end()), K.end());
  if (K.empty()) throw std::invalid_argument("equilibrium_measure: empty set");
  const Index n = ambient.num_vertices();
  std::vector<std::uint8_t> in_K(n, 0);
  for (Index v : K) {
    if (v < 0 || v >= n) throw std::out_of_range("equilibrium_measure: K not inside ambient box");
    in_K[v] = 1;
  }
  LatticeOperator A = dirichlet_laplacian(ambient);
  A.active.resize(n);
  std::vector<double> b(n, 0.0);
  for (Index v = 0; v < n; ++v) {
    A.active[v] = !in_K[v];
    if (in_K[v]) {
      b[v] = 1.0;
      continue;
    }
    ambient.for_each_neighbor(v, [&](Index w, Index) {
      if (in_K[w]) b[v] += 1.0;
    });
  }
  std::vector<double> hit;
  EquilibriumMeasure eq;
  eq.solve = conjugate_gradient(A, b, hit, opt);
  eq.ambient = ambient;
  eq.support = K;
  const double two_d = 2.0 * ambient.dim();
  for (Index x : K) {
    double esc = ambient.exterior_degree(x);
    ambient.for_each_neighbor(x, [&](Index w, Index) {
      if (!in_K[w]) esc += 1.0 - std::clamp(hit[w], 0.0, 1.0);
    });
    eq.weight.push_back(esc / two_d);
    eq.capacity += esc / two_d;
  }
  return eq;
}

/// Index in `ambient` of every vertex of `target` (same absolute coordinates).
inline std::vector<Index> embed_vertices(const LatticeBox& target, const LatticeBox& ambient) {
  std::vector<Index> out(target.num_vertices());
  for (Index v = 0; v < target.num_vertices(); ++v) out[v] = ambient.index_checked(target.coords(v));
  return out;
}

/**
 * Occupation-time sampler for a fixed target box. `ambient_margin` is the
 * total growth per axis (split evenly between the two sides); it must be at
 * least twice the largest target side.
 */
class InterlacementSampler {
 public:
  static constexpr const char* kName = "interlacement-occupation";

  InterlacementSampler(const LatticeBox& target, std::int64_t ambient_margin) : target_(target) {
    if (target.dim() < 3) throw std::invalid_argument("interlacements: requires d >= 3");
    const auto side = *std::max_element(target.sides().begin(), target.sides().end());
    if (ambient_margin < 2 * side)
      throw std::invalid_argument("interlacements: ambient_margin must be at least " +
                                  std::to_string(2 * side) + " (twice the target side)");
    margin_ = ambient_margin;
    const std::int64_t lo = ambient_margin / 2;
    ambient_ = target.inflated(lo, ambient_margin - lo);
    embed_ = embed_vertices(target, ambient_);
    eq_ = equilibrium_measure(embed_, ambient_);
    target_slot_.assign(ambient_.num_vertices(), kNoIndex);
    for (Index v = 0; v < target.num_vertices(); ++v) target_slot_[embed_[v]] = v;
    cumulative_.reserve(eq_.weight.size());
    double acc = 0.0;
    for (double w : eq_.weight) cumulative_.push_back(acc += w);
  }

  const LatticeBox& target() const { return target_; }
  const LatticeBox& ambient() const { return ambient_; }
  const EquilibriumMeasure& equilibrium() const { return eq_; }
  double capacity() const { return eq_.capacity; }
  std::int64_t margin() const { return margin_; }

  ScalarField sample(double u, const RngStream& stream) const {
    if (!(u > 0.0)) throw std::invalid_argument("interlacements: u must be positive");
    RandomSource rng(stream);
    ScalarField f;
    f.box = target_;
    f.values.assign(target_.num_vertices(), 0.0);
    f.provenance = {kName, stream, {{"u", u}, {"ambient_margin", margin_}, {"capacity", eq_.capacity}}};
    const std::int64_t trajectories = rng.poisson(u * eq_.capacity);
    const int d = ambient_.dim();
    for (std::int64_t k = 0; k < trajectories; ++k) {
      const double r = rng.uniform() * eq_.capacity;
      auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), r);
      if (it == cumulative_.end()) --it;
      Index x = eq_.support[it - cumulative_.begin()];
      while (true) {
        const double hold = rng.exponential(1.0);
        if (target_slot_[x] != kNoIndex) f.values[target_slot_[x]] += hold;
        const auto dir = rng.uniform_int(2 * d);
        x = ambient_.neighbor(x, static_cast<int>(dir / 2), dir % 2 ? +1 : -1);
        if (x == kNoIndex) break;
      }
    }
    return f;
  }

  /// E L_{x,u} = u Σ_y e_K(y) g(y,x), returned per target vertex.
  std::vector<double> campbell_mean(double u) const {
    std::vector<double> b(ambient_.num_vertices(), 0.0), sol;
    for (std::size_t i = 0; i < eq_.support.size(); ++i) b[eq_.support[i]] = eq_.weight[i];
    conjugate_gradient(dirichlet_laplacian(ambient_), b, sol, {1e-12, 100000});
    std::vector<double> out(target_.num_vertices());
    const double two_d = 2.0 * ambient_.dim();
    for (Index v = 0; v < target_.num_vertices(); ++v) out[v] = u * two_d * sol[embed_[v]];
    return out;
  }

 private:
  LatticeBox target_, ambient_;
  std::int64_t margin_ = 0;
  std::vector<Index> embed_, target_slot_;
  EquilibriumMeasure eq_;
  std::vector<double> cumulative_;
};

inline ScalarField sample_interlacement_occupation(const LatticeBox& box, std::int64_t ambient_margin,
                                                   double u, const RngStream& stream) {
  return InterlacementSampler(box, ambient_margin).sample(u, stream);
}

/// Green function of the Exp(1)-holding walk killed outside `ambient`.
inline double walk_green(const LatticeBox& ambient, Index x, Index y) {
  return 2.0 * ambient.dim() * dirichlet_green(ambient, x, y, {1e-12, 100000});
}

}  // namespace fpplab
