#pragma once

// Exhaustive self-avoiding path search, the reference for FPP distances on
// tiny boxes. No pruning: every simple path from the source is visited.

#include <cstdint>
#include <random>
#include <vector>

#include "fpplab/fpp.hpp"

namespace fpplab::testing {

struct PathEnumerator {
  const LatticeBox& box;
  const PassageWeights& w;
  std::vector<double> best;

  void walk(Index v, std::uint32_t used, double cost) {
    best[v] = std::min(best[v], cost);
    box.for_each_neighbor(v, [&](Index u, Index e) {
      if (used & (1u << u)) return;
      const double step = w.mode == WeightMode::Edge ? w.values[e] : w.values[u];
      walk(u, used | (1u << u), cost + step);
    });
  }

  std::vector<double> run(Index source) {
    best.assign(box.num_vertices(), kInfinity);
    walk(source, 1u << source, w.mode == WeightMode::Edge ? 0.0 : w.values[source]);
    return best;
  }
};

/// Zeros with probability 1/4, otherwise k/8 (exact sums) or Exp(1).
inline PassageWeights random_table(const LatticeBox& box, WeightMode mode, bool dyadic, std::mt19937_64& gen) {
  PassageWeights w;
  w.box = box;
  w.mode = mode;
  w.values.resize(w.expected_size());
  std::uniform_int_distribution<int> k(0, 8);
  std::exponential_distribution<double> ex(1.0);
  std::bernoulli_distribution zero(0.25);
  for (auto& x : w.values) x = zero(gen) ? 0.0 : dyadic ? k(gen) / 8.0 : ex(gen);
  return w;
}

/// Every box with sides in {1,2,3} and d <= 3.
inline std::vector<LatticeBox> small_boxes() {
  std::vector<LatticeBox> out;
  for (int d = 1; d <= 3; ++d) {
    std::vector<std::int64_t> s(d, 1);
    while (true) {
      out.push_back(LatticeBox::build(d, s));
      int a = 0;
      while (a < d && ++s[a] > 3) s[a++] = 1;
      if (a == d) break;
    }
  }
  return out;
}

/// Runs `tables` random weight tables over all small boxes, alternating
/// modes; returns the number of vertices where Dijkstra and the search differ.
inline int count_fpp_mismatches(int tables, std::uint64_t seed) {
  const auto boxes = small_boxes();
  std::mt19937_64 gen(seed);
  int mismatches = 0;
  for (int t = 0; t < tables; ++t) {
    const auto& box = boxes[t % boxes.size()];
    const auto mode = (t / boxes.size()) % 2 ? WeightMode::Vertex : WeightMode::Edge;
    const bool dyadic = t % 2 == 0;
    const auto w = random_table(box, mode, dyadic, gen);
    const Index src = static_cast<Index>(gen() % box.num_vertices());
    const auto ref = PathEnumerator{box, w, {}}.run(src);
    const auto got = fpp_distances(w, {src}).distance;
    for (Index v = 0; v < box.num_vertices(); ++v) {
      const bool ok = dyadic ? got[v] == ref[v] : std::abs(got[v] - ref[v]) <= 1e-12 * (1 + ref[v]);
      mismatches += !ok;
    }
  }
  return mismatches;
}

}  // namespace fpplab::testing
