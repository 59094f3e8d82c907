#pragma once

// First-passage distances on a box.

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fpplab/field.hpp"
#include "fpplab/lattice.hpp"

namespace fpplab {

enum class Metric { FppEdge, FppVertex, Chemical, Theta, Kappa };

inline const char* to_string(Metric m) {
  switch (m) {
    case Metric::FppEdge: return "fpp-edge";
    case Metric::FppVertex: return "fpp-vertex";
    case Metric::Chemical: return "chemical";
    case Metric::Theta: return "d_theta";
    case Metric::Kappa: return "d_kappa";
  }
  return "?";
}

struct DistanceMap {
  LatticeBox box;
  std::vector<Index> sources;
  std::vector<double> distance;
  Metric metric = Metric::FppEdge;

  double operator[](Index v) const { return distance[v]; }
};

/**
 * Multi-source Dijkstra. `edge_cost(e, w)` is the price of stepping along edge
 * e into w; `source_cost(s)` is the initial label of a source. Infinite costs
 * are never relaxed. Among equal labels the smaller vertex index settles
 * first, so the output is fully deterministic.
 */
template <class EdgeCost, class SourceCost>
std::vector<double> lattice_dijkstra(const LatticeBox& box, std::span<const Index> sources,
                                     EdgeCost&& edge_cost, SourceCost&& source_cost) {
  if (sources.empty()) throw std::invalid_argument("dijkstra: empty source set");
  const Index n = box.num_vertices();
  std::vector<double> dist(n, kInfinity);
  std::vector<std::uint8_t> done(n, 0);
  using Item = std::pair<double, Index>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  for (Index s : sources) {
    if (s < 0 || s >= n) throw std::out_of_range("dijkstra: source outside box");
    const double c = source_cost(s);
    if (c < dist[s]) {
      dist[s] = c;
      heap.emplace(c, s);
    }
  }
  while (!heap.empty()) {
    const auto [dv, v] = heap.top();
    heap.pop();
    if (done[v] || dv > dist[v]) continue;
    done[v] = 1;
    box.for_each_neighbor(v, [&, dv = dv](Index w, Index e) {
      if (done[w]) return;
      const double c = edge_cost(e, w);
      if (!(c < kInfinity)) return;
      const double nd = dv + c;
      if (nd < dist[w]) {
        dist[w] = nd;
        heap.emplace(nd, w);
      }
    });
  }
  return dist;
}

/// d^ω from a source set. Vertex mode sums t_x over every vertex of the path,
/// both endpoints included, so a source sits at its own weight.
inline DistanceMap fpp_distances(const PassageWeights& w, std::vector<Index> sources) {
  w.validate();
  DistanceMap out;
  out.box = w.box;
  out.sources = std::move(sources);
  if (w.mode == WeightMode::Edge) {
    out.metric = Metric::FppEdge;
    out.distance = lattice_dijkstra(
        w.box, out.sources, [&](Index e, Index) { return w.values[e]; }, [](Index) { return 0.0; });
  } else {
    out.metric = Metric::FppVertex;
    out.distance = lattice_dijkstra(
        w.box, out.sources, [&](Index, Index y) { return w.values[y]; },
        [&](Index s) { return w.values[s]; });
  }
  return out;
}

inline double fpp_distance(const PassageWeights& w, Index x, Index y) {
  return fpp_distances(w, {x}).distance[y];
}

/// Graph distance through edges with positive entries of `open`.
inline DistanceMap chemical_distances(const LatticeBox& box, const std::vector<std::uint8_t>& open,
                                      std::vector<Index> sources) {
  DistanceMap out;
  out.box = box;
  out.sources = std::move(sources);
  out.metric = Metric::Chemical;
  out.distance = lattice_dijkstra(
      box, out.sources, [&](Index e, Index) { return open[e] ? 1.0 : kInfinity; },
      [](Index) { return 0.0; });
  return out;
}

/// B(t) = {x : d(x) <= t}, as sorted vertex indices.
inline std::vector<Index> shape_ball(const DistanceMap& dm, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("shape_ball: t must be >= 0");
  std::vector<Index> out;
  for (Index v = 0; v < dm.box.num_vertices(); ++v)
    if (dm.distance[v] <= t) out.push_back(v);
  return out;
}

inline std::vector<Index> shape_ball(const PassageWeights& w, Index source, double t) {
  return shape_ball(fpp_distances(w, {source}), t);
}

/// Source and target joined through zero-weight elements. In vertex mode both
/// endpoints must themselves have zero weight.
inline bool zero_cluster_criterion(const PassageWeights& w, Index source, Index target) {
  w.validate();
  const Index n = w.box.num_vertices();
  if (source < 0 || source >= n || target < 0 || target >= n)
    throw std::out_of_range("zero_cluster_criterion: vertex outside box");
  const Index t[1] = {target};
  if (w.mode == WeightMode::Edge) {
    if (source == target) return true;
    EdgeMask m;
    m.open.resize(w.values.size());
    for (std::size_t e = 0; e < w.values.size(); ++e) m.open[e] = w.values[e] == 0.0;
    return label_clusters(w.box, m, t).connected(source, target);
  }
  VertexMask m;
  m.open.resize(n);
  for (Index v = 0; v < n; ++v) m.open[v] = w.values[v] == 0.0;
  return label_clusters(w.box, m, t).connected(source, target);
}

}  // namespace fpplab
