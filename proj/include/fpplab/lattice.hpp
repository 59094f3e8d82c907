#pragma once

// Finite boxes of Z^d: dense vertex/edge indexing, neighbor arithmetic,
// boundaries and cluster labeling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fpplab {

using Index = std::int64_t;
using Coord = std::vector<std::int64_t>;

inline constexpr Index kNoIndex = -1;

/// ℓ∞ distance between two points of Z^d.
inline std::int64_t linf_distance(std::span<const std::int64_t> x,
                                  std::span<const std::int64_t> y) {
  if (x.size() != y.size())
    throw std::invalid_argument("linf_distance: dimension mismatch");
  std::int64_t m = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

inline std::int64_t l1_distance(std::span<const std::int64_t> x,
                                std::span<const std::int64_t> y) {
  std::int64_t s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i] - y[i]);
  return s;
}

inline double euclidean_distance(std::span<const std::int64_t> x,
                                 std::span<const std::int64_t> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double diff = static_cast<double>(x[i] - y[i]);
    s += diff * diff;
  }
  return std::sqrt(s);
}

/**
 * Axis-aligned box of Z^d.
 *
 * Vertices are indexed row-major (last axis fastest) relative to `offset`.
 * Edges {e-, e+} are stored with e+ = e- + unit vector; edges along axis a
 * occupy a contiguous block, and inside the block they are indexed
 * row-major over the e- coordinates of the box shortened by one on axis a.
 */
class LatticeBox {
 public:
  LatticeBox() = default;

  static LatticeBox build(int d, std::vector<std::int64_t> sides,
                          std::vector<std::int64_t> offset = {}) {
    if (d < 1) throw std::invalid_argument("LatticeBox: dimension must be >= 1");
    if (static_cast<int>(sides.size()) != d)
      throw std::invalid_argument("LatticeBox: need one side length per axis");
    if (offset.empty()) offset.assign(d, 0);
    if (static_cast<int>(offset.size()) != d)
      throw std::invalid_argument("LatticeBox: offset dimension mismatch");

    LatticeBox box;
    box.d_ = d;
    box.sides_ = std::move(sides);
    box.offset_ = std::move(offset);
    box.strides_.assign(d, 1);
    Index count = 1;
    for (int a = d - 1; a >= 0; --a) {
      const auto s = box.sides_[a];
      if (s < 1) throw std::invalid_argument("LatticeBox: side lengths must be >= 1");
      box.strides_[a] = count;
      if (count > std::numeric_limits<Index>::max() / s / (2 * d))
        throw std::overflow_error("LatticeBox: vertex count overflows the index type");
      count *= s;
    }
    box.num_vertices_ = count;
    box.edge_block_.assign(d + 1, 0);
    for (int a = 0; a < d; ++a)
      box.edge_block_[a + 1] = box.edge_block_[a] + count / box.sides_[a] * (box.sides_[a] - 1);
    return box;
  }

  /// Cube of side `side` in dimension d.
  static LatticeBox cube(int d, std::int64_t side, std::vector<std::int64_t> offset = {}) {
    return build(d, std::vector<std::int64_t>(d, side), std::move(offset));
  }

  int dim() const noexcept { return d_; }
  Index num_vertices() const noexcept { return num_vertices_; }
  Index num_edges() const noexcept { return edge_block_.empty() ? 0 : edge_block_.back(); }
  const std::vector<std::int64_t>& sides() const noexcept { return sides_; }
  const std::vector<std::int64_t>& offset() const noexcept { return offset_; }
  Index stride(int axis) const { return strides_[axis]; }

  std::int64_t local_coord(Index v, int axis) const {
    return (v / strides_[axis]) % sides_[axis];
  }

  /// Absolute Z^d coordinates of vertex v.
  Coord coords(Index v) const {
    Coord x(d_);
    for (int a = 0; a < d_; ++a) x[a] = offset_[a] + local_coord(v, a);
    return x;
  }

  bool contains(std::span<const std::int64_t> x) const {
    if (static_cast<int>(x.size()) != d_) return false;
    for (int a = 0; a < d_; ++a) {
      const auto l = x[a] - offset_[a];
      if (l < 0 || l >= sides_[a]) return false;
    }
    return true;
  }

  /// Dense index of absolute coordinates, kNoIndex when outside.
  Index index(std::span<const std::int64_t> x) const {
    if (!contains(x)) return kNoIndex;
    Index v = 0;
    for (int a = 0; a < d_; ++a) v += (x[a] - offset_[a]) * strides_[a];
    return v;
  }

  Index index_checked(std::span<const std::int64_t> x) const {
    const Index v = index(x);
    if (v == kNoIndex) throw std::out_of_range("LatticeBox: vertex outside box");
    return v;
  }

  /// Neighbor v ± e_axis, or kNoIndex if it leaves the box.
  Index neighbor(Index v, int axis, int sign) const {
    const auto l = local_coord(v, axis) + sign;
    if (l < 0 || l >= sides_[axis]) return kNoIndex;
    return v + sign * strides_[axis];
  }

  /// Edge {v, v + e_axis}; kNoIndex if v + e_axis is outside.
  Index edge_index(Index v_minus, int axis) const {
    const auto side = sides_[axis];
    const auto l = local_coord(v_minus, axis);
    if (l + 1 >= side) return kNoIndex;
    // Row-major rank in the box with side_axis - 1 on `axis`.
    const Index hi = v_minus / (strides_[axis] * side);
    const Index lo = v_minus % strides_[axis];
    return edge_block_[axis] + (hi * (side - 1) + l) * strides_[axis] + lo;
  }

  int edge_axis(Index e) const {
    int a = 0;
    while (e >= edge_block_[a + 1]) ++a;
    return a;
  }

  /// Endpoints (e-, e+) of edge e.
  std::pair<Index, Index> edge_endpoints(Index e) const {
    const int a = edge_axis(e);
    const Index r = e - edge_block_[a];
    const auto side = sides_[a];
    const Index lo = r % strides_[a];
    const Index rest = r / strides_[a];
    const Index l = rest % (side - 1);
    const Index hi = rest / (side - 1);
    const Index v = hi * strides_[a] * side + l * strides_[a] + lo;
    return {v, v + strides_[a]};
  }

  /// Calls f(w, edge) for every in-box neighbor w of v.
  template <class F>
  void for_each_neighbor(Index v, F&& f) const {
    for (int a = 0; a < d_; ++a) {
      const auto l = local_coord(v, a);
      if (l > 0) f(v - strides_[a], edge_index(v - strides_[a], a));
      if (l + 1 < sides_[a]) f(v + strides_[a], edge_index(v, a));
    }
  }

  /// Number of Z^d neighbors of v lying outside the box.
  int exterior_degree(Index v) const {
    int n = 0;
    for (int a = 0; a < d_; ++a) {
      const auto l = local_coord(v, a);
      n += (l == 0) + (l + 1 == sides_[a]);
    }
    return n;
  }

  /// ∂_int: vertices with a Z^d-neighbor outside the box.
  std::vector<Index> inner_boundary() const {
    std::vector<Index> out;
    for (Index v = 0; v < num_vertices_; ++v)
      if (exterior_degree(v) > 0) out.push_back(v);
    return out;
  }

  /// ∂_out: outside vertices adjacent to the box, in lexicographic order.
  std::vector<Coord> outer_boundary() const {
    std::vector<Coord> out;
    for (Index v = 0; v < num_vertices_; ++v) {
      if (exterior_degree(v) == 0) continue;
      const Coord x = coords(v);
      for (int a = 0; a < d_; ++a) {
        for (int s : {-1, 1}) {
          Coord y = x;
          y[a] += s;
          if (!contains(y)) out.push_back(std::move(y));
        }
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  /// Box grown by `lo` below and `hi` above on every axis.
  LatticeBox inflated(std::int64_t lo, std::int64_t hi) const {
    std::vector<std::int64_t> s(sides_), o(offset_);
    for (int a = 0; a < d_; ++a) {
      s[a] += lo + hi;
      o[a] -= lo;
    }
    return build(d_, std::move(s), std::move(o));
  }

  /// Vertex closest to the geometric center (rounding down).
  Index center() const {
    Index v = 0;
    for (int a = 0; a < d_; ++a) v += (sides_[a] - 1) / 2 * strides_[a];
    return v;
  }

  bool operator==(const LatticeBox& o) const {
    return d_ == o.d_ && sides_ == o.sides_ && offset_ == o.offset_;
  }

 private:
  int d_ = 0;
  std::vector<std::int64_t> sides_, offset_;
  std::vector<Index> strides_;
  std::vector<Index> edge_block_;
  Index num_vertices_ = 0;
};

// --------------------------------------------------------------------------
// Cluster labeling

/// Disjoint-set forest with path halving and union by size.
class UnionFind {
 public:
  explicit UnionFind(Index n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), Index{0});
  }
  Index find(Index x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  Index unite(Index a, Index b) {
    a = find(a);
    b = find(b);
    if (a == b) return a;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return a;
  }
  Index size(Index x) { return size_[find(x)]; }

 private:
  std::vector<Index> parent_;
  std::vector<Index> size_;
};

struct VertexMask {
  std::vector<std::uint8_t> open;
};
struct EdgeMask {
  std::vector<std::uint8_t> open;
};

/**
 * Connected components of the open subgraph.
 *
 * `component[v]` is the smallest dense index in v's component, or kNoIndex
 * for a closed vertex. Component lists are sorted by that id.
 */
struct ClusterLabeling {
  std::vector<Index> component;
  std::vector<Index> ids;
  std::vector<Index> sizes;
  std::vector<std::uint8_t> touches_target;
  Index open_vertices = 0;

  Index num_components() const { return static_cast<Index>(ids.size()); }
  bool connected(Index u, Index v) const {
    return component[u] != kNoIndex && component[u] == component[v];
  }
};

namespace detail {

inline ClusterLabeling finish_labeling(const LatticeBox& box, UnionFind& uf,
                                       const std::vector<std::uint8_t>& vertex_open,
                                       std::span<const Index> target) {
  const Index n = box.num_vertices();
  ClusterLabeling lab;
  lab.component.assign(n, kNoIndex);
  std::vector<Index> root_to_id(n, kNoIndex);
  for (Index v = 0; v < n; ++v) {
    if (!vertex_open[v]) continue;
    ++lab.open_vertices;
    const Index r = uf.find(v);
    if (root_to_id[r] == kNoIndex) {
      // v is the first (smallest) open vertex seen in this component.
      root_to_id[r] = v;
      lab.ids.push_back(v);
      lab.sizes.push_back(0);
    }
    lab.component[v] = root_to_id[r];
  }
  // ids are increasing, so a component's slot is found by binary search.
  for (Index v = 0; v < n; ++v) {
    if (lab.component[v] == kNoIndex) continue;
    auto it = std::lower_bound(lab.ids.begin(), lab.ids.end(), lab.component[v]);
    ++lab.sizes[it - lab.ids.begin()];
  }
  lab.touches_target.assign(lab.ids.size(), 0);
  for (Index t : target) {
    if (t < 0 || t >= n)
      throw std::out_of_range("label_clusters: target vertex outside box");
    if (lab.component[t] == kNoIndex) continue;
    auto it = std::lower_bound(lab.ids.begin(), lab.ids.end(), lab.component[t]);
    lab.touches_target[it - lab.ids.begin()] = 1;
  }
  return lab;
}

}  // namespace detail

/// Site percolation: components of open vertices joined by box edges.
inline ClusterLabeling label_clusters(const LatticeBox& box, const VertexMask& mask,
                                      std::span<const Index> target = {}) {
  const Index n = box.num_vertices();
  if (static_cast<Index>(mask.open.size()) != n)
    throw std::invalid_argument("label_clusters: vertex mask length mismatch");
  UnionFind uf(n);
  for (Index v = 0; v < n; ++v) {
    if (!mask.open[v]) continue;
    for (int a = 0; a < box.dim(); ++a) {
      const Index w = box.neighbor(v, a, +1);
      if (w != kNoIndex && mask.open[w]) uf.unite(v, w);
    }
  }
  return detail::finish_labeling(box, uf, mask.open, target);
}

/// Bond percolation: every vertex is present; open edges join them.
inline ClusterLabeling label_clusters(const LatticeBox& box, const EdgeMask& mask,
                                      std::span<const Index> target = {}) {
  if (static_cast<Index>(mask.open.size()) != box.num_edges())
    throw std::invalid_argument("label_clusters: edge mask length mismatch");
  UnionFind uf(box.num_vertices());
  for (Index e = 0; e < box.num_edges(); ++e) {
    if (!mask.open[e]) continue;
    const auto [a, b] = box.edge_endpoints(e);
    uf.unite(a, b);
  }
  std::vector<std::uint8_t> all(box.num_vertices(), 1);
  return detail::finish_labeling(box, uf, all, target);
}

/// True iff one component meets both A and B. Empty A or B gives false.
inline bool crossing_event(const ClusterLabeling& lab, std::span<const Index> A,
                           std::span<const Index> B) {
  if (A.empty() || B.empty()) return false;
  std::vector<Index> ca;
  ca.reserve(A.size());
  for (Index a : A)
    if (lab.component[a] != kNoIndex) ca.push_back(lab.component[a]);
  std::sort(ca.begin(), ca.end());
  for (Index b : B) {
    const Index c = lab.component[b];
    if (c != kNoIndex && std::binary_search(ca.begin(), ca.end(), c)) return true;
  }
  return false;
}

/// Vertices of the box at ℓ∞ distance <= radius from `center`.
inline std::vector<Index> linf_ball(const LatticeBox& box, std::span<const std::int64_t> center,
                                    std::int64_t radius) {
  std::vector<Index> out;
  for (Index v = 0; v < box.num_vertices(); ++v) {
    const Coord x = box.coords(v);
    if (linf_distance(x, center) <= radius) out.push_back(v);
  }
  return out;
}

/// Vertices of the box at ℓ∞ distance > radius from `center`.
inline std::vector<Index> linf_ball_complement(const LatticeBox& box,
                                               std::span<const std::int64_t> center,
                                               std::int64_t radius) {
  std::vector<Index> out;
  for (Index v = 0; v < box.num_vertices(); ++v) {
    const Coord x = box.coords(v);
    if (linf_distance(x, center) > radius) out.push_back(v);
  }
  return out;
}

}  // namespace fpplab
