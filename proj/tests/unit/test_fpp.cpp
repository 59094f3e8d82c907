#include <gtest/gtest.h>

#include <cstdint>
#include <random>

#include "fpplab/fpp.hpp"
#include "fpplab/weights.hpp"
#include "support/path_oracle.hpp"

using namespace fpplab;

using fpplab::testing::random_table;

TEST(FppDistances, EqualsExhaustivePathSearchOnSmallBoxes) {
  EXPECT_EQ(fpplab::testing::small_boxes().size(), 39u);
  EXPECT_EQ(fpplab::testing::count_fpp_mismatches(200, 2024), 0);
}

TEST(FppDistances, HandExample) {
  // 2x2 square, edges: along axis 0 then axis 1.
  const auto box = LatticeBox::cube(2, 2);
  PassageWeights w{box, WeightMode::Edge, std::vector<double>(box.num_edges(), 0.0)};
  const Index o = box.index_checked(Coord{0, 0}), a = box.index_checked(Coord{1, 0}),
              b = box.index_checked(Coord{0, 1}), c = box.index_checked(Coord{1, 1});
  auto set = [&](Index u, Index v, double x) {
    box.for_each_neighbor(u, [&](Index y, Index e) {
      if (y == v) w.values[e] = x;
    });
  };
  set(o, a, 5);
  set(a, c, 1);
  set(o, b, 2);
  set(b, c, 2);
  const auto d = fpp_distances(w, {o});
  EXPECT_EQ(d[o], 0);
  EXPECT_EQ(d[b], 2);
  EXPECT_EQ(d[c], 4);
  EXPECT_EQ(d[a], 5);
}

TEST(FppDistances, VertexModeChargesEndpoints) {
  const auto box = LatticeBox::cube(1, 4);
  PassageWeights w{box, WeightMode::Vertex, {1.0, 2.0, 0.0, 3.0}};
  const auto d = fpp_distances(w, {0});
  EXPECT_EQ(d.distance, (std::vector<double>{1, 3, 3, 6}));
  EXPECT_EQ(fpp_distance(w, 3, 0), 6);
}

TEST(FppDistances, InfiniteWeightsBlock) {
  const auto box = LatticeBox::cube(1, 3);
  PassageWeights w{box, WeightMode::Edge, {1.0, kInfinity}};
  const auto d = fpp_distances(w, {0});
  EXPECT_EQ(d[1], 1);
  EXPECT_TRUE(std::isinf(d[2]));
}

TEST(FppDistances, MultiSourceIsMinimum) {
  const auto box = LatticeBox::cube(2, 6);
  std::mt19937_64 gen(3);
  const auto w = random_table(box, WeightMode::Edge, false, gen);
  const auto a = fpp_distances(w, {0}), b = fpp_distances(w, {35}), ab = fpp_distances(w, {0, 35});
  for (Index v = 0; v < box.num_vertices(); ++v) EXPECT_DOUBLE_EQ(ab[v], std::min(a[v], b[v]));
}

TEST(FppDistances, RejectsBadWeights) {
  const auto box = LatticeBox::cube(2, 3);
  PassageWeights w{box, WeightMode::Edge, std::vector<double>(box.num_edges(), 1.0)};
  w.values[2] = -1.0;
  EXPECT_THROW(fpp_distances(w, {0}), std::invalid_argument);
  w.values.pop_back();
  EXPECT_THROW(fpp_distances(w, {0}), std::invalid_argument);
}

TEST(ChemicalDistance, MatchesUnitWeights) {
  const auto box = LatticeBox::cube(3, 5);
  std::mt19937_64 gen(8);
  std::vector<std::uint8_t> open(box.num_edges());
  for (auto& o : open) o = gen() % 3 != 0;
  PassageWeights w{box, WeightMode::Edge, std::vector<double>(box.num_edges())};
  for (Index e = 0; e < box.num_edges(); ++e) w.values[e] = open[e] ? 1.0 : kInfinity;
  EXPECT_EQ(chemical_distances(box, open, {62}).distance, fpp_distances(w, {62}).distance);
}

TEST(ShapeBall, NestedAndContainsSource) {
  const auto box = LatticeBox::cube(2, 15);
  std::mt19937_64 gen(4);
  const auto w = random_table(box, WeightMode::Edge, false, gen);
  const Index c = box.center();
  const auto b1 = shape_ball(w, c, 1.0), b2 = shape_ball(w, c, 3.0);
  EXPECT_TRUE(std::binary_search(b1.begin(), b1.end(), c));
  EXPECT_TRUE(std::includes(b2.begin(), b2.end(), b1.begin(), b1.end()));
  const auto cst = shape_ball(PassageWeights{box, WeightMode::Edge, std::vector<double>(box.num_edges(), 1.0)}, c, 2.0);
  EXPECT_EQ(cst.size(), 13u);  // ℓ1 ball of radius 2
}

TEST(ZeroCluster, AgreesWithZeroDistance) {
  std::mt19937_64 gen(12);
  for (int t = 0; t < 40; ++t) {
    const auto box = LatticeBox::cube(2, 6);
    const auto mode = t % 2 ? WeightMode::Vertex : WeightMode::Edge;
    const auto w = random_table(box, mode, true, gen);
    const Index s = gen() % box.num_vertices();
    const auto d = fpp_distances(w, {s});
    for (Index v = 0; v < box.num_vertices(); ++v) EXPECT_EQ(zero_cluster_criterion(w, s, v), d[v] == 0.0);
  }
}

TEST(ZeroCluster, VertexModeNeedsZeroEndpoints) {
  const auto box = LatticeBox::cube(1, 3);
  PassageWeights w{box, WeightMode::Vertex, {1.0, 0.0, 0.0}};
  EXPECT_FALSE(zero_cluster_criterion(w, 0, 2));
  EXPECT_TRUE(zero_cluster_criterion(w, 1, 2));
  PassageWeights e{box, WeightMode::Edge, {1.0, 0.0}};
  EXPECT_TRUE(zero_cluster_criterion(e, 0, 0));
  EXPECT_FALSE(zero_cluster_criterion(e, 0, 1));
}
