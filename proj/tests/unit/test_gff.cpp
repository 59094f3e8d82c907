#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "fpplab/gff.hpp"
#include "fpplab/stats.hpp"

using namespace fpplab;

namespace {

// Dense inverse of the Dirichlet Laplacian with generator Σ_{y~x}(f(y) - f(x)).
Eigen::MatrixXd dense_green(const LatticeBox& box) {
  const Index n = box.num_vertices();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (Index v = 0; v < n; ++v) {
    A(v, v) = 2.0 * box.dim();
    box.for_each_neighbor(v, [&](Index w, Index) { A(v, w) = -1.0; });
  }
  return A.inverse();
}

}  // namespace

TEST(DirichletGreen, MatchesDenseInverse) {
  const auto box = LatticeBox::build(3, {4, 3, 5});
  const auto G = dense_green(box);
  for (Index y : {0, 7, 31, 59}) {
    const auto col = dirichlet_green_column(box, y, {1e-13, 1000});
    for (Index x = 0; x < box.num_vertices(); ++x) EXPECT_NEAR(col[x], G(x, y), 1e-11);
  }
}

TEST(DirichletGreen, SingleSite) {
  for (int d = 1; d <= 4; ++d)
    EXPECT_NEAR(dirichlet_green(LatticeBox::cube(d, 1), 0, 0), 1.0 / (2.0 * d), 1e-15);
}

TEST(DirichletGreen, OneDimensionalClosedForm) {
  // Inverse of tridiag(-1, 2, -1): G(i,j) = i (n+1-j) / (n+1) for i <= j.
  const Index n = 9;
  const auto box = LatticeBox::cube(1, n);
  for (Index j = 0; j < n; ++j) {
    const auto col = dirichlet_green_column(box, j, {1e-14, 1000});
    for (Index i = 0; i < n; ++i) {
      const double a = std::min(i, j) + 1, b = std::max(i, j) + 1;
      EXPECT_NEAR(col[i], a * (n + 1 - b) / (n + 1), 1e-12);
    }
  }
}

TEST(GffSampler, BackendsAgree) {
  const auto box = LatticeBox::build(3, {5, 4, 6});
  const DirichletGffSampler fast(box, SineBackend::Fftw), slow(box, SineBackend::Direct);
  for (std::uint64_t r = 0; r < 3; ++r) {
    const auto a = fast.sample({11, r, 0}), b = slow.sample({11, r, 0});
    for (Index v = 0; v < box.num_vertices(); ++v) EXPECT_NEAR(a[v], b[v], 1e-12);
  }
}

TEST(GffSampler, FlipSignIsExactNegation) {
  const auto box = LatticeBox::cube(2, 7);
  const DirichletGffSampler s(box);
  const auto a = s.sample({5, 2, 0}), b = s.sample({5, 2, 0}, true);
  for (Index v = 0; v < box.num_vertices(); ++v) EXPECT_EQ(a[v], -b[v]);
}

TEST(GffSampler, Reproducible) {
  const auto box = LatticeBox::cube(3, 6);
  const auto a = sample_gff_dirichlet(box, {1, 4, 0});
  const auto b = sample_gff_dirichlet(box, {1, 4, 0});
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.provenance.sampler, DirichletGffSampler::kName);
}

TEST(GffSampler, CovarianceMatchesGreen) {
  const auto box = LatticeBox::build(2, {3, 4});
  const auto G = dense_green(box);
  const DirichletGffSampler s(box);
  const int n = 20000;
  const Index N = box.num_vertices();
  std::vector<std::vector<double>> prod(N * N, std::vector<double>(n));
  for (int r = 0; r < n; ++r) {
    const auto phi = s.sample({77, std::uint64_t(r), 0});
    for (Index x = 0; x < N; ++x)
      for (Index y = 0; y < N; ++y) prod[x * N + y][r] = phi[x] * phi[y];
  }
  for (Index x = 0; x < N; ++x)
    for (Index y = x; y < N; ++y) {
      const auto sm = summarize(prod[x * N + y]);
      EXPECT_LT(std::abs(sm.mean - G(x, y)), 4.5 * sm.std_error()) << x << "," << y;
    }
}
