#pragma once

// Discrete Gaussian free field with zero boundary condition outside a box.
//
// The covariance is the Green function of -L with (L f)(x) = Σ_{y~x} (f(y) - f(x))
// killed on leaving the box. In the sine eigenbasis of the Dirichlet
// Laplacian this covariance is diagonal, so a field is a sine transform of
// independent normals scaled by λ_k^{-1/2}.

#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

#include "fpplab/field.hpp"
#include "fpplab/lattice.hpp"
#include "fpplab/linear_solve.hpp"
#include "fpplab/rng.hpp"

namespace fpplab {

enum class SineBackend { Fftw, Direct };

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

/// Unnormalized DST-I along every axis: Y_k = Σ_j 2 sin(π (j+1)(k+1)/(n+1)) X_j.
class SineTransform {
 public:
  SineTransform(const LatticeBox& box, SineBackend backend) : box_(box), backend_(backend) {
    if (backend_ == SineBackend::Fftw) {
      std::vector<int> dims(box.dim());
      for (int a = 0; a < box.dim(); ++a) {
        if (box.sides()[a] > std::numeric_limits<int>::max())
          throw std::length_error("sine transform: side too large");
        dims[a] = static_cast<int>(box.sides()[a]);
      }
      std::vector<fftw_r2r_kind> kinds(box.dim(), FFTW_RODFT00);
      double* scratch = fftw_alloc_real(static_cast<std::size_t>(box.num_vertices()));
      if (!scratch) throw std::length_error("sine transform: box too large for the transform workspace");
      std::lock_guard lock(fftw_planner_mutex());
      plan_ = fftw_plan_r2r(box.dim(), dims.data(), scratch, scratch, kinds.data(),
                            FFTW_ESTIMATE | FFTW_UNALIGNED);
      fftw_free(scratch);
      if (!plan_) throw std::runtime_error("sine transform: FFTW planning failed");
    }
  }
  ~SineTransform() {
    if (plan_) {
      std::lock_guard lock(fftw_planner_mutex());
      fftw_destroy_plan(plan_);
    }
  }
  SineTransform(const SineTransform&) = delete;
  SineTransform& operator=(const SineTransform&) = delete;

  void apply(std::vector<double>& data) const {
    if (backend_ == SineBackend::Fftw) {
      fftw_execute_r2r(plan_, data.data(), data.data());
      return;
    }
    // Separable direct transform, O(N Σ n_a).
    std::vector<double> line, out;
    for (int a = 0; a < box_.dim(); ++a) {
      const Index n = box_.sides()[a];
      const Index stride = box_.stride(a);
      std::vector<double> kernel(n * n);
      for (Index j = 0; j < n; ++j)
        for (Index k = 0; k < n; ++k)
          kernel[j * n + k] = 2.0 * std::sin(std::numbers::pi * double(j + 1) * double(k + 1) / double(n + 1));
      line.resize(n);
      out.resize(n);
      for (Index v = 0; v < box_.num_vertices(); ++v) {
        if (box_.local_coord(v, a) != 0) continue;
        for (Index j = 0; j < n; ++j) line[j] = data[v + j * stride];
        for (Index k = 0; k < n; ++k) {
          double s = 0.0;
          for (Index j = 0; j < n; ++j) s += kernel[k * n + j] * line[j];
          out[k] = s;
        }
        for (Index k = 0; k < n; ++k) data[v + k * stride] = out[k];
      }
    }
  }

 private:
  LatticeBox box_;
  SineBackend backend_;
  fftw_plan plan_ = nullptr;
};

/// 1D Dirichlet Laplacian eigenvalues 2 - 2 cos(π k / (n + 1)), k = 1..n.
inline std::vector<double> dirichlet_eigenvalues_1d(Index n) {
  std::vector<double> lam(n);
  for (Index k = 0; k < n; ++k) lam[k] = 2.0 - 2.0 * std::cos(std::numbers::pi * double(k + 1) / double(n + 1));
  return lam;
}

}  // namespace detail

/**
 * Exact sampler for the Dirichlet GFF on a fixed box. Holds the transform
 * plan, so one instance per worker; `sample` itself is const and reentrant.
 */
class DirichletGffSampler {
 public:
  static constexpr const char* kName = "gff-dirichlet-spectral";

  explicit DirichletGffSampler(const LatticeBox& box, SineBackend backend = SineBackend::Fftw)
      : box_(box), transform_(box, backend) {
    normalization_ = 1.0;
    for (auto n : box.sides()) {
      eig_.push_back(detail::dirichlet_eigenvalues_1d(n));
      normalization_ /= std::sqrt(2.0 * double(n + 1));
    }
  }

  const LatticeBox& box() const { return box_; }

  /// With `flip_sign`, the normal deviates are negated, which yields exactly -φ.
  ScalarField sample(const RngStream& stream, bool flip_sign = false) const {
    RandomSource rng(stream);
    const int d = box_.dim();
    std::vector<double> data(box_.num_vertices());
    std::vector<Index> k(d, 0);
    for (Index v = 0; v < box_.num_vertices(); ++v) {
      double lam = 0.0;
      for (int a = 0; a < d; ++a) lam += eig_[a][k[a]];
      const double z = rng.normal();
      data[v] = (flip_sign ? -z : z) * normalization_ / std::sqrt(lam);
      for (int a = d - 1; a >= 0; --a) {
        if (++k[a] < box_.sides()[a]) break;
        k[a] = 0;
      }
    }
    transform_.apply(data);
    ScalarField f;
    f.box = box_;
    f.values = std::move(data);
    f.provenance = {kName, stream, {{"box", box_to_json(box_)}}};
    return f;
  }

 private:
  LatticeBox box_;
  detail::SineTransform transform_;
  std::vector<std::vector<double>> eig_;
  double normalization_ = 1.0;
};

inline ScalarField sample_gff_dirichlet(const LatticeBox& box, const RngStream& stream,
                                        SineBackend backend = SineBackend::Fftw) {
  return DirichletGffSampler(box, backend).sample(stream);
}

/// Column y of the Dirichlet Green function, solving -L g = δ_y in the box.
inline std::vector<double> dirichlet_green_column(const LatticeBox& box, Index y,
                                                  const CgOptions& opt = {}) {
  if (y < 0 || y >= box.num_vertices()) throw std::out_of_range("dirichlet_green: vertex outside box");
  const auto A = dirichlet_laplacian(box);
  std::vector<double> b(box.num_vertices(), 0.0), g;
  b[y] = 1.0;
  conjugate_gradient(A, b, g, opt);
  return g;
}

inline double dirichlet_green(const LatticeBox& box, Index x, Index y, const CgOptions& opt = {}) {
  if (x < 0 || x >= box.num_vertices()) throw std::out_of_range("dirichlet_green: vertex outside box");
  return dirichlet_green_column(box, y, opt)[x];
}

}  // namespace fpplab
