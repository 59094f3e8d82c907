#pragma once

// Symmetric nearest-neighbor operators on a box and a Jacobi-preconditioned
// conjugate gradient solver.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "fpplab/lattice.hpp"

namespace fpplab {

/**
 * (A f)(x) = diag(x) f(x) - Σ_{y~x in box} c({x,y}) f(y).
 *
 * With `active` set, rows of inactive vertices act as the identity and no
 * coupling crosses between active and inactive vertices; this encodes
 * Dirichlet data on the inactive set while keeping A symmetric.
 */
struct LatticeOperator {
  LatticeBox box;
  std::vector<double> diag;
  std::vector<double> conductance;  // per edge; empty means all ones
  std::vector<std::uint8_t> active;  // empty means all active

  double edge_weight(Index e) const { return conductance.empty() ? 1.0 : conductance[e]; }
  bool is_active(Index v) const { return active.empty() || active[v]; }

  void apply(const std::vector<double>& f, std::vector<double>& out) const {
    const Index n = box.num_vertices();
    out.resize(n);
    for (Index v = 0; v < n; ++v) {
      if (!is_active(v)) {
        out[v] = f[v];
        continue;
      }
      double acc = diag[v] * f[v];
      box.for_each_neighbor(v, [&](Index w, Index e) {
        if (is_active(w)) acc -= edge_weight(e) * f[w];
      });
      out[v] = acc;
    }
  }

  double diagonal(Index v) const { return is_active(v) ? diag[v] : 1.0; }
};

/// Homogeneous Dirichlet Laplacian plus a constant mass: diag = 2d + mass.
inline LatticeOperator dirichlet_laplacian(const LatticeBox& box, double mass = 0.0) {
  LatticeOperator op;
  op.box = box;
  op.diag.assign(box.num_vertices(), 2.0 * box.dim() + mass);
  return op;
}

struct SolveStats {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

struct CgOptions {
  double tolerance = 1e-10;  // on ||b - A x|| / ||b||
  int max_iterations = 100000;
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  // Pairwise-by-blocks accumulation keeps the rounding error flat in n.
  constexpr std::size_t kBlock = 1024;
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); i += kBlock) {
    double s = 0.0;
    const std::size_t end = std::min(a.size(), i + kBlock);
    for (std::size_t j = i; j < end; ++j) s += a[j] * b[j];
    total += s;
  }
  return total;
}
}  // namespace detail

/// Solves A x = b; x holds the initial guess on entry. Throws SolverError on
/// hitting the iteration cap.
inline SolveStats conjugate_gradient(const LatticeOperator& A, const std::vector<double>& b,
                                     std::vector<double>& x, const CgOptions& opt = {}) {
  const std::size_t n = b.size();
  if (static_cast<Index>(n) != A.box.num_vertices())
    throw std::invalid_argument("conjugate_gradient: size mismatch");
  x.resize(n, 0.0);
  std::vector<double> inv_diag(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double dg = A.diagonal(static_cast<Index>(i));
    if (!(dg > 0.0)) throw std::invalid_argument("conjugate_gradient: operator is not positive definite");
    inv_diag[i] = 1.0 / dg;
  }
  std::vector<double> r(n), z(n), p(n), Ap(n);
  A.apply(x, Ap);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - Ap[i];
  const double bnorm = std::sqrt(detail::dot(b, b));
  SolveStats st;
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    st.converged = true;
    return st;
  }
  for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
  p = z;
  double rz = detail::dot(r, z);
  for (st.iterations = 0; st.iterations < opt.max_iterations; ++st.iterations) {
    st.relative_residual = std::sqrt(detail::dot(r, r)) / bnorm;
    if (st.relative_residual <= opt.tolerance) {
      // The recursive residual drifts at tight tolerances; confirm with the
      // true one and restart from it if needed.
      A.apply(x, Ap);
      for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - Ap[i];
      st.relative_residual = std::sqrt(detail::dot(r, r)) / bnorm;
      if (st.relative_residual <= opt.tolerance) {
        st.converged = true;
        return st;
      }
      for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
      p = z;
      rz = detail::dot(r, z);
    }
    A.apply(p, Ap);
    const double alpha = rz / detail::dot(p, Ap);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    const double rz_next = detail::dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  // Recompute the true residual before giving up.
  A.apply(x, Ap);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - Ap[i];
  st.relative_residual = std::sqrt(detail::dot(r, r)) / bnorm;
  if (st.relative_residual <= opt.tolerance) {
    st.converged = true;
    return st;
  }
  throw SolverError("conjugate_gradient: no convergence after " + std::to_string(opt.max_iterations) +
                    " iterations (relative residual " + std::to_string(st.relative_residual) + ")");
}

}  // namespace fpplab
