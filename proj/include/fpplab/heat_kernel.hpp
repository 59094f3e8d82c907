#pragma once

// Heat kernel p(t,x,y) = P_x[X_t = y] / θ(y) of the killed conductance walk.
//
// With A = θ(-L_θ) (symmetric, see rcm_operator) and S = -Θ^{-1/2} A Θ^{-1/2},
//   p(t,x,y) = θ(x)^{-1/2} θ(y)^{-1/2} [exp(tS)]_{xy}.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include "fpplab/rcm.hpp"

namespace fpplab {

enum class HeatMethod { ExactSmall, Krylov, MonteCarlo };

inline const char* to_string(HeatMethod m) {
  switch (m) {
    case HeatMethod::ExactSmall: return "exact-small";
    case HeatMethod::Krylov: return "krylov";
    case HeatMethod::MonteCarlo: return "monte-carlo";
  }
  return "?";
}

inline HeatMethod heat_method_from_string(const std::string& s) {
  if (s == "exact-small") return HeatMethod::ExactSmall;
  if (s == "krylov") return HeatMethod::Krylov;
  if (s == "monte-carlo") return HeatMethod::MonteCarlo;
  throw std::invalid_argument("unknown heat-kernel method '" + s + "'");
}

struct HeatKernelSlice {
  double t = 0.0;
  Index x = 0;
  std::vector<double> p;        // density w.r.t. θ
  std::vector<double> p_error;  // Monte Carlo standard errors (empty otherwise)
  HeatMethod method = HeatMethod::ExactSmall;
  double error_estimate = 0.0;
  double mass = 0.0;  // Σ_y p θ(y)
};

inline constexpr Index kExactHeatMaxVertices = 4096;

namespace detail {
inline double slice_mass(const ConductanceEnvironment& env, const std::vector<double>& p) {
  std::vector<double> m(p.size());
  for (std::size_t y = 0; y < p.size(); ++y) m[y] = p[y] * env.theta[y];
  return stable_sum(m);
}
}  // namespace detail

/// Dense eigendecomposition of S for small boxes; reusable across t and x.
class ExactHeatKernel {
 public:
  explicit ExactHeatKernel(const ConductanceEnvironment& env, Boundary boundary = Boundary::Absorbing)
      : env_(env) {
    env.validate();
    const Index n = env.box.num_vertices();
    if (n > kExactHeatMaxVertices)
      throw std::invalid_argument("exact heat kernel: box has " + std::to_string(n) + " vertices, limit " +
                                  std::to_string(kExactHeatMaxVertices));
    const auto op = rcm_operator(env, boundary);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    for (Index v = 0; v < n; ++v) {
      M(v, v) = op.diag[v] / env.theta[v];
      env.box.for_each_neighbor(v, [&](Index w, Index e) {
        M(v, w) = -env.a[e] / std::sqrt(env.theta[v] * env.theta[w]);
      });
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    if (es.info() != Eigen::Success) throw std::runtime_error("exact heat kernel: eigensolver failed");
    lambda_ = es.eigenvalues();  // of -S, ascending
    V_ = es.eigenvectors();
  }

  const Eigen::VectorXd& eigenvalues() const { return lambda_; }

  HeatKernelSlice slice(Index x, double t) const {
    if (!(t >= 0.0)) throw std::invalid_argument("heat kernel: t must be >= 0");
    const Index n = env_.box.num_vertices();
    Eigen::VectorXd c = V_.row(x).transpose();
    for (Index k = 0; k < n; ++k) c[k] *= std::exp(-t * lambda_[k]);
    const Eigen::VectorXd w = V_ * c;
    HeatKernelSlice s;
    s.t = t;
    s.x = x;
    s.method = HeatMethod::ExactSmall;
    s.p.resize(n);
    for (Index y = 0; y < n; ++y) s.p[y] = std::max(0.0, w[y]) / std::sqrt(env_.theta[x] * env_.theta[y]);
    if (t == 0.0) {
      std::fill(s.p.begin(), s.p.end(), 0.0);
      s.p[x] = 1.0 / env_.theta[x];
    }
    s.error_estimate = 64.0 * std::numeric_limits<double>::epsilon();
    s.mass = detail::slice_mass(env_, s.p);
    return s;
  }

  /// ∫_0^∞ p(t,x,·) dt by composite Gauss–Legendre on geometric panels, plus
  /// an analytic bound on the neglected tail. Returns the bound in `tail`.
  std::vector<double> integrate(Index x, double& tail) const {
    const Index n = env_.box.num_vertices();
    const double lmin = lambda_[0], lmax = lambda_[n - 1];
    if (!(lmin > 0.0)) throw std::runtime_error("heat kernel quadrature: operator is not positive definite");
    using Rule = boost::math::quadrature::gauss<double, 30>;
    const auto& nodes = Rule::abscissa();
    const auto& weights = Rule::weights();
    const Eigen::VectorXd vx = V_.row(x).transpose();
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
    auto add_node = [&](double t, double w) {
      Eigen::VectorXd c = vx;
      for (Index k = 0; k < n; ++k) c[k] *= std::exp(-t * lambda_[k]);
      acc += w * c;
    };
    // The integrand in spectral coordinates is e^{-λ t}; panels grow by 2
    // from 1/λ_max until e^{-λ_min T} is negligible.
    const double T = 40.0 / lmin;
    double a = 0.0, b = 1.0 / lmax;
    while (a < T) {
      const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i] == 0.0) {
          add_node(mid, half * weights[i]);
        } else {
          add_node(mid - half * nodes[i], half * weights[i]);
          add_node(mid + half * nodes[i], half * weights[i]);
        }
      }
      a = b;
      b *= 2.0;
    }
    const Eigen::VectorXd g = V_ * acc;
    std::vector<double> out(n);
    double vnorm = 0.0;
    for (Index k = 0; k < n; ++k) vnorm += std::abs(vx[k]);
    tail = std::exp(-lmin * a) / lmin * vnorm;
    for (Index y = 0; y < n; ++y) out[y] = g[y] / std::sqrt(env_.theta[x] * env_.theta[y]);
    return out;
  }

 private:
  ConductanceEnvironment env_;
  Eigen::VectorXd lambda_;
  Eigen::MatrixXd V_;
};

struct KrylovOptions {
  int subspace = 40;
  double tolerance = 1e-10;  // per-step error relative to the propagated vector norm
};

/**
 * exp(tS) δ_x at increasing times by Lanczos with full reorthogonalization.
 * Each step uses the a-posteriori estimate β_m |[exp(τT_m)]_{m,1}| ‖v‖ and
 * halves τ until it is below tolerance; the accumulated estimate is reported.
 */
inline std::vector<HeatKernelSlice> krylov_heat_kernel(const ConductanceEnvironment& env, Index x,
                                                       std::vector<double> times, Boundary boundary = Boundary::Absorbing,
                                                       const KrylovOptions& opt = {}) {
  env.validate();
  if (times.empty()) throw std::invalid_argument("krylov heat kernel: empty time grid");
  for (std::size_t i = 0; i < times.size(); ++i)
    if (!(times[i] >= 0.0) || (i > 0 && times[i] < times[i - 1]))
      throw std::invalid_argument("krylov heat kernel: times must be non-negative and non-decreasing");
  const Index n = env.box.num_vertices();
  const auto op = rcm_operator(env, boundary);
  std::vector<double> inv_sqrt_theta(n);
  for (Index v = 0; v < n; ++v) inv_sqrt_theta[v] = 1.0 / std::sqrt(env.theta[v]);
  // y = (-S) v
  std::vector<double> tmp(n), tmp_out(n);
  auto apply_negS = [&](const std::vector<double>& v, std::vector<double>& y) {
    for (Index i = 0; i < n; ++i) tmp[i] = v[i] * inv_sqrt_theta[i];
    op.apply(tmp, tmp_out);
    y.resize(n);
    for (Index i = 0; i < n; ++i) y[i] = tmp_out[i] * inv_sqrt_theta[i];
  };
  const int m_max = std::max(2, static_cast<int>(std::min<Index>(opt.subspace, n)));
  std::vector<std::vector<double>> Q(m_max + 1, std::vector<double>(n));
  std::vector<double> v(n, 0.0), w(n);
  v[x] = 1.0;
  double t_now = 0.0, err_total = 0.0;
  double tau = times.back() > 0 ? times.back() : 1.0;

  // One Lanczos step of length `step` from v; returns false if too inaccurate.
  auto try_step = [&](double step, std::vector<double>& out, double& err) {
    const double beta0 = std::sqrt(detail::dot(v, v));
    if (beta0 == 0.0) {
      out.assign(n, 0.0);
      err = 0.0;
      return true;
    }
    for (Index i = 0; i < n; ++i) Q[0][i] = v[i] / beta0;
    std::vector<double> alpha, beta;
    int m = 0;
    bool breakdown = false;
    for (; m < m_max; ++m) {
      apply_negS(Q[m], w);
      // T = Q^T (-S) Q; we store the tridiagonal of -S and exponentiate -T.
      for (int pass = 0; pass < 2; ++pass)
        for (int j = 0; j <= m; ++j) {
          const double c = detail::dot(Q[j], w);
          if (pass == 0 && j == m) alpha.push_back(c);
          for (Index i = 0; i < n; ++i) w[i] -= c * Q[j][i];
        }
      const double b = std::sqrt(detail::dot(w, w));
      beta.push_back(b);
      if (b < 1e-14 * std::abs(alpha.back()) + 1e-300) {
        breakdown = true;
        ++m;
        break;
      }
      for (Index i = 0; i < n; ++i) Q[m + 1][i] = w[i] / b;
    }
    const int k = breakdown ? m : m_max;
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k, k);
    for (int i = 0; i < k; ++i) {
      T(i, i) = alpha[i];
      if (i + 1 < k) T(i, i + 1) = T(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    const Eigen::VectorXd ev = es.eigenvalues();
    const Eigen::MatrixXd U = es.eigenvectors();
    Eigen::VectorXd e1 = U.row(0).transpose();
    for (int i = 0; i < k; ++i) e1[i] *= std::exp(-step * ev[i]);
    const Eigen::VectorXd coef = U * e1;  // exp(-step T) e_1
    err = breakdown ? 0.0 : beta[k - 1] * std::abs(coef[k - 1]) * beta0;
    if (err > opt.tolerance * beta0) return false;
    out.assign(n, 0.0);
    for (int j = 0; j < k; ++j)
      for (Index i = 0; i < n; ++i) out[i] += beta0 * coef[j] * Q[j][i];
    return true;
  };

  std::vector<HeatKernelSlice> slices;
  std::vector<double> next;
  for (double target : times) {
    while (t_now < target) {
      double step = std::min(tau, target - t_now);
      double err = 0.0;
      while (!try_step(step, next, err)) {
        step *= 0.5;
        if (step < 1e-12 * std::max(1.0, target))
          throw std::runtime_error("krylov heat kernel: step size underflow");
      }
      // Success: keep the step for next time, try doubling when it was easy.
      tau = err < 0.01 * opt.tolerance * std::sqrt(detail::dot(v, v)) ? 2.0 * step : step;
      err_total += err;
      t_now += step;
      v.swap(next);
    }
    HeatKernelSlice s;
    s.t = target;
    s.x = x;
    s.method = HeatMethod::Krylov;
    s.p.resize(n);
    for (Index y = 0; y < n; ++y) s.p[y] = std::max(0.0, v[y]) * inv_sqrt_theta[x] * inv_sqrt_theta[y];
    s.error_estimate = err_total * inv_sqrt_theta[x];
    s.mass = detail::slice_mass(env, s.p);
    slices.push_back(std::move(s));
  }
  return slices;
}

/// Empirical P_x[X_t = y] / θ(y) from independent walks.
inline HeatKernelSlice monte_carlo_heat_kernel(const ConductanceEnvironment& env, Index x, double t,
                                               std::int64_t walks, const RngStream& stream,
                                               Boundary boundary = Boundary::Absorbing) {
  if (walks < 2) throw std::invalid_argument("monte-carlo heat kernel: need >= 2 walks");
  const Index n = env.box.num_vertices();
  std::vector<std::int64_t> count(n, 0);
  for (std::int64_t w = 0; w < walks; ++w) {
    const auto tr = simulate_killed_walk(env, x, t, stream.with_replica(static_cast<std::uint64_t>(w)), boundary);
    if (tr.end == WalkEnd::Horizon || tr.end == WalkEnd::Frozen) ++count[tr.vertices.back()];
  }
  HeatKernelSlice s;
  s.t = t;
  s.x = x;
  s.method = HeatMethod::MonteCarlo;
  s.p.resize(n);
  s.p_error.resize(n);
  const double N = double(walks);
  for (Index y = 0; y < n; ++y) {
    const double q = double(count[y]) / N;
    s.p[y] = q / env.theta[y];
    s.p_error[y] = std::sqrt(q * (1.0 - q) / N) / env.theta[y];
    s.error_estimate = std::max(s.error_estimate, s.p_error[y]);
  }
  s.mass = detail::slice_mass(env, s.p);
  return s;
}

inline HeatKernelSlice heat_kernel(const ConductanceEnvironment& env, Index x, double t, HeatMethod method,
                                   const RngStream& stream = {}, std::int64_t walks = 0,
                                   Boundary boundary = Boundary::Absorbing) {
  if (x < 0 || x >= env.box.num_vertices()) throw std::out_of_range("heat_kernel: vertex outside box");
  if (!(t >= 0.0)) throw std::invalid_argument("heat_kernel: t must be >= 0");
  switch (method) {
    case HeatMethod::ExactSmall: return ExactHeatKernel(env, boundary).slice(x, t);
    case HeatMethod::Krylov: return krylov_heat_kernel(env, x, {t}, boundary).front();
    case HeatMethod::MonteCarlo:
      if (walks < 2) throw std::invalid_argument("heat_kernel: monte-carlo needs a walk budget");
      return monte_carlo_heat_kernel(env, x, t, walks, stream, boundary);
  }
  throw std::invalid_argument("heat_kernel: unknown method");
}

}  // namespace fpplab
