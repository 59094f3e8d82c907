#pragma once

// Scale sequences used by multi-scale renormalization arguments:
//   L_{k+1} = 2 L_k (1 + ρ_k / (k+6)^δ),  ρ_k = ρ for k < K, 1 afterwards,
//   a_k = 2^k Π_{i<k} (1 - (i+6)^{-δ}),   ε_k = ε Σ_{p>=k} (p+6)^{-δ}.

#include <cmath>
#include <stdexcept>
#include <vector>

namespace fpplab {

/// Hurwitz zeta ζ(s, a) = Σ_{j>=0} (a+j)^{-s} for s > 1, a > 0, by
/// Euler–Maclaurin after a few explicit terms.
inline double hurwitz_zeta(double s, double a) {
  if (!(s > 1.0) || !(a > 0.0)) throw std::domain_error("hurwitz_zeta: need s > 1, a > 0");
  constexpr int kDirect = 12;
  // B_{2j} / (2j)!
  constexpr double kB[] = {1.0 / 12, -1.0 / 720, 1.0 / 30240, -1.0 / 1209600, 1.0 / 47900160,
                           -691.0 / 1307674368000.0};
  double sum = 0.0;
  for (int j = 0; j < kDirect; ++j) sum += std::pow(a + j, -s);
  const double x = a + kDirect;
  sum += std::pow(x, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(x, -s);
  // (s)(s+1)...(s+2j-2) x^{-s-2j+1}
  double rising = s;
  double xp = std::pow(x, -s - 1.0);
  for (int j = 0; j < 6; ++j) {
    sum += kB[j] * rising * xp;
    rising *= (s + 2 * j + 1) * (s + 2 * j + 2);
    xp /= x * x;
  }
  return sum;
}

struct ScaleSchedule {
  double delta = 2.0, rho = 1.0, L0 = 1.0;
  int K = 0, k_max = 0;
  std::vector<double> L, rho_k, a;
  double product_bound = 1.0;  // sup_k L_k / (2^k L0)

  /// ε_k(ε) for k = 0..k_max.
  std::vector<double> epsilon(double eps) const {
    std::vector<double> out(k_max + 1);
    for (int k = 0; k <= k_max; ++k) out[k] = eps * hurwitz_zeta(delta, k + 6.0);
    return out;
  }

  double normalized(int k) const { return L[k] / (std::ldexp(1.0, k) * L0); }
};

inline ScaleSchedule build_scale_schedule(double delta, double rho, int K, double L0, int k_max) {
  if (!(delta > 1.0)) throw std::invalid_argument("schedule: delta must be > 1 (the ε_k series diverges otherwise)");
  if (!(rho > 0.0)) throw std::invalid_argument("schedule: rho must be > 0");
  if (!(L0 > 0.0)) throw std::invalid_argument("schedule: L0 must be > 0");
  if (K < 0 || k_max < 0) throw std::invalid_argument("schedule: K and k_max must be >= 0");
  ScaleSchedule s;
  s.delta = delta;
  s.rho = rho;
  s.K = K;
  s.L0 = L0;
  s.k_max = k_max;
  s.L.resize(k_max + 1);
  s.rho_k.resize(k_max + 1);
  s.a.resize(k_max + 1);
  s.L[0] = L0;
  s.a[0] = 1.0;
  for (int k = 0; k <= k_max; ++k) {
    s.rho_k[k] = k < K ? rho : 1.0;
    if (k == k_max) break;
    const double w = std::pow(k + 6.0, -delta);
    s.L[k + 1] = 2.0 * s.L[k] * (1.0 + s.rho_k[k] * w);
    s.a[k + 1] = 2.0 * s.a[k] * (1.0 - w);
  }
  // Π (1 + x_i) <= exp(Σ x_i), summed over all i >= 0.
  const double tail_all = hurwitz_zeta(delta, 6.0);
  const double tail_K = hurwitz_zeta(delta, K + 6.0);
  s.product_bound = std::exp(rho * (tail_all - tail_K) + tail_K);
  return s;
}

}  // namespace fpplab
