#pragma once

// Passage-time builders: i.i.d. baselines and monotone functionals of a field.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "fpplab/field.hpp"
#include "fpplab/lattice.hpp"
#include "fpplab/rng.hpp"

namespace fpplab {

namespace law {
struct Constant {
  double c = 1.0;
};
struct BernoulliZero {
  double p = 0.5;  // probability of a zero weight; otherwise 1
};
struct Exponential {
  double rate = 1.0;
};
struct Lognormal {
  double mu = 0.0, sigma = 1.0;
};
}  // namespace law

using IidLaw = std::variant<law::Constant, law::BernoulliZero, law::Exponential, law::Lognormal>;

inline void validate_law(const IidLaw& l) {
  std::visit(
      [](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, law::Constant>) {
          if (!(x.c >= 0.0)) throw std::invalid_argument("constant law: c must be >= 0");
        } else if constexpr (std::is_same_v<T, law::BernoulliZero>) {
          if (!(x.p >= 0.0 && x.p <= 1.0)) throw std::invalid_argument("bernoulli-zero law: p must lie in [0,1]");
        } else if constexpr (std::is_same_v<T, law::Exponential>) {
          if (!(x.rate > 0.0) || !std::isfinite(x.rate))
            throw std::invalid_argument("exponential law: rate must be > 0");
        } else {
          if (!std::isfinite(x.mu) || !(x.sigma >= 0.0) || !std::isfinite(x.sigma))
            throw std::invalid_argument("lognormal law: need finite mu and sigma >= 0");
        }
      },
      l);
}

inline json law_to_json(const IidLaw& l) {
  return std::visit(
      [](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, law::Constant>) return {{"law", "constant"}, {"c", x.c}};
        else if constexpr (std::is_same_v<T, law::BernoulliZero>) return {{"law", "bernoulli-zero"}, {"p", x.p}};
        else if constexpr (std::is_same_v<T, law::Exponential>) return {{"law", "exponential"}, {"rate", x.rate}};
        else return {{"law", "lognormal"}, {"mu", x.mu}, {"sigma", x.sigma}};
      },
      l);
}

inline PassageWeights sample_iid_weights(const LatticeBox& box, const IidLaw& l, WeightMode mode,
                                         const RngStream& stream) {
  validate_law(l);
  PassageWeights w;
  w.box = box;
  w.mode = mode;
  w.values.resize(w.expected_size());
  RandomSource rng(stream);
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        for (auto& v : w.values) {
          if constexpr (std::is_same_v<T, law::Constant>) v = x.c;
          else if constexpr (std::is_same_v<T, law::BernoulliZero>) v = rng.uniform() < x.p ? 0.0 : 1.0;
          else if constexpr (std::is_same_v<T, law::Exponential>) v = rng.exponential(x.rate);
          else v = std::exp(x.mu + x.sigma * rng.normal());
        }
      },
      l);
  return w;
}

// --------------------------------------------------------------------------
// Decreasing functionals f of the field value.

namespace functional {
/// f(t) = 1{t < h}.
struct IndicatorBelow {
  double h = 0.0;
};
/// Piecewise linear through (x_i, y_i), clamped outside the knots.
struct Tabulated {
  std::vector<double> x, y;
};
/// f(t) = exp(-γ t).
struct ExpDecay {
  double gamma = 1.0;
};
}  // namespace functional

using FieldFunctional = std::variant<functional::IndicatorBelow, functional::Tabulated, functional::ExpDecay>;

inline void validate_functional(const FieldFunctional& f) {
  if (const auto* t = std::get_if<functional::Tabulated>(&f)) {
    if (t->x.empty() || t->x.size() != t->y.size())
      throw std::invalid_argument("tabulated functional: need matching, non-empty knot lists");
    for (std::size_t i = 0; i < t->x.size(); ++i) {
      if (!std::isfinite(t->x[i]) || !std::isfinite(t->y[i]) || t->y[i] < 0.0)
        throw std::invalid_argument("tabulated functional: knots must be finite with y >= 0");
      if (i > 0 && !(t->x[i] > t->x[i - 1]))
        throw std::invalid_argument("tabulated functional: knot abscissae must increase");
      if (i > 0 && t->y[i] > t->y[i - 1])
        throw std::invalid_argument("tabulated functional: f must be non-increasing");
    }
  } else if (const auto* e = std::get_if<functional::ExpDecay>(&f)) {
    if (!(e->gamma >= 0.0) || !std::isfinite(e->gamma))
      throw std::invalid_argument("exp functional: gamma must be >= 0");
  } else if (std::isnan(std::get<functional::IndicatorBelow>(f).h)) {
    throw std::invalid_argument("indicator functional: h is NaN");
  }
}

inline double evaluate(const FieldFunctional& f, double t) {
  return std::visit(
      [t](const auto& g) -> double {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, functional::IndicatorBelow>) {
          return t < g.h ? 1.0 : 0.0;
        } else if constexpr (std::is_same_v<T, functional::ExpDecay>) {
          return std::exp(-g.gamma * t);
        } else {
          if (t <= g.x.front()) return g.y.front();
          if (t >= g.x.back()) return g.y.back();
          const auto it = std::upper_bound(g.x.begin(), g.x.end(), t);
          const std::size_t i = it - g.x.begin();
          const double s = (t - g.x[i - 1]) / (g.x[i] - g.x[i - 1]);
          return g.y[i - 1] + s * (g.y[i] - g.y[i - 1]);
        }
      },
      f);
}

inline json functional_to_json(const FieldFunctional& f) {
  return std::visit(
      [](const auto& g) -> json {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, functional::IndicatorBelow>) return {{"functional", "indicator-below"}, {"h", g.h}};
        else if constexpr (std::is_same_v<T, functional::ExpDecay>) return {{"functional", "exp"}, {"gamma", g.gamma}};
        else return {{"functional", "tabulated"}, {"x", g.x}, {"y", g.y}};
      },
      f);
}

/// t_x = f(φ_x + u), or t_e = (f(φ_{e-} + u) + f(φ_{e+} + u)) / 2 on edges.
inline PassageWeights weights_from_field(const ScalarField& field, const FieldFunctional& f,
                                         double level_shift, WeightMode mode) {
  validate_functional(f);
  const LatticeBox& box = field.box;
  if (static_cast<Index>(field.values.size()) != box.num_vertices())
    throw std::invalid_argument("weights_from_field: field size does not match box");
  std::vector<double> site(box.num_vertices());
  for (Index v = 0; v < box.num_vertices(); ++v) {
    if (!std::isfinite(field.values[v])) throw std::invalid_argument("weights_from_field: non-finite field value");
    site[v] = evaluate(f, field.values[v] + level_shift);
  }
  PassageWeights w;
  w.box = box;
  w.mode = mode;
  w.level_shift = level_shift;
  if (mode == WeightMode::Vertex) {
    w.values = std::move(site);
    return w;
  }
  w.values.resize(box.num_edges());
  for (Index e = 0; e < box.num_edges(); ++e) {
    const auto [a, b] = box.edge_endpoints(e);
    w.values[e] = 0.5 * (site[a] + site[b]);
  }
  return w;
}

}  // namespace fpplab
