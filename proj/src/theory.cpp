#include "qnn/theory.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "qnn/measure.hpp"
#include "qnn/rng.hpp"

namespace qnn {

namespace {

constexpr double kPi = std::numbers::pi;

Calc<double> finite_or_divergent(double v, const char* what) {
  if (std::isfinite(v)) return Calc<double>::ok(v);
  return Calc<double>::infeasible(fmt::format("{} diverges", what));
}

void check_open_unit(double v, const char* name) {
  if (!(v > 0.0 && v < 1.0)) throw ValidationError(fmt::format("{} = {} must lie in (0,1)", name, v));
}

// (6d/K + 8d/K^2) written so that K = infinity gives 0.
double shot_term(double d, double K, double a, double b) { return a * d / K + b * d / (K * K); }

}  // namespace

// ---------------------------------------------------------------- constants

LossConstants constants(double lambda, int d) {
  if (!(lambda >= 0.0)) throw ValidationError("lambda must be >= 0");
  if (d < 1) throw ValidationError("parameter count d must be >= 1");
  LossConstants c{1.5 + lambda, d * (1.0 + 3.0 * kPi * lambda), std::nullopt};
  if (lambda > 1.0 / kPi) c.mu = pl_constant(lambda, d);
  return c;
}

double pl_constant(double lambda, int d) {
  if (!(lambda > 1.0 / kPi))
    throw ValidationError(fmt::format("PL constant needs lambda > 1/pi, got {}", lambda));
  if (d < 1) throw ValidationError("parameter count d must be >= 1");
  const double num = lambda * kPi - 1.0;
  return num * num / (1.0 + lambda * d * 9.0 * kPi * kPi);
}

// ---------------------------------------------------------------- bounds

void BoundInputs::validate() const {
  if (d < 1) throw ValidationError("d must be >= 1");
  if (!(T >= 0.0)) throw ValidationError("T must be >= 0");
  if (!(K >= 1.0)) throw ValidationError("K must be >= 1");
  if (!(B >= 1.0)) throw ValidationError("B must be >= 1");
  if (!(lambda >= 0.0)) throw ValidationError("lambda must be >= 0");
  if (!(ptilde >= 0.0 && ptilde <= 1.0)) throw ValidationError("ptilde must lie in [0,1]");
}

Calc<double> r1_bound(const BoundInputs& in, BoundForm form) {
  in.validate();
  if (in.ptilde >= 1.0) return Calc<double>::infeasible("ptilde = 1 destroys the gradient");
  if (in.T <= 0.0) return Calc<double>::infeasible("T = 0");
  const auto c = constants(in.lambda, in.d);
  const double d = in.d, l = in.lambda, p = in.ptilde;
  const double s2 = (1.0 - p) * (1.0 - p);
  double v;
  if (form == BoundForm::Depolarizing) {
    const double reg = (1.0 + 10.0 * l) * (1.0 + 10.0 * l);
    v = 2.0 * c.S * (1.0 + 90.0 * l * d) / (in.T * s2) +
        (2.0 * p - p * p) * (2.0 * c.G + d) * reg / s2 + shot_term(d, in.K, 6, 8) / (s2 * in.B);
  } else {
    const double c1max = 5.0 + 3.0 * (1.0 - s2) * l * kPi;
    v = 2.0 * c.S * (1.0 + 9.0 * l * d) / (in.T * s2) + (2.0 * c.G + d) * c1max / s2 +
        shot_term(d, in.K, 12, 18) / (s2 * in.B);
  }
  return finite_or_divergent(v, "r1 bound");
}

Calc<double> r2_bound(const BoundInputs& in, BoundForm form) {
  in.validate();
  if (in.ptilde >= 1.0) return Calc<double>::infeasible("ptilde = 1 destroys the gradient");
  const auto c = constants(in.lambda, in.d);
  if (!c.mu) return Calc<double>::infeasible("PL constant undefined for lambda <= 1/pi");
  const double d = in.d, l = in.lambda, p = in.ptilde, T = in.T;
  const double s2 = (1.0 - p) * (1.0 - p);
  const double decay = std::exp(-*c.mu * s2 * T / c.S);
  double v;
  if (form == BoundForm::Depolarizing) {
    const double reg = (1.0 + 10.0 * l) * (1.0 + 10.0 * l);
    v = (1.0 + 90.0 * l * d) * decay +
        T * ((2.0 * p - p * p) * (c.G + 2.0 * d) * reg / (2.0 * c.S) +
             shot_term(d, in.K, 6, 8) / (2.0 * c.S * in.B));
  } else {
    const double c1max = 5.0 + 3.0 * (1.0 - s2) * l * kPi;
    v = 15.0 * l * d * decay + T * (2.0 * c.G + d) * c1max / (2.0 * c.S) +
        T * shot_term(d, in.K, 6, 9) / (c.S * in.B);
  }
  return finite_or_divergent(v, "r2 bound");
}

// ---------------------------------------------------------------- privacy

Calc<double> per_query_epsilon(double ptilde, double ratio, int K) {
  if (K < 1) throw ValidationError("K must be >= 1");
  if (!(ptilde >= 0.0 && ptilde <= 1.0)) throw ValidationError("ptilde must lie in [0,1]");
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw ValidationError("ratio must lie in [0,1]");
  if (ptilde == 0.0 || ptilde == 1.0)
    return Calc<double>::infeasible("ptilde at 0 or 1 gives unbounded epsilon'");
  if (ratio == 0.0 || ratio == 1.0)
    return Calc<double>::infeasible("POVM ratio at 0 or 1 gives unbounded epsilon'");
  const double num = (1.0 - ptilde) + ptilde * ratio;
  const double base = ptilde * (1.0 - ptilde) * (1.0 - ratio);
  return finite_or_divergent(std::log(num) - K * std::log(base), "epsilon'");
}

Calc<double> gradient_epsilon(double eps1, double delta2, ChainVariant v) {
  if (!(eps1 >= 0.0)) throw ValidationError("epsilon' must be >= 0");
  check_open_unit(delta2, "delta''");
  const double lg = std::log(1.0 / delta2);
  const double root = v == ChainVariant::Literal ? std::sqrt(6.0 * lg * eps1) : std::sqrt(6.0 * lg) * eps1;
  return finite_or_divergent(root + 3.0 * eps1 * std::expm1(eps1), "epsilon''");
}

Calc<double> total_epsilon(double eps2, int d, double T, double delta_bar, ChainVariant v) {
  if (!(eps2 >= 0.0)) throw ValidationError("epsilon'' must be >= 0");
  if (d < 1) throw ValidationError("d must be >= 1");
  if (!(T >= 0.0)) throw ValidationError("T must be >= 0");
  check_open_unit(delta_bar, "delta_bar");
  const double de = d * eps2;
  const double lg = std::log(1.0 / delta_bar);
  const double root = v == ChainVariant::Literal ? std::sqrt(2.0 * T * lg * de) : std::sqrt(2.0 * T * lg) * de;
  return finite_or_divergent(root + T * de * std::expm1(de), "epsilon");
}

Calc<Composition> compose(int k, double eps, double delta, double delta_prime) {
  if (k < 0) throw ValidationError("k must be >= 0");
  if (!(eps >= 0.0)) throw ValidationError("epsilon must be >= 0");
  if (!(delta >= 0.0 && delta <= 1.0)) throw ValidationError("delta must lie in [0,1]");
  check_open_unit(delta_prime, "delta'");
  const double e = std::sqrt(2.0 * k * std::log(1.0 / delta_prime)) * eps + k * eps * std::expm1(eps);
  if (!std::isfinite(e)) return Calc<Composition>::infeasible("composed epsilon diverges");
  return Calc<Composition>::ok({e, k * delta + delta_prime});
}

PrivacyChain privacy_chain(const PrivacyInputs& in) {
  PrivacyChain chain{per_query_epsilon(in.ptilde, in.ratio, in.K),
                     Calc<double>::infeasible("epsilon' infeasible"),
                     Calc<double>::infeasible("epsilon' infeasible")};
  if (!chain.per_query.feasible()) return chain;
  // A negative epsilon' only means the bound is loose; the mechanism is at least 0-DP.
  const double e1 = std::max(chain.per_query.value(), 0.0);
  chain.per_gradient = gradient_epsilon(e1, in.delta2, in.variant);
  if (!chain.per_gradient.feasible()) {
    chain.total = Calc<double>::infeasible("epsilon'' diverges");
    return chain;
  }
  chain.total = total_epsilon(chain.per_gradient.value(), in.d, in.T, in.delta_bar, in.variant);
  return chain;
}

// ---------------------------------------------------------------- QSQ

void QsqInputs::validate() const {
  if (!(tau > 0.0)) throw ValidationError("tau must be > 0");
  check_open_unit(b, "b");
  if (!(ptilde >= 0.0 && ptilde <= 1.0)) throw ValidationError("ptilde must lie in [0,1]");
  if (!(nu >= 0.0 && nu <= 1.0)) throw ValidationError("nu must lie in [0,1]");
  if (!(trm_ratio >= 0.0 && trm_ratio <= 1.0)) throw ValidationError("trM ratio must lie in [0,1]");
  if (!(general_offset >= 0.0)) throw ValidationError("general offset must be >= 0");
}

Calc<std::int64_t> qsq_shot_count(const QsqInputs& in) {
  in.validate();
  const double eff = in.effective_tolerance();
  if (eff <= kQsqToleranceFloor)
    return Calc<std::int64_t>::infeasible(
        fmt::format("effective tolerance {:.6g} is below the floor {}", eff, kQsqToleranceFloor));
  const double k = std::log(2.0 / in.b) / (2.0 * eff * eff);
  // Guard against k landing a rounding error above an integer.
  const double rounded = std::round(k);
  const double ceil_k = std::abs(k - rounded) <= 1e-9 * rounded ? rounded : std::ceil(k);
  return Calc<std::int64_t>::ok(static_cast<std::int64_t>(std::max(ceil_k, 1.0)));
}

QsqCoverage simulate_qsq_query(const QsqInputs& in, int K, std::int64_t trials, std::uint64_t seed) {
  in.validate();
  if (K < 1) throw ValidationError("K must be >= 1");
  if (trials < 1) throw ValidationError("trials must be >= 1");
  RngStream rng(seed);
  const OutcomeLaw law{in.nu, in.ptilde, in.trm_ratio};
  std::int64_t hits = 0;
  for (std::int64_t m = 0; m < trials; ++m)
    if (std::abs(sample_shots(law, K, rng) - in.nu) <= in.tau + 1e-12) ++hits;
  QsqCoverage out;
  out.trials = trials;
  out.coverage = static_cast<double>(hits) / static_cast<double>(trials);
  out.threshold = 1.0 - in.b - 3.0 * std::sqrt(in.b * (1.0 - in.b) / static_cast<double>(trials));
  out.passed = out.coverage >= out.threshold;
  return out;
}

double exact_qsq_coverage(const QsqInputs& in, int K) {
  in.validate();
  if (K < 1) throw ValidationError("K must be >= 1");
  const double q = noisy_expectation(in.nu, in.ptilde, in.trm_ratio);
  double mass = 0.0;
  for (int k = 0; k <= K; ++k) {
    const double y = static_cast<double>(k) / K;
    if (std::abs(y - in.nu) <= in.tau + 1e-12) mass += sample_mean_pmf(q, K, y);
  }
  return mass;
}

}  // namespace qnn
