#pragma once
/**
 * @file theory.hpp
 * Closed-form constants, utility-bound right-hand sides, privacy accounting
 * and QSQ shot counts. Calculators that can diverge return a Calc holding
 * either a value or the reason it is infeasible.
 */

#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "qnn/error.hpp"

namespace qnn {

template <class T>
class Calc {
 public:
  static Calc ok(T v) { return Calc(std::move(v), {}); }
  static Calc infeasible(std::string why) { return Calc(std::nullopt, std::move(why)); }

  bool feasible() const { return value_.has_value(); }
  const T& value() const {
    if (!value_) throw NumericError("infeasible: " + reason_);
    return *value_;
  }
  const std::string& reason() const { return reason_; }

 private:
  Calc(std::optional<T> v, std::string why) : value_(std::move(v)), reason_(std::move(why)) {}
  std::optional<T> value_;
  std::string reason_;
};

// ---------------------------------------------------------------- constants

struct LossConstants {
  double S;                 // smoothness 3/2 + lambda
  double G;                 // Lipschitz d(1 + 3 pi lambda)
  std::optional<double> mu; // PL constant, only for lambda > 1/pi
};

LossConstants constants(double lambda, int d);
/// (lambda pi - 1)^2 / (1 + lambda d 9 pi^2); throws ValidationError for lambda <= 1/pi.
double pl_constant(double lambda, int d);

// ---------------------------------------------------------------- utility bounds

/// Which right-hand side to evaluate: the depolarizing-channel theorems or
/// their general-channel counterparts.
enum class BoundForm { Depolarizing, GeneralChannel };

struct BoundInputs {
  int d = 1;
  double T = 1;         // iterations
  double K = 1;         // shots; +infinity means exact expectations
  double B = 1;         // batches per step
  double lambda = 0.0;
  double ptilde = 0.0;

  void validate() const;
};

Calc<double> r1_bound(const BoundInputs& in, BoundForm form = BoundForm::Depolarizing);
Calc<double> r2_bound(const BoundInputs& in, BoundForm form = BoundForm::Depolarizing);

// ---------------------------------------------------------------- privacy

/// Literal keeps epsilon under the square root as written in the privacy
/// analysis; Standard uses the usual advanced-composition form with epsilon
/// outside the root.
enum class ChainVariant { Literal, Standard };

/// ln[((1-p) + p r) / (p (1-p) (1-r))^K].
Calc<double> per_query_epsilon(double ptilde, double ratio, int K);
/// Composition over the three sub-queries of one gradient component.
Calc<double> gradient_epsilon(double eps1, double delta2, ChainVariant v = ChainVariant::Literal);
/// Composition over d components and T iterations.
Calc<double> total_epsilon(double eps2, int d, double T, double delta_bar,
                           ChainVariant v = ChainVariant::Literal);

struct Composition {
  double epsilon;
  double delta;  // k delta + delta'
};
/// k-fold adaptive composition: sqrt(2k ln(1/delta')) eps + k eps (e^eps - 1).
Calc<Composition> compose(int k, double eps, double delta, double delta_prime);

struct PrivacyInputs {
  double ptilde = 0.5;
  double ratio = 0.5;
  int K = 1;
  double T = 1;
  int d = 1;
  double delta2 = 1e-5;     // per-gradient-component slack
  double delta_bar = 1e-5;  // slack of the final composition
  ChainVariant variant = ChainVariant::Literal;
};

struct PrivacyChain {
  Calc<double> per_query;
  Calc<double> per_gradient;
  Calc<double> total;
};

PrivacyChain privacy_chain(const PrivacyInputs& in);

// ---------------------------------------------------------------- QSQ

struct QsqInputs {
  double tau = 0.1;
  double b = 0.05;
  double ptilde = 0.0;
  double nu = 0.0;         // true expectation <psi|M|psi>
  double trm_ratio = 0.0;  // Tr(M) / 2^(N+1)
  double general_offset = 0.0;  // kappa weight + identity weight / D for the general channel

  void validate() const;
  double effective_tolerance() const { return tau - ptilde * nu - trm_ratio - general_offset; }
};

/// Below this effective tolerance the shot count is reported infeasible.
inline constexpr double kQsqToleranceFloor = 1e-6;

/// ceil(ln(2/b) / (2 eff^2)).
Calc<std::int64_t> qsq_shot_count(const QsqInputs& in);

struct QsqCoverage {
  std::int64_t trials = 0;
  double coverage = 0.0;   // fraction with |Ybar - nu| <= tau
  double threshold = 0.0;  // 1 - b - 3 sqrt(b(1-b)/M)
  bool passed = false;
};

/// Repeats a K-shot query whose outcomes are Ber((1-p) nu + p trm_ratio).
QsqCoverage simulate_qsq_query(const QsqInputs& in, int K, std::int64_t trials, std::uint64_t seed);
/// The coverage probability computed from the binomial PMF.
double exact_qsq_coverage(const QsqInputs& in, int K);

}  // namespace qnn
