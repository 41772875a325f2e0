#pragma once

#include <cstdint>
#include <string>

#include "qnn/rng.hpp"

namespace qnn {

/// Everything needed for one gradient component of one batch.
struct GradContext {
  double yhat = 0.0;        // noiseless expectation at theta
  double yhat_plus = 0.0;   // at theta + (pi/2) e_j
  double yhat_minus = 0.0;  // at theta - (pi/2) e_j
  double label = 0.0;       // batch label mean Y
  double theta = 0.0;       // theta_j
  double lambda = 0.0;
  double ptilde = 0.0;
  double ratio = 0.5;  // Tr(Pi)/D
  int shots = 1;       // K

  void validate() const;
};

/// Scale applied to the shift difference. Full is (Ybar - Y)(Ybar+ - Ybar-);
/// Half multiplies that residual term by 1/2.
enum class ShiftConvention { Full, Half };

double shift_scale(ShiftConvention c);

/// (Yhat - Y)(Yhat+ - Yhat-) + lambda theta_j, scaled per convention.
double analytic_gradient(const GradContext& ctx, ShiftConvention c = ShiftConvention::Full);

/// Same formula with Yhat, Yhat+ and Yhat- replaced by K-shot sample means,
/// each drawn from its own stream.
double estimated_gradient(const GradContext& ctx, RngStream& center, RngStream& plus,
                          RngStream& minus, ShiftConvention c = ShiftConvention::Full);
/// Derives the three streams from `seed`.
double estimated_gradient(const GradContext& ctx, std::uint64_t seed,
                          ShiftConvention c = ShiftConvention::Full);

/// E[estimated] = scale * analytic + c1,
/// Var[estimated] = c2^2 c4 + c3^2 c5 + c4 c5.
struct GradDecomposition {
  double scale;  // (1 - ptilde)^2
  double c1, c2, c3, c4, c5;

  double predicted_mean(double analytic) const { return scale * analytic + c1; }
  double predicted_variance() const { return c2 * c2 * c4 + c3 * c3 * c5 + c4 * c5; }
};

GradDecomposition decomposition_constants(const GradContext& ctx);

struct DecompositionReport {
  int trials = 0;
  double empirical_mean = 0.0;
  double predicted_mean = 0.0;
  double z_score = 0.0;
  double empirical_variance = 0.0;
  double predicted_variance = 0.0;
  double variance_ratio = 0.0;
  bool degenerate = false;  // predicted variance ~ 0; compared exactly instead
  bool passed = false;

  static std::string csv_header();
  std::string csv_row() const;
};

/// Draws `trials` estimated gradients and compares their moments with the
/// decomposition. Passes iff |z| < 4 and the variance ratio is in [0.9, 1.1].
DecompositionReport verify_decomposition(const GradContext& ctx, int trials, std::uint64_t seed);

}  // namespace qnn
