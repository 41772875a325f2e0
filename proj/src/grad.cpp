#include "qnn/grad.hpp"

#include <fmt/format.h>

#include <cmath>

#include "qnn/error.hpp"
#include "qnn/format.hpp"
#include "qnn/measure.hpp"

namespace qnn {

namespace {

constexpr double kUnitSlack = 1e-12;
constexpr double kDegenerateVariance = 1e-15;

void check_expectation(double v, const char* name) {
  if (!(v >= -kUnitSlack && v <= 1.0 + kUnitSlack))
    throw ValidationError(fmt::format("{} = {} outside [0,1]", name, v));
}

}  // namespace

void GradContext::validate() const {
  check_expectation(yhat, "Yhat");
  check_expectation(yhat_plus, "Yhat+");
  check_expectation(yhat_minus, "Yhat-");
  check_expectation(ptilde, "ptilde");
  check_expectation(ratio, "ratio");
  if (!(lambda >= 0.0)) throw ValidationError("lambda must be >= 0");
  if (shots < 1) throw ValidationError("shot count must be >= 1");
}

double shift_scale(ShiftConvention c) { return c == ShiftConvention::Half ? 0.5 : 1.0; }

double analytic_gradient(const GradContext& ctx, ShiftConvention c) {
  return shift_scale(c) * (ctx.yhat - ctx.label) * (ctx.yhat_plus - ctx.yhat_minus) +
         ctx.lambda * ctx.theta;
}

double estimated_gradient(const GradContext& ctx, RngStream& center, RngStream& plus,
                          RngStream& minus, ShiftConvention c) {
  const double y0 = sample_shots({ctx.yhat, ctx.ptilde, ctx.ratio}, ctx.shots, center);
  const double yp = sample_shots({ctx.yhat_plus, ctx.ptilde, ctx.ratio}, ctx.shots, plus);
  const double ym = sample_shots({ctx.yhat_minus, ctx.ptilde, ctx.ratio}, ctx.shots, minus);
  return shift_scale(c) * (y0 - ctx.label) * (yp - ym) + ctx.lambda * ctx.theta;
}

double estimated_gradient(const GradContext& ctx, std::uint64_t seed, ShiftConvention c) {
  ctx.validate();
  RngStream center = RngStream::derived(seed, {0});
  RngStream plus = RngStream::derived(seed, {1});
  RngStream minus = RngStream::derived(seed, {2});
  return estimated_gradient(ctx, center, plus, minus, c);
}

GradDecomposition decomposition_constants(const GradContext& ctx) {
  ctx.validate();
  const double p = ctx.ptilde;
  const double r = ctx.ratio;
  const double diff = ctx.yhat_plus - ctx.yhat_minus;
  const double q = (1.0 - p) * ctx.yhat + p * r;
  const double qp = (1.0 - p) * ctx.yhat_plus + p * r;
  const double qm = (1.0 - p) * ctx.yhat_minus + p * r;
  GradDecomposition d{};
  d.scale = (1.0 - p) * (1.0 - p);
  d.c1 = (1.0 - p) * p * (r - ctx.label) * diff + (2.0 * p - p * p) * ctx.lambda * ctx.theta;
  d.c2 = (1.0 - p) * diff;
  d.c3 = q - ctx.label;
  d.c4 = q * (1.0 - q) / ctx.shots;
  d.c5 = (qp * (1.0 - qp) + qm * (1.0 - qm)) / ctx.shots;
  return d;
}

std::string DecompositionReport::csv_header() {
  return "trials,empirical_mean,predicted_mean,z_score,empirical_var,predicted_var,var_ratio,"
         "degenerate,passed";
}

std::string DecompositionReport::csv_row() const {
  return fmt::format("{},{},{},{},{},{},{},{},{}", trials, num(empirical_mean), num(predicted_mean),
                     num(z_score), num(empirical_variance), num(predicted_variance),
                     num(variance_ratio), degenerate ? 1 : 0, passed ? 1 : 0);
}

DecompositionReport verify_decomposition(const GradContext& ctx, int trials, std::uint64_t seed) {
  ctx.validate();
  if (trials < 2) throw ValidationError("verify_decomposition needs at least 2 trials");
  const GradDecomposition d = decomposition_constants(ctx);
  RngStream center = RngStream::derived(seed, {0});
  RngStream plus = RngStream::derived(seed, {1});
  RngStream minus = RngStream::derived(seed, {2});

  // Welford running moments.
  double mean = 0.0, m2 = 0.0;
  for (int t = 1; t <= trials; ++t) {
    const double g = estimated_gradient(ctx, center, plus, minus);
    const double delta = g - mean;
    mean += delta / t;
    m2 += delta * (g - mean);
  }

  DecompositionReport rep;
  rep.trials = trials;
  rep.empirical_mean = mean;
  rep.empirical_variance = m2 / (trials - 1);
  rep.predicted_mean = d.predicted_mean(analytic_gradient(ctx));
  rep.predicted_variance = d.predicted_variance();
  if (rep.predicted_variance < kDegenerateVariance) {
    rep.degenerate = true;
    rep.z_score = 0.0;
    rep.variance_ratio = 1.0;
    rep.passed = std::abs(rep.empirical_mean - rep.predicted_mean) <= 1e-12 &&
                 rep.empirical_variance <= 1e-12;
    return rep;
  }
  rep.z_score = (rep.empirical_mean - rep.predicted_mean) / std::sqrt(rep.predicted_variance / trials);
  rep.variance_ratio = rep.empirical_variance / rep.predicted_variance;
  rep.passed = std::abs(rep.z_score) < 4.0 && rep.variance_ratio >= 0.9 && rep.variance_ratio <= 1.1;
  return rep;
}

}  // namespace qnn
