#pragma once

#include <cstdint>

#include "qnn/qcore.hpp"
#include "qnn/rng.hpp"

namespace qnn {

/// Two-outcome POVM {Pi, I - Pi}; outcome 1 corresponds to Pi.
struct PovmSpec {
  ComplexMatrix projector;
  double ratio;  // Tr(Pi)/D

  /// Validates 0 <= Pi <= I and recomputes the ratio.
  explicit PovmSpec(ComplexMatrix pi);
  /// |1><1| on `qubit`, identity elsewhere; ratio 1/2.
  static PovmSpec readout(int n_qubits, int qubit = 0);
};

struct ShotConfig {
  int shots = 1;  // K
  std::uint64_t seed = 0;

  void validate() const;
};

/// Parameters of the per-shot outcome law: with probability 1 - ptilde the
/// outcome is Ber(yhat), otherwise Ber(ratio).
struct OutcomeLaw {
  double yhat;
  double ptilde;
  double ratio;

  void validate() const;
  /// Probability of outcome 1: (1 - ptilde) yhat + ptilde ratio.
  double q() const { return (1.0 - ptilde) * yhat + ptilde * ratio; }
};

/// (1 - ptilde) yhat + ptilde r.
double noisy_expectation(double yhat, double ptilde, double ratio);

/// q(1-q)/K with q = noisy_expectation(yhat, ptilde, ratio).
double sample_mean_variance(double yhat, double ptilde, double ratio, int shots);

/// Mean of K shots, each drawn by first choosing the noise branch and then
/// the Bernoulli outcome of that branch.
double sample_shots(const OutcomeLaw& law, int shots, RngStream& rng);
double sample_shots(const OutcomeLaw& law, const ShotConfig& config);

/// Mean of K direct Ber(q) draws; same law as sample_shots.
double sample_bernoulli_mean(double q, int shots, RngStream& rng);

/// P(Ybar = y) = C(K, Ky) q^(Ky) (1-q)^(K-Ky); y must lie on the 1/K grid.
double sample_mean_pmf(double q, int shots, double y);

}  // namespace qnn
