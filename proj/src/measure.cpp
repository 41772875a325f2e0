#include "qnn/measure.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "qnn/error.hpp"

namespace qnn {

namespace {

constexpr double kProbSlack = 1e-12;

void check_unit(double v, const char* name) {
  if (!(v >= -kProbSlack && v <= 1.0 + kProbSlack))
    throw ValidationError(fmt::format("{} = {} outside [0,1]", name, v));
}

void check_shots(int shots) {
  if (shots < 1) throw ValidationError(fmt::format("shot count K = {} must be >= 1", shots));
}

}  // namespace

PovmSpec::PovmSpec(ComplexMatrix pi) : projector(std::move(pi)), ratio(0.0) {
  if (!projector.square()) throw ValidationError("POVM element must be square");
  qubits_for_dim(projector.rows());
  if (!is_hermitian(projector)) throw ValidationError("POVM element is not Hermitian");
  const auto ev = hermitian_eigenvalues(projector);
  if (ev.front() < -1e-10 || ev.back() > 1.0 + 1e-10)
    throw ValidationError("POVM element eigenvalues must lie in [0,1]");
  ratio = projector.trace().real() / static_cast<double>(projector.rows());
}

PovmSpec PovmSpec::readout(int n_qubits, int qubit) {
  if (qubit < 0 || qubit >= n_qubits)
    throw ValidationError(fmt::format("readout qubit {} invalid for {} qubits", qubit, n_qubits));
  const std::size_t dim = std::size_t{1} << n_qubits;
  const std::size_t mask = std::size_t{1} << (n_qubits - 1 - qubit);
  ComplexMatrix pi(dim, dim);
  for (std::size_t i = 0; i < dim; ++i)
    if (i & mask) pi(i, i) = 1.0;
  return PovmSpec(std::move(pi));
}

void ShotConfig::validate() const { check_shots(shots); }

void OutcomeLaw::validate() const {
  check_unit(yhat, "expectation");
  check_unit(ptilde, "merged rate");
  check_unit(ratio, "POVM ratio");
}

double noisy_expectation(double yhat, double ptilde, double ratio) {
  OutcomeLaw law{yhat, ptilde, ratio};
  law.validate();
  return law.q();
}

double sample_mean_variance(double yhat, double ptilde, double ratio, int shots) {
  check_shots(shots);
  const double q = noisy_expectation(yhat, ptilde, ratio);
  return q * (1.0 - q) / shots;
}

double sample_shots(const OutcomeLaw& law, int shots, RngStream& rng) {
  check_shots(shots);
  int ones = 0;
  for (int k = 0; k < shots; ++k) {
    const bool noise_branch = law.ptilde > 0.0 && rng.uniform() < law.ptilde;
    ones += rng.bernoulli(noise_branch ? law.ratio : law.yhat) ? 1 : 0;
  }
  return static_cast<double>(ones) / shots;
}

double sample_shots(const OutcomeLaw& law, const ShotConfig& config) {
  law.validate();
  config.validate();
  RngStream rng(config.seed);
  return sample_shots(law, config.shots, rng);
}

double sample_bernoulli_mean(double q, int shots, RngStream& rng) {
  check_shots(shots);
  int ones = 0;
  for (int k = 0; k < shots; ++k) ones += rng.bernoulli(q) ? 1 : 0;
  return static_cast<double>(ones) / shots;
}

double sample_mean_pmf(double q, int shots, double y) {
  check_shots(shots);
  check_unit(q, "q");
  const double ky = y * shots;
  const double k_round = std::round(ky);
  if (std::abs(ky - k_round) > 1e-9 || k_round < 0 || k_round > shots)
    throw ValidationError(fmt::format("y = {} is not on the 1/{} grid", y, shots));
  const int k = static_cast<int>(k_round);
  const double qc = std::clamp(q, 0.0, 1.0);
  if (qc == 0.0) return k == 0 ? 1.0 : 0.0;
  if (qc == 1.0) return k == shots ? 1.0 : 0.0;
  const double log_choose =
      std::lgamma(shots + 1.0) - std::lgamma(k + 1.0) - std::lgamma(shots - k + 1.0);
  return std::exp(log_choose + k * std::log(qc) + (shots - k) * std::log1p(-qc));
}

}  // namespace qnn
