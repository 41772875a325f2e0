#pragma once
// Shared fixtures for the unit and acceptance tests.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "qnn/circuits.hpp"
#include "qnn/qcore.hpp"
#include "qnn/rng.hpp"

namespace qnn::testing {

inline std::string source_path(const std::string& rel) { return std::string(QNN_SOURCE_DIR) + "/" + rel; }

/// Random full-rank mixed state: A A^dagger / Tr for Gaussian A.
inline DensityMatrix random_state(int n_qubits, RngStream& rng) {
  const std::size_t dim = std::size_t{1} << n_qubits;
  ComplexMatrix a(dim, dim);
  for (auto& x : a.entries()) x = Complex(rng.normal(), rng.normal());
  ComplexMatrix rho = a * a.adjoint();
  rho *= Complex(1.0 / rho.trace().real());
  // Symmetrize away rounding so the strict constructor accepts it.
  ComplexMatrix herm = (rho + rho.adjoint()) * Complex(0.5);
  return DensityMatrix(herm);
}

/// Haar-ish random single-qubit unitary from Euler angles.
inline ComplexMatrix random_unitary_2(RngStream& rng) {
  const double a = rng.uniform(0, 2 * std::numbers::pi);
  const double b = rng.uniform(0, 2 * std::numbers::pi);
  const double c = rng.uniform(0, 2 * std::numbers::pi);
  const double t = rng.uniform(0, std::numbers::pi);
  const Complex i(0, 1);
  return ComplexMatrix::from_rows(
      {{std::exp(i * a) * std::cos(t / 2), -std::exp(i * (a + c)) * std::sin(t / 2)},
       {std::exp(i * (a + b)) * std::sin(t / 2), std::exp(i * (a + b + c)) * std::cos(t / 2)}});
}

/// A random gate on an n-qubit register drawn from all kinds.
inline GateOp random_gate(int n, RngStream& rng) {
  const int q = static_cast<int>(rng.below(n));
  int other = static_cast<int>(rng.below(n > 1 ? n - 1 : 1));
  if (n > 1 && other >= q) ++other;
  const double angle = rng.uniform(-2 * std::numbers::pi, 2 * std::numbers::pi);
  switch (rng.below(n > 1 ? 5 : 3)) {
    case 0: return GateOp::h(q);
    case 1: return GateOp::ry(q, angle);
    case 2: return GateOp::unitary({q}, random_unitary_2(rng));
    case 3: return GateOp::cry(q, other, angle);
    default: return GateOp::cx(q, other);
  }
}

/// Circuit with `layers` layers of 1..6 random gates each.
inline CircuitSpec random_circuit(int n, int layers, RngStream& rng) {
  CircuitSpec c{n, {}};
  for (int l = 0; l < layers; ++l) {
    std::vector<GateOp> layer;
    const int count = 1 + static_cast<int>(rng.below(6));
    for (int g = 0; g < count; ++g) layer.push_back(random_gate(n, rng));
    c.layers.push_back(std::move(layer));
  }
  return c;
}

inline ParamVector random_theta(std::size_t d, RngStream& rng) {
  ParamVector t(d);
  for (auto& x : t) x = rng.uniform(kBoxLow, kBoxHigh);
  return t;
}

inline std::vector<double> random_features(int n, RngStream& rng) {
  std::vector<double> x(n);
  for (auto& v : x) v = rng.uniform(0, std::numbers::pi);
  return x;
}

}  // namespace qnn::testing
