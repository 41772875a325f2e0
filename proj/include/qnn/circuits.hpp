#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qnn/noise.hpp"
#include "qnn/qcore.hpp"

namespace qnn {

/// Gates grouped into layers; the noise channel is applied once after each layer.
struct CircuitSpec {
  int n_qubits = 0;
  std::vector<std::vector<GateOp>> layers;

  std::size_t gate_count() const;
  std::vector<GateOp> gates() const;
  void validate() const;
};

/// Kernel-mapping encoder: each block is H on every qubit, RY(x_j) on qubit j,
/// then a chain of CRY(phi) on (q0->q1), (q1->q2), ... with phi = prod_j (pi - x_j).
struct EncoderSpec {
  int n_qubits = 3;
  int n_blocks = 3;
  int feature_dim = 3;

  void validate() const;
};

/// Hardware-efficient ansatz: each layer is RY(theta_{l,j}) on qubit j, then
/// a CX chain (q0->q1), (q1->q2), ...
struct AnsatzSpec {
  int n_qubits = 3;
  int n_layers = 5;

  std::size_t param_count() const { return static_cast<std::size_t>(n_qubits) * n_layers; }
  void validate() const;
};

using ParamVector = std::vector<double>;

/// Lower and upper edge of the parameter box used by the PL-regime checks.
inline constexpr double kBoxLow = 3.14159265358979323846;
inline constexpr double kBoxHigh = 3.0 * 3.14159265358979323846;

bool in_pl_box(std::span<const double> theta);
void clip_to_pl_box(ParamVector& theta);

CircuitSpec build_encoder(const EncoderSpec& spec, std::span<const double> x);
CircuitSpec build_ansatz(const AnsatzSpec& spec, std::span<const double> theta);

/// Applies each layer's gates and then one channel application, starting from `input`.
DensityMatrix run_circuit(const DensityMatrix& input, const CircuitSpec& circuit,
                          const NoiseSpec& noise);

/// Adjoint of run_circuit acting on an observable:
/// Tr(O run_circuit(rho)) = Tr(heisenberg(O) rho).
ComplexMatrix heisenberg(const ComplexMatrix& observable, const CircuitSpec& circuit,
                         const NoiseSpec& noise);

/// Encoder then ansatz from |0...0><0...0|, with noise after every layer of both.
DensityMatrix evaluate(const CircuitSpec& encoder, const CircuitSpec& ansatz,
                       const NoiseSpec& noise);

/// Same evolution as evaluate, split into rho, kappa and identity components.
MergedGeneral evaluate_components(const CircuitSpec& encoder, const CircuitSpec& ansatz,
                                  const NoiseSpec& noise);

/// Product of all gate matrices, later layers on the left.
ComplexMatrix circuit_unitary(const CircuitSpec& circuit);

/// theta + sign*(pi/2) e_j; sign must be +1 or -1.
ParamVector shift_parameter(const ParamVector& theta, std::size_t j, int sign);

}  // namespace qnn
