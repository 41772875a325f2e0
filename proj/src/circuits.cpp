#include "qnn/circuits.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qnn/error.hpp"

namespace qnn {

namespace {

constexpr double kFeatureSlack = 1e-12;

void check_same_register(const CircuitSpec& a, const CircuitSpec& b) {
  if (a.n_qubits != b.n_qubits)
    throw ValidationError(
        fmt::format("encoder has {} qubits, ansatz has {}", a.n_qubits, b.n_qubits));
}

}  // namespace

std::size_t CircuitSpec::gate_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.size();
  return n;
}

std::vector<GateOp> CircuitSpec::gates() const {
  std::vector<GateOp> out;
  out.reserve(gate_count());
  for (const auto& layer : layers) out.insert(out.end(), layer.begin(), layer.end());
  return out;
}

void CircuitSpec::validate() const {
  if (n_qubits < 1 || n_qubits > kMaxQubits)
    throw ValidationError(fmt::format("circuit qubit count {} outside [1,{}]", n_qubits, kMaxQubits));
  for (const auto& layer : layers)
    for (const auto& g : layer) g.validate(n_qubits);
}

void EncoderSpec::validate() const {
  if (n_qubits < 1 || n_qubits > kMaxQubits)
    throw ValidationError(fmt::format("encoder qubit count {} outside [1,{}]", n_qubits, kMaxQubits));
  if (n_blocks < 1) throw ValidationError("encoder needs at least one block");
  if (feature_dim != n_qubits)
    throw ValidationError(fmt::format("encoder feature_dim {} must equal n_qubits {}", feature_dim,
                                      n_qubits));
}

void AnsatzSpec::validate() const {
  if (n_qubits < 1 || n_qubits > kMaxQubits)
    throw ValidationError(fmt::format("ansatz qubit count {} outside [1,{}]", n_qubits, kMaxQubits));
  if (n_layers < 0) throw ValidationError("ansatz layer count must be >= 0");
}

bool in_pl_box(std::span<const double> theta) {
  return std::all_of(theta.begin(), theta.end(),
                     [](double t) { return t >= kBoxLow && t <= kBoxHigh; });
}

void clip_to_pl_box(ParamVector& theta) {
  for (auto& t : theta) t = std::clamp(t, kBoxLow, kBoxHigh);
}

CircuitSpec build_encoder(const EncoderSpec& spec, std::span<const double> x) {
  spec.validate();
  if (x.size() != static_cast<std::size_t>(spec.feature_dim))
    throw ValidationError(
        fmt::format("encoder expects {} features, got {}", spec.feature_dim, x.size()));
  double phi = 1.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!(x[j] >= -kFeatureSlack && x[j] <= std::numbers::pi + kFeatureSlack))
      throw ValidationError(fmt::format("feature {} = {} outside [0, pi]", j, x[j]));
    phi *= std::numbers::pi - x[j];
  }
  std::vector<GateOp> block;
  for (int q = 0; q < spec.n_qubits; ++q) block.push_back(GateOp::h(q));
  for (int q = 0; q < spec.n_qubits; ++q) block.push_back(GateOp::ry(q, x[q]));
  for (int q = 0; q + 1 < spec.n_qubits; ++q) block.push_back(GateOp::cry(q, q + 1, phi));
  CircuitSpec c{spec.n_qubits, {}};
  c.layers.assign(spec.n_blocks, block);
  return c;
}

CircuitSpec build_ansatz(const AnsatzSpec& spec, std::span<const double> theta) {
  spec.validate();
  if (theta.size() != spec.param_count())
    throw ValidationError(
        fmt::format("ansatz expects {} parameters, got {}", spec.param_count(), theta.size()));
  CircuitSpec c{spec.n_qubits, {}};
  c.layers.reserve(spec.n_layers);
  std::size_t k = 0;
  for (int l = 0; l < spec.n_layers; ++l) {
    std::vector<GateOp> layer;
    for (int q = 0; q < spec.n_qubits; ++q) layer.push_back(GateOp::ry(q, theta[k++]));
    for (int q = 0; q + 1 < spec.n_qubits; ++q) layer.push_back(GateOp::cx(q, q + 1));
    c.layers.push_back(std::move(layer));
  }
  return c;
}

DensityMatrix run_circuit(const DensityMatrix& input, const CircuitSpec& circuit,
                          const NoiseSpec& noise) {
  if (input.n_qubits() != circuit.n_qubits)
    throw ValidationError("state and circuit qubit counts differ");
  noise.validate();
  DensityMatrix rho = input;
  for (const auto& layer : circuit.layers) {
    for (const auto& g : layer) rho = apply_gate(rho, g);
    rho = noise.apply(rho);
  }
  return rho;
}

ComplexMatrix heisenberg(const ComplexMatrix& observable, const CircuitSpec& circuit,
                         const NoiseSpec& noise) {
  if (observable.rows() != (std::size_t{1} << circuit.n_qubits))
    throw ValidationError("observable and circuit qubit counts differ");
  noise.validate();
  ComplexMatrix o = observable;
  for (auto layer = circuit.layers.rbegin(); layer != circuit.layers.rend(); ++layer) {
    o = noise.apply_adjoint(o);
    for (auto g = layer->rbegin(); g != layer->rend(); ++g) o = conjugate(o, *g, true);
  }
  return o;
}

DensityMatrix evaluate(const CircuitSpec& encoder, const CircuitSpec& ansatz,
                       const NoiseSpec& noise) {
  check_same_register(encoder, ansatz);
  const DensityMatrix zero = DensityMatrix::basis_state(encoder.n_qubits, 0);
  return run_circuit(run_circuit(zero, encoder, noise), ansatz, noise);
}

MergedGeneral evaluate_components(const CircuitSpec& encoder, const CircuitSpec& ansatz,
                                  const NoiseSpec& noise) {
  check_same_register(encoder, ansatz);
  ComponentTracker tracker(DensityMatrix::basis_state(encoder.n_qubits, 0));
  for (const CircuitSpec* c : {&encoder, &ansatz})
    for (const auto& layer : c->layers) {
      for (const auto& g : layer) tracker.apply_gate(g);
      tracker.apply_channel(noise);
    }
  return tracker.result();
}

ComplexMatrix circuit_unitary(const CircuitSpec& circuit) {
  circuit.validate();
  ComplexMatrix u = ComplexMatrix::identity(std::size_t{1} << circuit.n_qubits);
  for (const auto& layer : circuit.layers)
    for (const auto& g : layer) u = g.matrix(circuit.n_qubits) * u;
  return u;
}

ParamVector shift_parameter(const ParamVector& theta, std::size_t j, int sign) {
  if (j >= theta.size())
    throw ValidationError(fmt::format("shift index {} out of range for d = {}", j, theta.size()));
  if (sign != 1 && sign != -1) throw ValidationError("shift sign must be +1 or -1");
  ParamVector out = theta;
  out[j] += sign * (std::numbers::pi / 2.0);
  return out;
}

}  // namespace qnn
