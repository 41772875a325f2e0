#pragma once

#include <memory>
#include <optional>

#include "qnn/qcore.hpp"

namespace qnn {

enum class NoiseKind { None, Depolarize, General };

/// One noise channel applied after every circuit layer. `layers` is L_Q and is
/// only read by the merged-form helpers; circuit evaluation counts layers itself.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::None;
  double p = 0.0;  // depolarizing rate
  double p1 = 0.0, p2 = 0.0, p3 = 0.0;
  std::shared_ptr<const DensityMatrix> kappa;
  int layers = 0;

  static NoiseSpec none(int layers = 0);
  static NoiseSpec depolarize(double p, int layers = 0);
  static NoiseSpec general(double p1, double p2, double p3, DensityMatrix kappa, int layers = 0);

  void validate() const;
  /// True when the channel is the identity map.
  bool trivial() const;
  /// Total replaced mass per layer: p for depolarization, p1 for the general channel.
  double rate() const;

  /// One application of the channel to a state.
  DensityMatrix apply(const DensityMatrix& state) const;
  /// Adjoint channel on an observable, so Tr(O E(rho)) = Tr(E^dagger(O) rho).
  ComplexMatrix apply_adjoint(const ComplexMatrix& observable) const;
};

/// 1 - (1-p)^L_Q.
double merged_rate(double p, int layers);

/// Merged representation rho_weight*rho + kappa_weight*kappa_eff + identity_weight*I/D.
struct MergedGeneral {
  DensityMatrix state;
  double rho_weight;
  double kappa_weight;
  double identity_weight;
  std::optional<DensityMatrix> kappa_eff;  // unset when kappa_weight == 0
};

/// Follows the three components of a state through gates and channel layers.
/// Gates rotate the rho and kappa parts; the identity part is invariant.
class ComponentTracker {
 public:
  explicit ComponentTracker(const DensityMatrix& initial);
  void apply_gate(const GateOp& gate);
  void apply_channel(const NoiseSpec& noise);
  MergedGeneral result() const;

 private:
  ComplexMatrix rho_;    // normalized pure-evolution part
  ComplexMatrix kappa_;  // unnormalized accumulated kappa mass
  double rho_weight_ = 1.0;
  double identity_weight_ = 0.0;
};

/// Composes the channel noise.layers times on an already-evolved noiseless state.
/// Depolarizing specs are treated as the general channel with p2 = 0.
MergedGeneral merged_general_state(const DensityMatrix& noiseless_state, const NoiseSpec& noise);

}  // namespace qnn
