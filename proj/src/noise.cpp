#include "qnn/noise.hpp"

#include <fmt/format.h>

#include <cmath>

#include "qnn/error.hpp"

namespace qnn {

namespace {

void check_unit(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(fmt::format("{} = {} outside [0,1]", name, v));
}

void add_identity(ComplexMatrix& m, double weight_over_dim) {
  for (std::size_t i = 0; i < m.rows(); ++i) m(i, i) += weight_over_dim;
}

}  // namespace

NoiseSpec NoiseSpec::none(int layers) {
  NoiseSpec s;
  s.layers = layers;
  return s;
}

NoiseSpec NoiseSpec::depolarize(double p, int layers) {
  NoiseSpec s;
  s.kind = NoiseKind::Depolarize;
  s.p = p;
  s.layers = layers;
  s.validate();
  return s;
}

NoiseSpec NoiseSpec::general(double p1, double p2, double p3, DensityMatrix kappa, int layers) {
  NoiseSpec s;
  s.kind = NoiseKind::General;
  s.p1 = p1;
  s.p2 = p2;
  s.p3 = p3;
  s.kappa = std::make_shared<const DensityMatrix>(std::move(kappa));
  s.layers = layers;
  s.validate();
  return s;
}

void NoiseSpec::validate() const {
  if (layers < 0) throw ValidationError("noise layer count must be >= 0");
  switch (kind) {
    case NoiseKind::None:
      return;
    case NoiseKind::Depolarize:
      check_unit(p, "p");
      return;
    case NoiseKind::General:
      check_unit(p1, "p1");
      check_unit(p2, "p2");
      check_unit(p3, "p3");
      if (p1 > 0.0 && !(p3 > 0.0)) throw ValidationError("general channel needs p3 > 0");
      if (std::abs(p2 + p3 - p1) > 1e-12)
        throw ValidationError(fmt::format("general channel: p2 + p3 = {} != p1 = {}", p2 + p3, p1));
      if (!kappa) throw ValidationError("general channel needs kappa");
      return;
  }
}

bool NoiseSpec::trivial() const { return rate() == 0.0; }

double NoiseSpec::rate() const {
  switch (kind) {
    case NoiseKind::None:
      return 0.0;
    case NoiseKind::Depolarize:
      return p;
    case NoiseKind::General:
      return p1;
  }
  return 0.0;
}

DensityMatrix NoiseSpec::apply(const DensityMatrix& state) const {
  switch (kind) {
    case NoiseKind::None:
      return state;
    case NoiseKind::Depolarize:
      return apply_depolarize(state, p);
    case NoiseKind::General:
      return apply_general_channel(state, p1, p2, p3, *kappa);
  }
  return state;
}

ComplexMatrix NoiseSpec::apply_adjoint(const ComplexMatrix& observable) const {
  if (trivial()) return observable;
  const double dim = static_cast<double>(observable.rows());
  const double tr = observable.trace().real();
  if (kind == NoiseKind::Depolarize) {
    ComplexMatrix out = observable * Complex(1.0 - p);
    add_identity(out, p * tr / dim);
    return out;
  }
  if (kappa->dim() != observable.rows()) throw ValidationError("kappa dimension mismatch");
  ComplexMatrix out = observable * Complex(1.0 - p1);
  add_identity(out, p2 * trace_product(kappa->matrix(), observable) + p3 * tr / dim);
  return out;
}

double merged_rate(double p, int layers) {
  check_unit(p, "p");
  if (layers < 0) throw ValidationError("layer count must be >= 0");
  return 1.0 - std::pow(1.0 - p, layers);
}

ComponentTracker::ComponentTracker(const DensityMatrix& initial)
    : rho_(initial.matrix()), kappa_(initial.dim(), initial.dim()) {}

void ComponentTracker::apply_gate(const GateOp& gate) {
  rho_ = conjugate(rho_, gate);
  kappa_ = conjugate(kappa_, gate);
}

void ComponentTracker::apply_channel(const NoiseSpec& noise) {
  noise.validate();
  switch (noise.kind) {
    case NoiseKind::None:
      return;
    case NoiseKind::Depolarize:
      rho_weight_ *= 1.0 - noise.p;
      kappa_ *= Complex(1.0 - noise.p);
      identity_weight_ = (1.0 - noise.p) * identity_weight_ + noise.p;
      return;
    case NoiseKind::General:
      if (noise.kappa->dim() != rho_.rows()) throw ValidationError("kappa dimension mismatch");
      rho_weight_ *= 1.0 - noise.p1;
      kappa_ *= Complex(1.0 - noise.p1);
      kappa_ += noise.kappa->matrix() * Complex(noise.p2);
      identity_weight_ = (1.0 - noise.p1) * identity_weight_ + noise.p3;
      return;
  }
}

MergedGeneral ComponentTracker::result() const {
  const double kappa_weight = kappa_.trace().real();
  const std::size_t dim = rho_.rows();
  ComplexMatrix total = rho_ * Complex(rho_weight_);
  total += kappa_;
  add_identity(total, identity_weight_ / static_cast<double>(dim));
  std::optional<DensityMatrix> kappa_eff;
  if (kappa_weight > 0.0) kappa_eff = DensityMatrix::trusted(kappa_ * Complex(1.0 / kappa_weight));
  return MergedGeneral{DensityMatrix::trusted(std::move(total)), rho_weight_, kappa_weight,
                       identity_weight_, std::move(kappa_eff)};
}

MergedGeneral merged_general_state(const DensityMatrix& noiseless_state, const NoiseSpec& noise) {
  noise.validate();
  ComponentTracker tracker(noiseless_state);
  for (int l = 0; l < noise.layers; ++l) tracker.apply_channel(noise);
  return tracker.result();
}

}  // namespace qnn
