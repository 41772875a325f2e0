#include "qnn/qcore.hpp"

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "qnn/error.hpp"

namespace qnn {

namespace {

constexpr double kHermTol = 1e-10;
constexpr double kTraceTol = 1e-10;
constexpr double kPsdFloor = -1e-9;

void require_same_shape(const ComplexMatrix& a, const ComplexMatrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ValidationError(fmt::format("{}: shape mismatch {}x{} vs {}x{}", op, a.rows(), a.cols(),
                                      b.rows(), b.cols()));
}

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError(fmt::format("{} = {} outside [0,1]", name, p));
}

// Bit mask of qubit q in an n-qubit register (qubit 0 is the high bit).
std::size_t qubit_mask(int n_qubits, int q) { return std::size_t{1} << (n_qubits - 1 - q); }

bool controls_set(std::size_t index, std::size_t control_mask) {
  return (index & control_mask) == control_mask;
}

// Left-multiply rows by a controlled 2x2 operator g acting on target_mask.
void left_apply(ComplexMatrix& a, const Complex g[4], std::size_t target_mask, std::size_t control_mask) {
  const std::size_t dim = a.rows();
  const std::size_t cols = a.cols();
  for (std::size_t i0 = 0; i0 < dim; ++i0) {
    if ((i0 & target_mask) || !controls_set(i0, control_mask)) continue;
    const std::size_t i1 = i0 | target_mask;
    Complex* r0 = &a(i0, 0);
    Complex* r1 = &a(i1, 0);
    for (std::size_t c = 0; c < cols; ++c) {
      const Complex x0 = r0[c];
      const Complex x1 = r1[c];
      r0[c] = g[0] * x0 + g[1] * x1;
      r1[c] = g[2] * x0 + g[3] * x1;
    }
  }
}

// Right-multiply columns by the adjoint of a controlled 2x2 operator g.
void right_apply_adjoint(ComplexMatrix& a, const Complex g[4], std::size_t target_mask,
                         std::size_t control_mask) {
  const std::size_t dim = a.cols();
  const Complex c00 = std::conj(g[0]), c01 = std::conj(g[1]);
  const Complex c10 = std::conj(g[2]), c11 = std::conj(g[3]);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    Complex* row = &a(r, 0);
    for (std::size_t j0 = 0; j0 < dim; ++j0) {
      if ((j0 & target_mask) || !controls_set(j0, control_mask)) continue;
      const std::size_t j1 = j0 | target_mask;
      const Complex x0 = row[j0];
      const Complex x1 = row[j1];
      row[j0] = x0 * c00 + x1 * c01;
      row[j1] = x0 * c10 + x1 * c11;
    }
  }
}

}  // namespace

// ---------------------------------------------------------------- ComplexMatrix

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols) {
  if (rows == 0 || cols == 0) throw ValidationError("matrix dimensions must be positive");
}

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<Complex> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (rows == 0 || cols == 0) throw ValidationError("matrix dimensions must be positive");
  if (data_.size() != rows * cols)
    throw ValidationError(
        fmt::format("matrix {}x{} given {} entries", rows, cols, data_.size()));
}

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
  ComplexMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

ComplexMatrix ComplexMatrix::from_rows(
    std::initializer_list<std::initializer_list<Complex>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<Complex> entries;
  entries.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ValidationError("ragged matrix rows");
    entries.insert(entries.end(), row.begin(), row.end());
  }
  return ComplexMatrix(r, c, std::move(entries));
}

ComplexMatrix ComplexMatrix::adjoint() const {
  ComplexMatrix out(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) out(c, r) = std::conj((*this)(r, c));
  return out;
}

Complex ComplexMatrix::trace() const {
  if (!square()) throw ValidationError("trace of a non-square matrix");
  Complex t = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) t += (*this)(i, i);
  return t;
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& o) {
  require_same_shape(*this, o, "add");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& o) {
  require_same_shape(*this, o, "subtract");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(Complex s) {
  for (auto& x : data_) x *= s;
  return *this;
}

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
ComplexMatrix operator*(ComplexMatrix a, Complex s) { return a *= s; }
ComplexMatrix operator*(Complex s, ComplexMatrix a) { return a *= s; }

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols() != b.rows())
    throw ValidationError(fmt::format("multiply: {}x{} by {}x{}", a.rows(), a.cols(), b.rows(),
                                      b.cols()));
  ComplexMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const Complex aik = a(i, k);
      if (aik == Complex{}) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      for (std::size_t k = 0; k < b.rows(); ++k)
        for (std::size_t l = 0; l < b.cols(); ++l)
          out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
  return out;
}

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.entries().size(); ++i)
    m = std::max(m, std::abs(a.entries()[i] - b.entries()[i]));
  return m;
}

bool is_hermitian(const ComplexMatrix& m, double tol) {
  if (!m.square()) return false;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i; j < m.cols(); ++j)
      if (std::abs(m(i, j) - std::conj(m(j, i))) > tol) return false;
  return true;
}

bool is_unitary(const ComplexMatrix& m, double tol) {
  if (!m.square()) return false;
  return max_abs_diff(m.adjoint() * m, ComplexMatrix::identity(m.rows())) <= tol;
}

std::vector<double> hermitian_eigenvalues(const ComplexMatrix& m) {
  if (!m.square()) throw ValidationError("eigenvalues of a non-square matrix");
  const auto n = static_cast<Eigen::Index>(m.rows());
  Eigen::MatrixXcd e(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) e(i, j) = m(i, j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(e, Eigen::EigenvaluesOnly);
  const auto& ev = solver.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

double trace_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  const std::size_t n = a.rows();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Complex* ar = &a(i, 0);
    for (std::size_t j = 0; j < n; ++j) {
      const Complex& x = ar[j];
      const Complex& y = b(j, i);
      acc += x.real() * y.real() - x.imag() * y.imag();
    }
  }
  return acc;
}

int qubits_for_dim(std::size_t dim) {
  for (int n = 0; n <= kMaxQubits; ++n)
    if (dim == (std::size_t{1} << n)) return n;
  throw ValidationError(fmt::format("dimension {} is not 2^n with n <= {}", dim, kMaxQubits));
}

// ---------------------------------------------------------------- DensityMatrix

void validate_density(const ComplexMatrix& m) {
  if (!m.square()) throw ValidationError("density matrix must be square");
  qubits_for_dim(m.rows());
  if (!is_hermitian(m, kHermTol)) throw ValidationError("density matrix is not Hermitian");
  const Complex tr = m.trace();
  if (std::abs(tr - Complex{1.0}) > kTraceTol)
    throw ValidationError(fmt::format("density matrix trace {} != 1", tr.real()));
  const auto ev = hermitian_eigenvalues(m);
  if (ev.front() < kPsdFloor)
    throw ValidationError(fmt::format("density matrix has eigenvalue {}", ev.front()));
}

DensityMatrix::DensityMatrix(ComplexMatrix m) : m_(std::move(m)) { validate_density(m_); }

DensityMatrix DensityMatrix::trusted(ComplexMatrix m) {
#ifndef NDEBUG
  validate_density(m);
#endif
  return DensityMatrix(std::move(m), Unchecked{});
}

DensityMatrix DensityMatrix::basis_state(int n_qubits, std::size_t index) {
  if (n_qubits < 0 || n_qubits > kMaxQubits)
    throw ValidationError(fmt::format("qubit count {} outside [0,{}]", n_qubits, kMaxQubits));
  const std::size_t dim = std::size_t{1} << n_qubits;
  if (index >= dim) throw ValidationError("basis index out of range");
  ComplexMatrix m(dim, dim);
  m(index, index) = 1.0;
  return DensityMatrix(std::move(m), Unchecked{});
}

DensityMatrix DensityMatrix::maximally_mixed(int n_qubits) {
  if (n_qubits < 0 || n_qubits > kMaxQubits)
    throw ValidationError(fmt::format("qubit count {} outside [0,{}]", n_qubits, kMaxQubits));
  const std::size_t dim = std::size_t{1} << n_qubits;
  return DensityMatrix(ComplexMatrix::identity(dim) * Complex(1.0 / static_cast<double>(dim)),
                       Unchecked{});
}

DensityMatrix DensityMatrix::from_pure(const std::vector<Complex>& amplitudes) {
  const std::size_t dim = amplitudes.size();
  qubits_for_dim(dim);
  double norm = 0.0;
  for (const auto& a : amplitudes) norm += std::norm(a);
  if (std::abs(norm - 1.0) > kTraceTol)
    throw ValidationError(fmt::format("state vector norm^2 {} != 1", norm));
  ComplexMatrix m(dim, dim);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) m(i, j) = amplitudes[i] * std::conj(amplitudes[j]);
  return DensityMatrix(std::move(m), Unchecked{});
}

DensityMatrix DensityMatrix::mixture(std::span<const DensityMatrix> states) {
  if (states.empty()) throw ValidationError("mixture of zero states");
  ComplexMatrix acc = states.front().matrix();
  for (std::size_t i = 1; i < states.size(); ++i) acc += states[i].matrix();
  acc *= Complex(1.0 / static_cast<double>(states.size()));
  return trusted(std::move(acc));
}

// ---------------------------------------------------------------- GateOp

GateOp GateOp::h(int q) { return GateOp{GateKind::H, {q}, {}, 0.0, nullptr}; }
GateOp GateOp::ry(int q, double angle) { return GateOp{GateKind::RY, {q}, {}, angle, nullptr}; }
GateOp GateOp::cry(int control, int target, double angle) {
  return GateOp{GateKind::CRY, {target}, {control}, angle, nullptr};
}
GateOp GateOp::cx(int control, int target) {
  return GateOp{GateKind::CX, {target}, {control}, 0.0, nullptr};
}

GateOp GateOp::unitary(std::vector<int> targets, ComplexMatrix u) {
  const std::size_t local = std::size_t{1} << targets.size();
  if (u.rows() != local || u.cols() != local)
    throw ValidationError(fmt::format("custom gate on {} qubits needs a {}x{} matrix",
                                      targets.size(), local, local));
  if (!is_unitary(u)) throw ValidationError("custom gate matrix is not unitary");
  return GateOp{GateKind::Custom, std::move(targets), {}, 0.0,
                std::make_shared<const ComplexMatrix>(std::move(u))};
}

ComplexMatrix GateOp::local_matrix() const {
  const double c = std::cos(angle / 2.0);
  const double s = std::sin(angle / 2.0);
  const double r = 1.0 / std::sqrt(2.0);
  switch (kind) {
    case GateKind::H:
      return ComplexMatrix::from_rows({{r, r}, {r, -r}});
    case GateKind::RY:
    case GateKind::CRY:
      return ComplexMatrix::from_rows({{c, -s}, {s, c}});
    case GateKind::CX:
      return ComplexMatrix::from_rows({{0.0, 1.0}, {1.0, 0.0}});
    case GateKind::Custom:
      if (!custom) throw ValidationError("custom gate without a matrix");
      return *custom;
  }
  throw ValidationError("unknown gate kind");
}

void GateOp::validate(int n_qubits) const {
  if (targets.empty()) throw ValidationError("gate has no target qubits");
  std::vector<int> all = targets;
  all.insert(all.end(), controls.begin(), controls.end());
  for (int q : all)
    if (q < 0 || q >= n_qubits)
      throw ValidationError(fmt::format("qubit index {} invalid for {} qubits", q, n_qubits));
  std::sort(all.begin(), all.end());
  if (std::adjacent_find(all.begin(), all.end()) != all.end())
    throw ValidationError("gate qubit indices are not distinct");
  if (kind == GateKind::Custom) {
    if (!custom) throw ValidationError("custom gate without a matrix");
    const std::size_t local = std::size_t{1} << targets.size();
    if (custom->rows() != local || custom->cols() != local)
      throw ValidationError("custom gate matrix size does not match its targets");
    if (!is_unitary(*custom)) throw ValidationError("custom gate matrix is not unitary");
  } else if (targets.size() != 1) {
    throw ValidationError("standard gates act on one target qubit");
  }
}

ComplexMatrix GateOp::matrix(int n_qubits) const {
  validate(n_qubits);
  const std::size_t dim = std::size_t{1} << n_qubits;
  const ComplexMatrix local = local_matrix();
  std::size_t target_mask = 0, control_mask = 0;
  for (int q : targets) target_mask |= qubit_mask(n_qubits, q);
  for (int q : controls) control_mask |= qubit_mask(n_qubits, q);
  auto local_index = [&](std::size_t full) {
    std::size_t idx = 0;
    for (int q : targets) idx = (idx << 1) | ((full & qubit_mask(n_qubits, q)) ? 1u : 0u);
    return idx;
  };
  ComplexMatrix out(dim, dim);
  for (std::size_t r = 0; r < dim; ++r)
    for (std::size_t c = 0; c < dim; ++c) {
      if ((r & ~target_mask) != (c & ~target_mask)) continue;
      if (controls_set(c, control_mask))
        out(r, c) = local(local_index(r), local_index(c));
      else if (r == c)
        out(r, c) = 1.0;
    }
  return out;
}

// ---------------------------------------------------------------- operations

ComplexMatrix conjugate(const ComplexMatrix& a, const GateOp& gate, bool heisenberg) {
  if (!a.square()) throw ValidationError("conjugate: operand is not square");
  const int n = qubits_for_dim(a.rows());
  if (gate.kind == GateKind::Custom) {
    const ComplexMatrix u = gate.matrix(n);
    return heisenberg ? u.adjoint() * a * u : u * a * u.adjoint();
  }
  gate.validate(n);
  const ComplexMatrix local = gate.local_matrix();
  Complex g[4] = {local(0, 0), local(0, 1), local(1, 0), local(1, 1)};
  if (heisenberg) {
    std::swap(g[1], g[2]);
    for (auto& x : g) x = std::conj(x);
  }
  const std::size_t target_mask = qubit_mask(n, gate.targets.front());
  std::size_t control_mask = 0;
  for (int q : gate.controls) control_mask |= qubit_mask(n, q);
  ComplexMatrix out = a;
  left_apply(out, g, target_mask, control_mask);
  right_apply_adjoint(out, g, target_mask, control_mask);
  return out;
}

DensityMatrix apply_gate(const DensityMatrix& state, const GateOp& gate) {
  return DensityMatrix::trusted(conjugate(state.matrix(), gate, false));
}

DensityMatrix apply_depolarize(const DensityMatrix& state, double p) {
  check_probability(p, "depolarizing rate");
  ComplexMatrix m = state.matrix() * Complex(1.0 - p);
  const double w = p / static_cast<double>(state.dim());
  for (std::size_t i = 0; i < state.dim(); ++i) m(i, i) += w;
  return DensityMatrix::trusted(std::move(m));
}

DensityMatrix apply_general_channel(const DensityMatrix& state, double p1, double p2, double p3,
                                    const DensityMatrix& kappa) {
  check_probability(p1, "p1");
  check_probability(p2, "p2");
  check_probability(p3, "p3");
  if (p1 > 0.0 && !(p3 > 0.0)) throw ValidationError("general channel needs p3 > 0");
  if (std::abs(p2 + p3 - p1) > 1e-12)
    throw ValidationError(fmt::format("general channel weights: p2 + p3 = {} != p1 = {}", p2 + p3, p1));
  if (kappa.dim() != state.dim()) throw ValidationError("kappa dimension does not match state");
  ComplexMatrix m = state.matrix() * Complex(1.0 - p1);
  m += kappa.matrix() * Complex(p2);
  const double w = p3 / static_cast<double>(state.dim());
  for (std::size_t i = 0; i < state.dim(); ++i) m(i, i) += w;
  return DensityMatrix::trusted(std::move(m));
}

double expectation(const DensityMatrix& state, const ComplexMatrix& observable) {
  if (observable.rows() != state.dim() || observable.cols() != state.dim())
    throw ValidationError("observable dimension does not match state");
  if (!is_hermitian(observable, kHermTol)) throw ValidationError("observable is not Hermitian");
  return trace_product(observable, state.matrix());
}

}  // namespace qnn
