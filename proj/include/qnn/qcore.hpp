#pragma once
/**
 * @file qcore.hpp
 * Dense complex matrices, density matrices, gates and noise channels for
 * small registers. Qubit 0 is the most significant tensor factor, so the
 * basis index of |b0 b1 ... b(n-1)> is b0*2^(n-1) + ... + b(n-1).
 */

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <memory>
#include <span>
#include <vector>

namespace qnn {

using Complex = std::complex<double>;

/// Largest register the simulator accepts.
inline constexpr int kMaxQubits = 5;

class ComplexMatrix {
 public:
  /// Zero matrix. Both dimensions must be positive.
  ComplexMatrix(std::size_t rows, std::size_t cols);
  /// Row-major entries; entries.size() must equal rows*cols.
  ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<Complex> entries);

  static ComplexMatrix identity(std::size_t n);
  static ComplexMatrix from_rows(std::initializer_list<std::initializer_list<Complex>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  Complex& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const Complex& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  const std::vector<Complex>& entries() const { return data_; }
  std::vector<Complex>& entries() { return data_; }

  ComplexMatrix adjoint() const;
  Complex trace() const;

  ComplexMatrix& operator+=(const ComplexMatrix& o);
  ComplexMatrix& operator-=(const ComplexMatrix& o);
  ComplexMatrix& operator*=(Complex s);

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<Complex> data_;
};

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator*(ComplexMatrix a, Complex s);
ComplexMatrix operator*(Complex s, ComplexMatrix a);
ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);
double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b);
bool is_hermitian(const ComplexMatrix& m, double tol = 1e-10);
bool is_unitary(const ComplexMatrix& m, double tol = 1e-10);
/// Eigenvalues (ascending) of a Hermitian matrix.
std::vector<double> hermitian_eigenvalues(const ComplexMatrix& m);
/// Re Tr(AB) for square matrices of equal size. No Hermiticity check.
double trace_product(const ComplexMatrix& a, const ComplexMatrix& b);

/// log2(dim); throws unless dim is a power of two within the register limit.
int qubits_for_dim(std::size_t dim);

class DensityMatrix {
 public:
  /// Validates Hermiticity (1e-10), unit trace (1e-10) and PSD (eigenvalues >= -1e-9).
  explicit DensityMatrix(ComplexMatrix m);

  /// Skips validation in release builds. For results of operations that
  /// preserve the invariants by construction.
  static DensityMatrix trusted(ComplexMatrix m);

  static DensityMatrix basis_state(int n_qubits, std::size_t index = 0);
  static DensityMatrix maximally_mixed(int n_qubits);
  /// |psi><psi| for a unit-norm amplitude vector.
  static DensityMatrix from_pure(const std::vector<Complex>& amplitudes);
  /// Uniform mixture of states of equal dimension.
  static DensityMatrix mixture(std::span<const DensityMatrix> states);

  std::size_t dim() const { return m_.rows(); }
  int n_qubits() const { return qubits_for_dim(m_.rows()); }
  const ComplexMatrix& matrix() const { return m_; }
  const Complex& operator()(std::size_t r, std::size_t c) const { return m_(r, c); }

 private:
  struct Unchecked {};
  DensityMatrix(ComplexMatrix m, Unchecked) : m_(std::move(m)) {}
  ComplexMatrix m_;
};

/// Throws ValidationError naming the violated density-matrix invariant.
void validate_density(const ComplexMatrix& m);

enum class GateKind { H, RY, CRY, CX, Custom };

struct GateOp {
  GateKind kind = GateKind::H;
  std::vector<int> targets;
  std::vector<int> controls;
  double angle = 0.0;  // RY and CRY only
  std::shared_ptr<const ComplexMatrix> custom;  // local unitary on targets

  static GateOp h(int q);
  static GateOp ry(int q, double angle);
  static GateOp cry(int control, int target, double angle);
  static GateOp cx(int control, int target);
  /// Arbitrary unitary on the listed targets (first target = most significant).
  static GateOp unitary(std::vector<int> targets, ComplexMatrix u);

  /// Operator on the target space, ignoring controls.
  ComplexMatrix local_matrix() const;
  /// Full 2^n x 2^n operator including controls and identity elsewhere.
  ComplexMatrix matrix(int n_qubits) const;
  /// Indices in range and pairwise distinct; custom matrix unitary and sized 2^|targets|.
  void validate(int n_qubits) const;
};

/// U rho U^dagger.
DensityMatrix apply_gate(const DensityMatrix& state, const GateOp& gate);

/// U A U^dagger (heisenberg = false) or U^dagger A U (heisenberg = true) for
/// any square A of matching size. Used for both states and observables.
ComplexMatrix conjugate(const ComplexMatrix& a, const GateOp& gate, bool heisenberg = false);

/// (1-p) rho + p I/D.
DensityMatrix apply_depolarize(const DensityMatrix& state, double p);

/// (1-p1) rho + p2 kappa + p3 I/D with p2 + p3 = p1, p3 > 0.
DensityMatrix apply_general_channel(const DensityMatrix& state, double p1, double p2, double p3,
                                    const DensityMatrix& kappa);

/// Tr(observable * state); the observable must be Hermitian.
double expectation(const DensityMatrix& state, const ComplexMatrix& observable);

}  // namespace qnn
