#pragma once

// Qubit state plumbing: 2x2 complex operators, validated density matrices,
// Bloch-vector conversions, Hermitian eigendecomposition, POVMs.

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <vector>

namespace qfb {

using Complex = std::complex<double>;
using ComplexMat2 = Eigen::Matrix2cd;
using Vec2 = Eigen::Vector2cd;

inline ComplexMat2 identity2() { return ComplexMat2::Identity(); }

inline ComplexMat2 sigma_x() {
  ComplexMat2 m;
  m << 0, 1, 1, 0;
  return m;
}

inline ComplexMat2 sigma_y() {
  ComplexMat2 m;
  m << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
  return m;
}

inline ComplexMat2 sigma_z() {
  ComplexMat2 m;
  m << 1, 0, 0, -1;
  return m;
}

// Lowering operator in the {|0>, |1>} basis with |1> the excited state:
// sigma_minus |1> = |0>.
inline ComplexMat2 sigma_minus() {
  ComplexMat2 m;
  m << 0, 1, 0, 0;
  return m;
}

inline ComplexMat2 sigma_plus() { return sigma_minus().adjoint(); }

// Largest deviation from M = M^dagger, used by validation below.
double hermiticity_error(const ComplexMat2& m);

struct BlochVector {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double norm() const;
};

// Unit-trace positive-semidefinite 2x2 matrix. Construction validates; the
// tolerance widens for states produced by stochastic integration.
class DensityMatrix {
 public:
  // Requires: trace 1, Hermitian, eigenvalues in [0, 1], each within tol.
  static DensityMatrix from_matrix(const ComplexMat2& m, double tol = 1e-12);

  // rho = (I + r.sigma)/2; requires |r| <= 1 + 1e-12.
  static DensityMatrix from_bloch(const BlochVector& r);

  // Projector |psi><psi| / <psi|psi>; psi must be nonzero.
  static DensityMatrix pure(const Vec2& psi);

  static DensityMatrix plus_state();  // (|0> + |1>)/sqrt(2) projector
  static DensityMatrix maximally_mixed();

  const ComplexMat2& mat() const { return m_; }
  BlochVector bloch() const;
  double purity() const;  // tr rho^2
  double min_eigenvalue() const;

 private:
  explicit DensityMatrix(const ComplexMat2& m) : m_(m) {}
  ComplexMat2 m_;
};

struct EigSystem {
  std::array<double, 2> values;  // descending
  std::array<Vec2, 2> vectors;   // orthonormal, paired with values
};

// Rejects input with hermiticity_error > herm_tol. Degenerate spectra get an
// arbitrary orthonormal basis.
EigSystem eig_hermitian(const ComplexMat2& m, double herm_tol = 1e-10);

// Positive-operator-valued measure; effects must sum to the identity.
struct Povm {
  std::vector<ComplexMat2> effects;

  // {(I + n.sigma)/2, (I - n.sigma)/2} for a unit axis n.
  static Povm projective(const BlochVector& axis);

  void validate(double tol = 1e-10) const;
  std::vector<double> probabilities(const DensityMatrix& rho) const;
};

// Re tr(op rho); op is expected Hermitian.
double expectation(const ComplexMat2& op, const DensityMatrix& rho);

}  // namespace qfb
