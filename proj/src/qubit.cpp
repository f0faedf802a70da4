#include "qfb/qubit.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace qfb {

double hermiticity_error(const ComplexMat2& m) {
  return (m - ComplexMat2(m.adjoint())).cwiseAbs().maxCoeff();
}

double BlochVector::norm() const { return std::sqrt(x * x + y * y + z * z); }

namespace {

// Eigenvalues of a Hermitian 2x2 without building a solver: mean +- spread.
std::array<double, 2> hermitian_eigenvalues(const ComplexMat2& m) {
  const double mean = 0.5 * std::real(m(0, 0) + m(1, 1));
  const double diff = 0.5 * std::real(m(0, 0) - m(1, 1));
  const double spread = std::sqrt(diff * diff + std::norm(m(0, 1)));
  return {mean + spread, mean - spread};
}

}  // namespace

DensityMatrix DensityMatrix::from_matrix(const ComplexMat2& m, double tol) {
  const double trace_err = std::abs(m.trace() - Complex(1.0, 0.0));
  if (trace_err > tol) {
    std::ostringstream msg;
    msg << "density matrix trace deviates from 1 by " << trace_err;
    throw std::invalid_argument(msg.str());
  }
  const double herm_err = hermiticity_error(m);
  if (herm_err > tol) {
    std::ostringstream msg;
    msg << "density matrix hermiticity error " << herm_err;
    throw std::invalid_argument(msg.str());
  }
  const auto ev = hermitian_eigenvalues((m + ComplexMat2(m.adjoint())) / 2.0);
  if (ev[1] < -tol || ev[0] > 1.0 + tol) {
    std::ostringstream msg;
    msg << "density matrix spectrum [" << ev[1] << ", " << ev[0]
        << "] outside [0, 1]";
    throw std::invalid_argument(msg.str());
  }
  return DensityMatrix(m);
}

DensityMatrix DensityMatrix::from_bloch(const BlochVector& r) {
  if (r.norm() > 1.0 + 1e-12) {
    std::ostringstream msg;
    msg << "Bloch vector norm " << r.norm() << " exceeds 1";
    throw std::invalid_argument(msg.str());
  }
  ComplexMat2 m;
  m(0, 0) = 0.5 * (1.0 + r.z);
  m(1, 1) = 0.5 * (1.0 - r.z);
  m(0, 1) = 0.5 * Complex(r.x, -r.y);
  m(1, 0) = 0.5 * Complex(r.x, r.y);
  return DensityMatrix(m);
}

DensityMatrix DensityMatrix::pure(const Vec2& psi) {
  const double n2 = psi.squaredNorm();
  if (n2 <= 0.0) throw std::invalid_argument("zero state vector");
  return DensityMatrix(ComplexMat2(psi * psi.adjoint() / n2));
}

DensityMatrix DensityMatrix::plus_state() {
  return pure(Vec2(1.0, 1.0));
}

DensityMatrix DensityMatrix::maximally_mixed() {
  return DensityMatrix(ComplexMat2(0.5 * identity2()));
}

BlochVector DensityMatrix::bloch() const {
  BlochVector r;
  r.x = 2.0 * std::real(m_(0, 1));
  r.y = -2.0 * std::imag(m_(0, 1));
  r.z = std::real(m_(0, 0) - m_(1, 1));
  return r;
}

double DensityMatrix::purity() const { return std::real((m_ * m_).trace()); }

double DensityMatrix::min_eigenvalue() const {
  return hermitian_eigenvalues(m_)[1];
}

EigSystem eig_hermitian(const ComplexMat2& m, double herm_tol) {
  const double herm_err = hermiticity_error(m);
  if (herm_err > herm_tol) {
    std::ostringstream msg;
    msg << "eig_hermitian: input hermiticity error " << herm_err;
    throw std::invalid_argument(msg.str());
  }
  Eigen::SelfAdjointEigenSolver<ComplexMat2> solver;
  solver.compute((m + ComplexMat2(m.adjoint())) / 2.0);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("eig_hermitian: eigensolver failed");
  }
  EigSystem out;
  // Eigen sorts ascending; flip to descending.
  out.values = {solver.eigenvalues()(1), solver.eigenvalues()(0)};
  out.vectors = {Vec2(solver.eigenvectors().col(1)),
                 Vec2(solver.eigenvectors().col(0))};
  return out;
}

Povm Povm::projective(const BlochVector& axis) {
  const double n = axis.norm();
  if (n <= 0.0) throw std::invalid_argument("projective POVM needs a nonzero axis");
  const ComplexMat2 ns =
      (axis.x * sigma_x() + axis.y * sigma_y() + axis.z * sigma_z()) / n;
  Povm p;
  p.effects = {0.5 * (identity2() + ns), 0.5 * (identity2() - ns)};
  return p;
}

void Povm::validate(double tol) const {
  if (effects.empty()) throw std::invalid_argument("POVM has no effects");
  ComplexMat2 sum = ComplexMat2::Zero();
  for (const auto& e : effects) {
    if (hermiticity_error(e) > tol) {
      throw std::invalid_argument("POVM effect is not Hermitian");
    }
    const auto ev = eig_hermitian(e, tol);
    if (ev.values[1] < -tol) {
      std::ostringstream msg;
      msg << "POVM effect has negative eigenvalue " << ev.values[1];
      throw std::invalid_argument(msg.str());
    }
    sum += e;
  }
  const double completeness = (sum - identity2()).cwiseAbs().maxCoeff();
  if (completeness > tol) {
    std::ostringstream msg;
    msg << "POVM effects sum deviates from identity by " << completeness;
    throw std::invalid_argument(msg.str());
  }
}

std::vector<double> Povm::probabilities(const DensityMatrix& rho) const {
  std::vector<double> p;
  p.reserve(effects.size());
  for (const auto& e : effects) p.push_back(std::real((e * rho.mat()).trace()));
  return p;
}

double expectation(const ComplexMat2& op, const DensityMatrix& rho) {
  return std::real((op * rho.mat()).trace());
}

}  // namespace qfb
