#pragma once

// Classical and quantum Fisher information for differentiable families of
// qubit states. Derivatives are taken by central finite differences with a
// per-parameter step (default 1e-5 * max(1, |x|)); shifted eigenvectors are
// gauged against the unshifted branch (the overlap is made real and positive)
// before differencing, so global-phase slips never contaminate the stencil.

#include "qfb/qubit.hpp"

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace qfb {

using ParamPoint = std::map<std::string, double>;

struct ParamFamily {
  std::function<DensityMatrix(const ParamPoint&)> rho;
  ParamPoint point;
  std::map<std::string, double> fd_steps;  // optional per-parameter overrides

  double step(const std::string& name) const;
  DensityMatrix at() const;
  DensityMatrix at_shifted(const std::string& name, double delta) const;
  ComplexMat2 drho(const std::string& name) const;  // central difference
};

// f = sum_k (dp_k)^2 / p_k. Outcomes with p_k < 1e-14 contribute nothing when
// |dp_k| < 1e-14 and make the result infinite otherwise.
double classical_fi(std::span<const double> p, std::span<const double> dp);

// Fisher information of the POVM's outcome distribution on the family.
double classical_fi_povm(const ParamFamily& f, const std::string& param,
                         const Povm& povm);

// 4[<dpsi|dpsi> - |<dpsi|psi>|^2]; requires purity > 1 - 1e-10.
double qfi_pure(const ParamFamily& f, const std::string& param);

// Spectral form: sum_k (dlam_k)^2/lam_k
//   + sum_{k != k'} 2 (lam_k - lam_k')^2/(lam_k + lam_k') |<k|dk'>|^2,
// terms guarded against vanishing eigenvalue sums; near-pure states fall back
// to qfi_pure.
double qfi_mixed_eigen(const ParamFamily& f, const std::string& param);

// Determinant form for full-rank qubit states:
// tr[(drho)^2] + tr[(rho drho)^2]/det rho; requires det rho > 1e-12.
double qfi_2d(const ParamFamily& f, const std::string& param);

// Symmetric logarithmic derivative,
// 2 sum_{m,n} <m|drho|n>/(p_m + p_n) |m><n| over p_m + p_n > 1e-12.
ComplexMat2 sld(const ParamFamily& f, const std::string& param);

struct QfiMatrix {
  std::vector<std::string> params;
  Eigen::MatrixXd values;

  void validate(double tol = 1e-10) const;  // symmetric, positive semidefinite
};

// Multiparameter QFI from the Bloch vector r(x):
// F_ij = dr_i . dr_j + (r . dr_i)(r . dr_j)/(1 - |r|^2); requires |r| < 1 - 1e-8.
QfiMatrix qfi_matrix_bloch(const ParamFamily& f,
                           const std::vector<std::string>& params);

// Single-parameter Cramer-Rao bound 1/(N F); F = 0 reports divergence (inf).
double crb(double fisher_information, double n_probes = 1.0);

// Matrix bound F^{-1}/N. A singular matrix is not inverted; the result is the
// per-parameter diagonal 1/(N F_ii) with inf where F_ii vanishes.
Eigen::MatrixXd crb(const QfiMatrix& f, double n_probes = 1.0);

}  // namespace qfb
