#include "qfb/fisher.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace qfb {

namespace {

constexpr double kZeroProb = 1e-14;

// Eigenvectors come out of the solver with an arbitrary global phase, so each
// shifted eigenvector is gauged against its reference branch: <ref|v> is made
// real and positive. Any absolute component convention breaks on equal-weight
// superpositions, where the tie between component magnitudes flips under the
// finite-difference shift.
Vec2 gauge_aligned(const Vec2& ref, Vec2 v) {
  const Complex ov = ref.adjoint() * v;
  const double mag = std::abs(ov);
  if (mag > 1e-12) v *= std::conj(ov) / mag;
  return v;
}

}  // namespace

double ParamFamily::step(const std::string& name) const {
  if (auto it = fd_steps.find(name); it != fd_steps.end()) return it->second;
  const auto it = point.find(name);
  if (it == point.end()) {
    throw std::invalid_argument("unknown parameter: " + name);
  }
  return 1e-5 * std::max(1.0, std::abs(it->second));
}

DensityMatrix ParamFamily::at() const { return rho(point); }

DensityMatrix ParamFamily::at_shifted(const std::string& name,
                                      double delta) const {
  ParamPoint shifted = point;
  const auto it = shifted.find(name);
  if (it == shifted.end()) {
    throw std::invalid_argument("unknown parameter: " + name);
  }
  it->second += delta;
  return rho(shifted);
}

ComplexMat2 ParamFamily::drho(const std::string& name) const {
  const double h = step(name);
  return (at_shifted(name, h).mat() - at_shifted(name, -h).mat()) / (2.0 * h);
}

double classical_fi(std::span<const double> p, std::span<const double> dp) {
  if (p.size() != dp.size()) {
    throw std::invalid_argument("probability and derivative lengths differ");
  }
  double total = 0.0;
  double fi = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] < -1e-12) {
      std::ostringstream msg;
      msg << "negative probability p[" << k << "] = " << p[k];
      throw std::invalid_argument(msg.str());
    }
    total += p[k];
    if (p[k] < kZeroProb) {
      if (std::abs(dp[k]) < kZeroProb) continue;
      return std::numeric_limits<double>::infinity();
    }
    fi += dp[k] * dp[k] / p[k];
  }
  if (std::abs(total - 1.0) > 1e-10) {
    std::ostringstream msg;
    msg << "probabilities sum to " << total;
    throw std::invalid_argument(msg.str());
  }
  return fi;
}

double classical_fi_povm(const ParamFamily& f, const std::string& param,
                         const Povm& povm) {
  povm.validate();
  const double h = f.step(param);
  const auto p = povm.probabilities(f.at());
  const auto p_plus = povm.probabilities(f.at_shifted(param, h));
  const auto p_minus = povm.probabilities(f.at_shifted(param, -h));
  std::vector<double> dp(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    dp[k] = (p_plus[k] - p_minus[k]) / (2.0 * h);
  }
  return classical_fi(p, dp);
}

double qfi_pure(const ParamFamily& f, const std::string& param) {
  const DensityMatrix rho0 = f.at();
  if (rho0.purity() <= 1.0 - 1e-10) {
    std::ostringstream msg;
    msg << "state purity " << rho0.purity() << " is not pure";
    throw std::invalid_argument(msg.str());
  }
  const double h = f.step(param);
  const Vec2 psi0 = eig_hermitian(rho0.mat()).vectors[0];
  const Vec2 psi_p =
      gauge_aligned(psi0, eig_hermitian(f.at_shifted(param, h).mat()).vectors[0]);
  const Vec2 psi_m =
      gauge_aligned(psi0, eig_hermitian(f.at_shifted(param, -h).mat()).vectors[0]);
  const Vec2 dpsi = (psi_p - psi_m) / (2.0 * h);
  const double grad2 = dpsi.squaredNorm();
  const Complex overlap = psi0.adjoint() * dpsi;
  return 4.0 * (grad2 - std::norm(overlap));
}

double qfi_mixed_eigen(const ParamFamily& f, const std::string& param) {
  const DensityMatrix rho0 = f.at();
  if (rho0.purity() > 1.0 - 1e-10) return qfi_pure(f, param);

  const double h = f.step(param);
  const EigSystem e0 = eig_hermitian(rho0.mat());
  const EigSystem ep = eig_hermitian(f.at_shifted(param, h).mat());
  const EigSystem em = eig_hermitian(f.at_shifted(param, -h).mat());

  std::array<double, 2> dlam;
  std::array<Vec2, 2> dvec;
  for (std::size_t k = 0; k < 2; ++k) {
    dlam[k] = (ep.values[k] - em.values[k]) / (2.0 * h);
    dvec[k] = (gauge_aligned(e0.vectors[k], ep.vectors[k]) -
               gauge_aligned(e0.vectors[k], em.vectors[k])) /
              (2.0 * h);
  }

  double fi = 0.0;
  for (std::size_t k = 0; k < 2; ++k) {
    if (e0.values[k] > 1e-12) fi += dlam[k] * dlam[k] / e0.values[k];
  }
  for (std::size_t k = 0; k < 2; ++k) {
    for (std::size_t j = 0; j < 2; ++j) {
      if (j == k) continue;
      const double sum = e0.values[k] + e0.values[j];
      if (sum <= 1e-12) continue;
      const double gap = e0.values[k] - e0.values[j];
      const Complex ov = e0.vectors[k].adjoint() * dvec[j];
      fi += 2.0 * gap * gap / sum * std::norm(ov);
    }
  }
  return fi;
}

double qfi_2d(const ParamFamily& f, const std::string& param) {
  const ComplexMat2 rho = f.at().mat();
  const double det = std::real(rho(0, 0) * rho(1, 1) - rho(0, 1) * rho(1, 0));
  if (det <= 1e-12) {
    std::ostringstream msg;
    msg << "determinant " << det << " too small for the determinant form";
    throw std::invalid_argument(msg.str());
  }
  const ComplexMat2 d = f.drho(param);
  const double term1 = std::real((d * d).trace());
  const ComplexMat2 rd = rho * d;
  const double term2 = std::real((rd * rd).trace());
  return term1 + term2 / det;
}

ComplexMat2 sld(const ParamFamily& f, const std::string& param) {
  const EigSystem e0 = eig_hermitian(f.at().mat());
  const ComplexMat2 d = f.drho(param);
  ComplexMat2 L = ComplexMat2::Zero();
  for (std::size_t m = 0; m < 2; ++m) {
    for (std::size_t n = 0; n < 2; ++n) {
      const double sum = e0.values[m] + e0.values[n];
      if (sum <= 1e-12) continue;  // zero sector carries no information
      const Complex elem = e0.vectors[m].adjoint() * (d * e0.vectors[n]);
      L += (2.0 * elem / sum) * (e0.vectors[m] * e0.vectors[n].adjoint());
    }
  }
  return 0.5 * (L + ComplexMat2(L.adjoint()));
}

void QfiMatrix::validate(double tol) const {
  const auto n = static_cast<Eigen::Index>(params.size());
  if (values.rows() != n || values.cols() != n) {
    throw std::invalid_argument("QFI matrix shape does not match parameter list");
  }
  const double asym = (values - values.transpose()).cwiseAbs().maxCoeff();
  if (asym > tol) {
    std::ostringstream msg;
    msg << "QFI matrix asymmetry " << asym;
    throw std::invalid_argument(msg.str());
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(values);
  if (solver.eigenvalues().minCoeff() < -tol) {
    std::ostringstream msg;
    msg << "QFI matrix has negative eigenvalue " << solver.eigenvalues().minCoeff();
    throw std::invalid_argument(msg.str());
  }
}

QfiMatrix qfi_matrix_bloch(const ParamFamily& f,
                           const std::vector<std::string>& params) {
  const BlochVector r = f.at().bloch();
  const double r2 = r.x * r.x + r.y * r.y + r.z * r.z;
  if (r2 >= (1.0 - 1e-8) * (1.0 - 1e-8)) {
    std::ostringstream msg;
    msg << "Bloch norm " << std::sqrt(r2) << " too close to the pure boundary";
    throw std::invalid_argument(msg.str());
  }

  std::vector<std::array<double, 3>> dr;
  dr.reserve(params.size());
  for (const auto& name : params) {
    const double h = f.step(name);
    const BlochVector rp = f.at_shifted(name, h).bloch();
    const BlochVector rm = f.at_shifted(name, -h).bloch();
    dr.push_back({(rp.x - rm.x) / (2.0 * h), (rp.y - rm.y) / (2.0 * h),
                  (rp.z - rm.z) / (2.0 * h)});
  }

  auto dot3 = [](const std::array<double, 3>& a, const std::array<double, 3>& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
  };
  const std::array<double, 3> rv{r.x, r.y, r.z};

  QfiMatrix out;
  out.params = params;
  const auto n = static_cast<Eigen::Index>(params.size());
  out.values.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const auto& di = dr[static_cast<std::size_t>(i)];
      const auto& dj = dr[static_cast<std::size_t>(j)];
      const double v = dot3(di, dj) + dot3(rv, di) * dot3(rv, dj) / (1.0 - r2);
      out.values(i, j) = v;
      out.values(j, i) = v;
    }
  }
  return out;
}

double crb(double fisher_information, double n_probes) {
  if (!(n_probes > 0.0)) throw std::invalid_argument("probe count must be > 0");
  if (fisher_information < 0.0) {
    throw std::invalid_argument("Fisher information must be >= 0");
  }
  if (fisher_information == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / (n_probes * fisher_information);
}

Eigen::MatrixXd crb(const QfiMatrix& f, double n_probes) {
  if (!(n_probes > 0.0)) throw std::invalid_argument("probe count must be > 0");
  f.validate();
  const Eigen::Index n = f.values.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(f.values);
  const double scale = std::max(1.0, solver.eigenvalues().cwiseAbs().maxCoeff());
  if (solver.eigenvalues().minCoeff() > 1e-12 * scale) {
    return Eigen::MatrixXd(f.values.inverse() / n_probes);
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double fii = f.values(i, i);
    out(i, i) = fii > 1e-12 ? 1.0 / (n_probes * fii)
                            : std::numeric_limits<double>::infinity();
  }
  return out;
}

}  // namespace qfb
