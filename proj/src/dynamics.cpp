#include "qfb/dynamics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace qfb {

namespace {
constexpr Complex kI{0.0, 1.0};
constexpr double kInvSqrt2 = 0.70710678118654752440;
}  // namespace

void FeedbackChannel::validate() const {
  if (!(eta >= 0.0 && eta <= 1.0)) {
    std::ostringstream msg;
    msg << "detector efficiency " << eta << " outside [0, 1]";
    throw std::invalid_argument(msg.str());
  }
  if (!std::isfinite(lambda) || !std::isfinite(theta) || !std::isfinite(omega)) {
    throw std::invalid_argument("channel parameters must be finite");
  }
}

double FeedbackChannel::gamma() const {
  return 1.0 + lambda * lambda - 2.0 * std::sin(theta) * lambda * std::sqrt(eta);
}

ComplexMat2 FeedbackChannel::hamiltonian() const {
  return 0.5 * omega * sigma_z();
}

std::vector<ComplexMat2> FeedbackChannel::couplings() const {
  if (kind == ChannelKind::Dissipative) {
    return {kInvSqrt2 * sigma_x(), kInvSqrt2 * sigma_y()};
  }
  return {kInvSqrt2 * sigma_z()};
}

void EvolutionSpec::validate() const {
  channel.validate();
  if (!(t_final >= 0.0)) throw std::invalid_argument("t_final must be >= 0");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  if (t_final > 0.0 && dt > t_final) {
    throw std::invalid_argument("dt must not exceed t_final");
  }
}

ComplexMat2 lindblad_dissipator(const ComplexMat2& L, const ComplexMat2& rho) {
  const ComplexMat2 Ld = L.adjoint();
  const ComplexMat2 LdL = Ld * L;
  return L * rho * Ld - 0.5 * (LdL * rho + rho * LdL);
}

namespace detail {

MasterOps MasterOps::make(const FeedbackChannel& c, bool with_feedback) {
  c.validate();
  MasterOps ops;
  ops.H = c.hamiltonian();
  ops.has_hamiltonian = c.omega != 0.0;
  ops.lambda = with_feedback ? c.lambda : 0.0;
  ops.sqrt_eta = std::sqrt(c.eta);
  const Complex phase{std::cos(c.theta), std::sin(c.theta)};
  const auto Ls = c.couplings();
  ops.n = static_cast<int>(Ls.size());
  for (int k = 0; k < ops.n; ++k) {
    auto& ch = ops.ch[k];
    ch.L = Ls[k];
    ch.Lsq = Ls[k].adjoint() * Ls[k];
    ch.phase = phase;
    ch.zeta = ops.sqrt_eta * phase - kI * ops.lambda;
    ch.signal_gain = ops.sqrt_eta;
  }
  return ops;
}

ComplexMat2 MasterOps::drift(const ComplexMat2& rho) const {
  ComplexMat2 out = ComplexMat2::Zero();
  if (has_hamiltonian) out -= kI * (H * rho - rho * H);
  const double diss_weight = 1.0 + lambda * lambda;  // D[L] + D[F], F = lambda L
  for (int k = 0; k < n; ++k) {
    const auto& c = ch[k];
    const ComplexMat2 Lr = c.L * rho;
    const ComplexMat2 rL = rho * c.L;
    out += diss_weight * (Lr * c.L - 0.5 * (c.Lsq * rho + rho * c.Lsq));
    if (lambda != 0.0) {
      const ComplexMat2 X = c.phase * Lr + std::conj(c.phase) * rL;
      out -= kI * (sqrt_eta * lambda) * (c.L * X - X * c.L);
    }
  }
  return out;
}

ComplexMat2 MasterOps::noise(int k, const ComplexMat2& rho) const {
  const auto& c = ch[k];
  const ComplexMat2 Y = c.zeta * (c.L * rho) + std::conj(c.zeta) * (rho * c.L);
  return Y - std::real(Y.trace()) * rho;
}

double MasterOps::signal(int k, const ComplexMat2& rho) const {
  const auto& c = ch[k];
  return c.signal_gain * 2.0 * std::real(c.phase * (c.L * rho).trace());
}

}  // namespace detail

ComplexMat2 feedback_generator(const FeedbackChannel& ch, const ComplexMat2& rho) {
  return detail::MasterOps::make(ch, true).drift(rho);
}

ComplexMat2 feedback_generator(const FeedbackChannel& ch, const DensityMatrix& rho) {
  return feedback_generator(ch, rho.mat());
}

DensityMatrix evolve_analytic_dephasing(const FeedbackChannel& ch, double t) {
  ch.validate();
  if (ch.kind != ChannelKind::Dephasing) {
    throw std::invalid_argument("closed form covers the dephasing kind only");
  }
  if (!(t >= 0.0)) throw std::invalid_argument("time must be >= 0");
  const Complex c = 0.5 * std::exp(Complex(-ch.gamma() * t, -ch.omega * t));
  ComplexMat2 m;
  m << 0.5, c, std::conj(c), 0.5;
  return DensityMatrix::from_matrix(m, 1e-12);
}

EvolutionSeries evolve_numeric(const EvolutionSpec& spec) {
  spec.validate();
  const auto ops = detail::MasterOps::make(spec.channel, true);

  EvolutionSeries series;
  series.times.push_back(0.0);
  series.states.push_back(spec.initial);

  auto checked_state = [](const ComplexMat2& m, std::size_t step, double t) {
    try {
      return DensityMatrix::from_matrix(m, 1e-10);
    } catch (const std::invalid_argument& e) {
      std::ostringstream msg;
      msg << "state invariant violated at step " << step << " (t = " << t
          << "): " << e.what();
      throw std::runtime_error(msg.str());
    }
  };

  ComplexMat2 rho = spec.initial.mat();
  double t = 0.0;
  std::size_t step = 0;
  while (t < spec.t_final - 1e-12 * std::max(1.0, spec.t_final)) {
    const double h = std::min(spec.dt, spec.t_final - t);
    const ComplexMat2 k1 = ops.drift(rho);
    const ComplexMat2 k2 = ops.drift(rho + (0.5 * h) * k1);
    const ComplexMat2 k3 = ops.drift(rho + (0.5 * h) * k2);
    const ComplexMat2 k4 = ops.drift(rho + h * k3);
    rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h;
    ++step;
    series.times.push_back(t);
    series.states.push_back(checked_state(rho, step, t));
  }
  return series;
}

}  // namespace qfb
