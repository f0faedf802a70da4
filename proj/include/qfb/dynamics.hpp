#pragma once

// Deterministic dynamics of a homodyne-monitored qubit with proportional
// Markovian feedback.
//
// Channel model: coupling L (Hermitian per homodyne channel), detector
// efficiency eta, feedback operator F = lambda L driven by the measured
// current, local oscillator angle theta, qubit Hamiltonian H = omega sigma_z/2.
// Averaging the conditioned dynamics over noise leaves the master equation
//
//   drho/dt = -i[H, rho] + D[L]rho - i sqrt(eta) [F, L e^{i theta} rho
//             + rho L e^{-i theta}] + D[F]rho          (per channel)
//
// which for these couplings collapses to dephasing of the coherence at the
// effective rate gamma = 1 + lambda^2 - 2 sin(theta) lambda sqrt(eta).

#include "qfb/qubit.hpp"

#include <array>
#include <vector>

namespace qfb {

enum class ChannelKind { Dephasing, Dissipative };

struct FeedbackChannel {
  ChannelKind kind = ChannelKind::Dephasing;
  double eta = 1.0;     // detector efficiency, in [0, 1]
  double lambda = 0.0;  // feedback gain, F = lambda L
  double theta = 0.0;   // homodyne angle
  double omega = 0.0;   // qubit frequency

  void validate() const;

  // Effective coherence decay rate. Equals (lambda - sin(theta) sqrt(eta))^2
  // + 1 - eta sin^2(theta), so it is nonnegative for eta <= 1 and vanishes
  // only at eta = 1, lambda = sin(theta) = +-1.
  double gamma() const;

  ComplexMat2 hamiltonian() const;  // omega sigma_z / 2

  // Hermitian couplings, one per homodyne channel. Dephasing: sigma_z/sqrt(2).
  // Dissipative: the quadrature pair sigma_x/sqrt(2), sigma_y/sqrt(2), the
  // unitary remix of a unit-rate lowering/raising reservoir pair; this
  // normalization makes both kinds damp the coherence at the same rate.
  std::vector<ComplexMat2> couplings() const;

  int n_channels() const { return kind == ChannelKind::Dissipative ? 2 : 1; }
};

struct EvolutionSpec {
  FeedbackChannel channel;
  DensityMatrix initial = DensityMatrix::plus_state();
  double t_final = 1.0;
  double dt = 1e-4;

  void validate() const;
};

// D[L]rho = L rho L^dag - (L^dag L rho + rho L^dag L)/2 for arbitrary L.
ComplexMat2 lindblad_dissipator(const ComplexMat2& L, const ComplexMat2& rho);

// Full master-equation right-hand side for the channel (all homodyne channels
// plus the Hamiltonian). Defined for any Hermitian rho, not just states.
ComplexMat2 feedback_generator(const FeedbackChannel& ch, const ComplexMat2& rho);
ComplexMat2 feedback_generator(const FeedbackChannel& ch, const DensityMatrix& rho);

// Closed-form solution from |+><+| for the dephasing kind:
// diagonal 1/2, off-diagonal (1/2) e^{-i omega t - gamma t}.
DensityMatrix evolve_analytic_dephasing(const FeedbackChannel& ch, double t);

struct EvolutionSeries {
  std::vector<double> times;
  std::vector<DensityMatrix> states;
};

// Fixed-step RK4 integration of the master equation, one state per step.
// State invariants are checked each step; a violation aborts with the step
// index and time in the message.
EvolutionSeries evolve_numeric(const EvolutionSpec& spec);

namespace detail {

// Operator set precomputed once per run, shared by the deterministic and
// stochastic integrators. with_feedback=false drops the F terms (gain 0).
struct MasterOps {
  ComplexMat2 H;
  bool has_hamiltonian = false;
  int n = 1;
  struct Channel {
    ComplexMat2 L;
    ComplexMat2 Lsq;     // L^dag L
    Complex phase;       // e^{i theta}
    Complex zeta;        // sqrt(eta) e^{i theta} - i lambda; noise op is zeta L
    double signal_gain;  // sqrt(eta)
  };
  std::array<Channel, 2> ch;
  double lambda = 0.0;
  double sqrt_eta = 0.0;

  static MasterOps make(const FeedbackChannel& c, bool with_feedback);

  ComplexMat2 drift(const ComplexMat2& rho) const;
  // Measurement superoperator applied to rho for channel c:
  // H[A]rho = A rho + rho A^dag - tr(A rho + rho A^dag) rho, A = zeta L.
  ComplexMat2 noise(int c, const ComplexMat2& rho) const;
  // Deterministic part of the homodyne current:
  // sqrt(eta) <L e^{i theta} + L^dag e^{-i theta}>.
  double signal(int c, const ComplexMat2& rho) const;
};

}  // namespace detail
}  // namespace qfb
