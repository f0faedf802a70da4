#pragma once

#include "qfb/fisher.hpp"

// Precision limits for estimating the detection efficiency eta and the
// qubit frequency omega through feedback-modified coherence decay. All
// bounds are per-probe variances (N = 1); divide by N for N probes.

namespace qfb {

enum class BoundMethod { ExactNumeric, ApproxAnalytic };

struct PrecisionReport {
  double eta = 0.0;
  double optimal_t = 0.0;
  double optimal_lambda = 0.0;
  double theta = 0.0;
  double bound_value = 0.0;
  BoundMethod method = BoundMethod::ExactNumeric;
};

struct SimultaneousReport {
  double eta = 0.0;
  double simultaneous_bound = 0.0;
  double independent_bound = 0.0;
  // optimizing (t, lambda) for the joint bound
  double sim_t = 0.0;
  double sim_lambda = 0.0;
  // optimizing (t, lambda) for each single-parameter bound
  double omega_t = 0.0;
  double omega_lambda = 0.0;
  double eta_t = 0.0;
  double eta_lambda = 0.0;
};

// QFI of eta carried by the coherence amplitude e^{-gamma t},
//   F = lambda^2 sin^2(theta) t^2 e^{-2 gamma t} / (eta (1 - e^{-2 gamma t})).
// At gamma exactly 0 returns the reduced form lambda^2 sin^2(theta) t/(2 eta).
// eta = 0 is rejected: the information diverges and the bound is 0 there.
double qfi_eta_closed(double eta, double lambda, double theta, double t);

// Quadrature angle maximizing qfi_eta_closed: sign(lambda) * pi/2.
// lambda = 0 carries no information, so no optimum exists.
double optimal_theta(double lambda);

// Interrogation time minimizing the approximate bound at lambda = 1:
// t = 1/(2 - 2 sqrt(eta)). Diverges at eta = 1.
double approx_optimal_time(double eta);

// Closed-form bound N dEta^2 >= 4 eta (1 - sqrt(eta))^2 (e^2 - 1), the
// CRB of qfi_eta_closed at lambda = 1, theta = pi/2, t = approx_optimal_time.
double approx_bound(double eta);

// Global minimum of 1/qfi_eta_closed over (t, lambda) at theta = pi/2.
// Coarse log grid plus simplex refinement; the approximate optimum seeds
// the simplex, so the result never exceeds approx_bound(eta).
PrecisionReport exact_bound(double eta);

// Joint per-probe variance bound for (omega, eta),
//   (1/t^2) [e^{2 gamma t} + eta (e^{2 gamma t} - 1)/lambda^2].
// lambda = 0 leaves eta unencoded: returns +infinity.
double simultaneous_bound(double eta, double lambda, double theta, double t);

// Minimized joint bound vs twice the sum of individually minimized
// single-parameter bounds (independent runs spend two probe sets).
SimultaneousReport simultaneous_vs_independent(double eta);

// Dephasing-channel state at fixed interrogation time as a family over
// parameters "omega" and "eta", for Fisher-information cross-checks.
ParamFamily coherence_decay_family(double lambda, double theta, double t,
                                   double omega0, double eta0);

}  // namespace qfb
