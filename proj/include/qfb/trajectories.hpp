#pragma once

// Stochastic unravelings of the monitored master equation.
//
// Conditioned on the homodyne record, the state obeys (per channel, Ito form)
//
//   drho_c = drift(rho_c) dt + H[A] rho_c dW,   A = sqrt(eta) L e^{i theta} - i F
//
// where drift is the deterministic generator from dynamics.hpp and
// H[A]rho = A rho + rho A^dag - tr(A rho + rho A^dag) rho. The measured
// current is I = sqrt(eta) <L e^{i theta} + L^dag e^{-i theta}> + dW/dt.
// Integration is Euler-Maruyama with a fixed step; each step re-Hermitizes
// and renormalizes the trace but never floors eigenvalues, so genuine
// positivity violations surface as errors. The scheme keeps trace and
// Hermiticity to roundoff (gated at 1e-8) while single noisy steps can
// overshoot the state space by O(|zeta|^2 dW^2); the spectrum gate carries a
// matching noise-scaled slack, capped so an oversized dt still gets caught.

#include "qfb/dynamics.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace qfb {

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<DensityMatrix> states;
  // One sequence per homodyne channel, each one entry shorter than times;
  // photocurrent[c][k] pairs the state at times[k] with the k-th increment.
  std::vector<std::vector<double>> photocurrent;
  std::uint64_t wiener_seed = 0;
};

// One Euler-Maruyama step of the monitored equation without feedback (the
// channel's gain is ignored). dW needs one increment per homodyne channel.
DensityMatrix sme_step(const DensityMatrix& rho, const FeedbackChannel& ch,
                       double dt, std::span<const double> dW);
DensityMatrix sme_step(const DensityMatrix& rho, const FeedbackChannel& ch,
                       double dt, double dW);

// Same step with the feedback terms included; gain 0 reduces to sme_step.
DensityMatrix sme_step_feedback(const DensityMatrix& rho,
                                const FeedbackChannel& ch, double dt,
                                std::span<const double> dW);
DensityMatrix sme_step_feedback(const DensityMatrix& rho,
                                const FeedbackChannel& ch, double dt,
                                double dW);

// Full conditioned trajectory with feedback, driven by a Wiener stream seeded
// from `seed` alone; identical seeds reproduce the record bit for bit.
TrajectoryRecord simulate_trajectory(const FeedbackChannel& ch,
                                     const DensityMatrix& initial,
                                     double t_final, double dt,
                                     std::uint64_t seed);

// Pooled over every step of every trajectory in an ensemble.
struct PhotocurrentStats {
  double mean = 0.0;
  double std_error = 0.0;   // standard error of `mean`
  double corr_with_sz = 0.0;  // sample correlation with <sigma_z>; 0 if degenerate
  std::size_t n_samples = 0;
};

struct EnsembleStats {
  std::vector<double> times;
  std::vector<BlochVector> mean;       // ensemble mean Bloch vector per time
  std::vector<BlochVector> std_error;  // per-component standard error of the mean
  int n_traj = 0;
  PhotocurrentStats photocurrent;  // first homodyne channel
};

// Trajectory i uses seed base_seed + i. Trajectories run in parallel when
// cores allow; aggregation order is fixed, so results do not depend on the
// thread count.
EnsembleStats ensemble_stats(const FeedbackChannel& ch,
                             const DensityMatrix& initial, double t_final,
                             double dt, int n_traj, std::uint64_t base_seed);

// Columns t, rx, ry, rz and one current column per channel; the final row has
// no increment and carries nan in the current columns.
void write_trajectory_csv(const TrajectoryRecord& rec, const std::string& path);

}  // namespace qfb
