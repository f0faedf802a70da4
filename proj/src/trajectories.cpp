#include "qfb/trajectories.hpp"

#include "qfb/util.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace qfb {

namespace {

using detail::MasterOps;

// Raw Euler-Maruyama increment. Every generator term is traceless and maps
// Hermitian matrices to Hermitian matrices, so the raw update keeps the trace
// and Hermiticity to roundoff for any step size.
ComplexMat2 em_raw(const MasterOps& ops, const ComplexMat2& rho, double dt,
                   std::span<const double> dW) {
  ComplexMat2 m = rho + dt * ops.drift(rho);
  for (int c = 0; c < ops.n; ++c) m += dW[static_cast<std::size_t>(c)] * ops.noise(c, rho);
  return m;
}

// One Euler step can leave the state space by O(|zeta|^2 dW^2) even though the
// exact flow never does: the Ito drift restores purity only on average, so a
// large Wiener increment from a near-pure state overshoots the Bloch sphere.
// The spectrum gate therefore scales with the noise power and the step; at the
// cap it admits increments out to roughly 15 sigma while still rejecting the
// order-one excursions produced by an oversized dt.
double spectrum_slack(const MasterOps& ops, double dt) {
  double noise_power = 0.0;
  for (int c = 0; c < ops.n; ++c)
    noise_power += std::norm(ops.ch[static_cast<std::size_t>(c)].zeta);
  return 1e-8 + std::min(1e-2, 400.0 * noise_power * dt);
}

// Gates the raw update (trace and Hermiticity at their roundoff bound, the
// spectrum at the noise-scaled slack), then re-Hermitizes and renormalizes.
// Eigenvalues are never clipped; a violation is reported with step and time.
DensityMatrix checked_sde_state(const MasterOps& ops, const ComplexMat2& raw,
                                double dt, std::size_t step, double t) {
  try {
    if (hermiticity_error(raw) > 1e-8)
      throw std::invalid_argument("conditioned update lost Hermiticity");
    const Complex tr = raw.trace();
    if (std::abs(tr - Complex(1.0, 0.0)) > 1e-8) {
      std::ostringstream msg;
      msg << "conditioned update trace drifted to " << std::real(tr);
      throw std::invalid_argument(msg.str());
    }
    ComplexMat2 m = 0.5 * (raw + ComplexMat2(raw.adjoint()));
    m /= std::real(m.trace());
    return DensityMatrix::from_matrix(m, spectrum_slack(ops, dt));
  } catch (const std::invalid_argument& e) {
    std::ostringstream msg;
    msg << "conditioned state invariant violated at step " << step
        << " (t = " << t << "): " << e.what();
    throw std::runtime_error(msg.str());
  }
}

void check_increment_count(const MasterOps& ops, std::span<const double> dW) {
  if (static_cast<int>(dW.size()) != ops.n) {
    std::ostringstream msg;
    msg << "expected " << ops.n << " Wiener increments, got " << dW.size();
    throw std::invalid_argument(msg.str());
  }
}

DensityMatrix single_step(const FeedbackChannel& ch, bool with_feedback,
                          const DensityMatrix& rho, double dt,
                          std::span<const double> dW) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  const MasterOps ops = MasterOps::make(ch, with_feedback);
  check_increment_count(ops, dW);
  return checked_sde_state(ops, em_raw(ops, rho.mat(), dt, dW), dt, 1, dt);
}

std::vector<double> step_times(double t_final, double dt) {
  std::vector<double> times{0.0};
  double t = 0.0;
  while (t < t_final - 1e-12 * std::max(1.0, t_final)) {
    t += std::min(dt, t_final - t);
    times.push_back(t);
  }
  return times;
}

}  // namespace

DensityMatrix sme_step(const DensityMatrix& rho, const FeedbackChannel& ch,
                       double dt, std::span<const double> dW) {
  return single_step(ch, false, rho, dt, dW);
}

DensityMatrix sme_step(const DensityMatrix& rho, const FeedbackChannel& ch,
                       double dt, double dW) {
  return sme_step(rho, ch, dt, std::span<const double>(&dW, 1));
}

DensityMatrix sme_step_feedback(const DensityMatrix& rho,
                                const FeedbackChannel& ch, double dt,
                                std::span<const double> dW) {
  return single_step(ch, true, rho, dt, dW);
}

DensityMatrix sme_step_feedback(const DensityMatrix& rho,
                                const FeedbackChannel& ch, double dt,
                                double dW) {
  return sme_step_feedback(rho, ch, dt, std::span<const double>(&dW, 1));
}

TrajectoryRecord simulate_trajectory(const FeedbackChannel& ch,
                                     const DensityMatrix& initial,
                                     double t_final, double dt,
                                     std::uint64_t seed) {
  if (!(t_final >= 0.0)) throw std::invalid_argument("t_final must be >= 0");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  const MasterOps ops = MasterOps::make(ch, true);

  TrajectoryRecord rec;
  rec.wiener_seed = seed;
  rec.times = step_times(t_final, dt);
  rec.states.reserve(rec.times.size());
  rec.states.push_back(initial);
  rec.photocurrent.assign(static_cast<std::size_t>(ops.n), {});
  for (auto& pc : rec.photocurrent) pc.reserve(rec.times.size() - 1);

  std::mt19937_64 eng(seed);
  std::normal_distribution<double> gauss;

  ComplexMat2 rho = initial.mat();
  std::array<double, 2> dW{};
  for (std::size_t k = 0; k + 1 < rec.times.size(); ++k) {
    const double h = rec.times[k + 1] - rec.times[k];
    const double root_h = std::sqrt(h);
    for (int c = 0; c < ops.n; ++c) {
      dW[static_cast<std::size_t>(c)] = root_h * gauss(eng);
      rec.photocurrent[static_cast<std::size_t>(c)].push_back(
          ops.signal(c, rho) + dW[static_cast<std::size_t>(c)] / h);
    }
    const ComplexMat2 raw = em_raw(
        ops, rho, h, std::span<const double>(dW.data(), static_cast<std::size_t>(ops.n)));
    rec.states.push_back(checked_sde_state(ops, raw, h, k + 1, rec.times[k + 1]));
    rho = rec.states.back().mat();
  }
  return rec;
}

namespace {

struct BlockAccumulator {
  std::vector<std::array<double, 3>> sum;
  std::vector<std::array<double, 3>> sumsq;
  double s_i = 0.0, s_i2 = 0.0, s_z = 0.0, s_z2 = 0.0, s_iz = 0.0;
  std::size_t n_samples = 0;

  explicit BlockAccumulator(std::size_t n_times)
      : sum(n_times, {0.0, 0.0, 0.0}), sumsq(n_times, {0.0, 0.0, 0.0}) {}

  void absorb(const BlockAccumulator& other) {
    for (std::size_t k = 0; k < sum.size(); ++k) {
      for (int c = 0; c < 3; ++c) {
        sum[k][static_cast<std::size_t>(c)] += other.sum[k][static_cast<std::size_t>(c)];
        sumsq[k][static_cast<std::size_t>(c)] += other.sumsq[k][static_cast<std::size_t>(c)];
      }
    }
    s_i += other.s_i;
    s_i2 += other.s_i2;
    s_z += other.s_z;
    s_z2 += other.s_z2;
    s_iz += other.s_iz;
    n_samples += other.n_samples;
  }
};

}  // namespace

EnsembleStats ensemble_stats(const FeedbackChannel& ch,
                             const DensityMatrix& initial, double t_final,
                             double dt, int n_traj, std::uint64_t base_seed) {
  if (n_traj < 1) throw std::invalid_argument("ensemble needs at least one trajectory");
  if (!(t_final >= 0.0)) throw std::invalid_argument("t_final must be >= 0");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  const MasterOps ops = MasterOps::make(ch, true);
  const std::vector<double> times = step_times(t_final, dt);
  const std::size_t n_times = times.size();

  // Fixed block decomposition: partial sums are accumulated per block in
  // trajectory order and reduced in block order, so the result is the same
  // for any thread count.
  const int n_blocks = std::min(n_traj, 64);
  std::vector<BlockAccumulator> blocks(static_cast<std::size_t>(n_blocks),
                                       BlockAccumulator(n_times));

  auto run_block = [&](int b) {
    const int lo = static_cast<int>(static_cast<long long>(n_traj) * b / n_blocks);
    const int hi = static_cast<int>(static_cast<long long>(n_traj) * (b + 1) / n_blocks);
    BlockAccumulator& acc = blocks[static_cast<std::size_t>(b)];
    std::array<double, 2> dW{};
    for (int i = lo; i < hi; ++i) {
      std::mt19937_64 eng(base_seed + static_cast<std::uint64_t>(i));
      std::normal_distribution<double> gauss;
      DensityMatrix state = initial;
      for (std::size_t k = 0; k < n_times; ++k) {
        const BlochVector r = state.bloch();
        acc.sum[k][0] += r.x;
        acc.sum[k][1] += r.y;
        acc.sum[k][2] += r.z;
        acc.sumsq[k][0] += r.x * r.x;
        acc.sumsq[k][1] += r.y * r.y;
        acc.sumsq[k][2] += r.z * r.z;
        if (k + 1 == n_times) break;
        const double h = times[k + 1] - times[k];
        const double root_h = std::sqrt(h);
        for (int c = 0; c < ops.n; ++c) dW[static_cast<std::size_t>(c)] = root_h * gauss(eng);
        const double current = ops.signal(0, state.mat()) + dW[0] / h;
        acc.s_i += current;
        acc.s_i2 += current * current;
        acc.s_z += r.z;
        acc.s_z2 += r.z * r.z;
        acc.s_iz += current * r.z;
        ++acc.n_samples;
        try {
          const ComplexMat2 raw = em_raw(
              ops, state.mat(), h,
              std::span<const double>(dW.data(), static_cast<std::size_t>(ops.n)));
          state = checked_sde_state(ops, raw, h, k + 1, times[k + 1]);
        } catch (const std::runtime_error& e) {
          std::ostringstream msg;
          msg << "trajectory " << i << ": " << e.what();
          throw std::runtime_error(msg.str());
        }
      }
    }
  };

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int n_threads = static_cast<int>(std::min<unsigned>(hw, static_cast<unsigned>(n_blocks)));
  if (n_threads <= 1) {
    for (int b = 0; b < n_blocks; ++b) run_block(b);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int w = 0; w < n_threads; ++w) {
      pool.emplace_back([&] {
        while (true) {
          const int b = next.fetch_add(1);
          if (b >= n_blocks) return;
          try {
            run_block(b);
          } catch (...) {
            std::scoped_lock lk(failure_mutex);
            if (!failure) failure = std::current_exception();
            return;
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  BlockAccumulator total(n_times);
  for (const auto& b : blocks) total.absorb(b);

  EnsembleStats stats;
  stats.times = times;
  stats.n_traj = n_traj;
  stats.mean.resize(n_times);
  stats.std_error.resize(n_times);
  const double n = static_cast<double>(n_traj);
  for (std::size_t k = 0; k < n_times; ++k) {
    std::array<double, 3> m{}, se{};
    for (std::size_t c = 0; c < 3; ++c) {
      m[c] = total.sum[k][c] / n;
      if (n_traj > 1) {
        const double var =
            std::max(0.0, (total.sumsq[k][c] - n * m[c] * m[c]) / (n - 1.0));
        se[c] = std::sqrt(var / n);
      }
    }
    stats.mean[k] = {m[0], m[1], m[2]};
    stats.std_error[k] = {se[0], se[1], se[2]};
  }

  if (total.n_samples > 0) {
    const double ns = static_cast<double>(total.n_samples);
    const double mean_i = total.s_i / ns;
    const double mean_z = total.s_z / ns;
    const double var_i = std::max(0.0, total.s_i2 / ns - mean_i * mean_i);
    const double var_z = std::max(0.0, total.s_z2 / ns - mean_z * mean_z);
    const double cov = total.s_iz / ns - mean_i * mean_z;
    stats.photocurrent.mean = mean_i;
    stats.photocurrent.n_samples = total.n_samples;
    if (total.n_samples > 1) {
      const double var_u = var_i * ns / (ns - 1.0);
      stats.photocurrent.std_error = std::sqrt(var_u / ns);
    }
    const double denom = std::sqrt(var_i * var_z);
    stats.photocurrent.corr_with_sz = denom > 0.0 ? cov / denom : 0.0;
  }
  return stats;
}

void write_trajectory_csv(const TrajectoryRecord& rec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "t,rx,ry,rz";
  if (rec.photocurrent.size() == 1) {
    out << ",I";
  } else {
    out << ",I_plus,I_minus";
  }
  out << "\n";
  for (std::size_t k = 0; k < rec.times.size(); ++k) {
    const BlochVector r = rec.states[k].bloch();
    out << format_double(rec.times[k]) << ',' << format_double(r.x) << ','
        << format_double(r.y) << ',' << format_double(r.z);
    for (const auto& pc : rec.photocurrent) {
      out << ',';
      out << (k < pc.size() ? format_double(pc[k]) : "nan");
    }
    out << "\n";
  }
}

}  // namespace qfb
