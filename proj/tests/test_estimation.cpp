#include <array>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "qfb/estimation.hpp"

using namespace qfb;

namespace {

constexpr double kHalfPi = 1.5707963267948966;

// Root of (1 - u/2) e^u = 1 with u = 2 gamma t at the optimum of the
// eta bound; verified against its defining equation below.
constexpr double kUStar = 1.5936242600400339;

double rate(double eta, double lambda, double theta) {
  return 1.0 + lambda * lambda - 2.0 * std::sin(theta) * lambda * std::sqrt(eta);
}

// Bound at the true optimum: lambda = 1, 2 gamma t = u*, giving
// 16 eta (1 - sqrt(eta))^2 (e^{u*} - 1)/u*^2.
double exact_bound_closed(double eta) {
  const double root = 1.0 - std::sqrt(eta);
  return 16.0 * eta * root * root * std::expm1(kUStar) / (kUStar * kUStar);
}

}  // namespace

TEST_CASE("closed-form efficiency QFI") {
  // gamma = 1 at this point, so F = t^2 e^{-2t} / (eta (1 - e^{-2t}))
  CHECK(qfi_eta_closed(0.25, 1.0, kHalfPi, 1.0) ==
        doctest::Approx(0.6260705709986627).epsilon(1e-12));

  // no feedback or quadrature-orthogonal monitoring carries no information
  CHECK(qfi_eta_closed(0.5, 0.0, kHalfPi, 1.0) == 0.0);
  CHECK(qfi_eta_closed(0.5, 1.0, 0.0, 1.0) == 0.0);

  // the decay-free point reduces to lambda^2 sin^2(theta) t / (2 eta)
  CHECK(rate(1.0, 1.0, kHalfPi) == 0.0);
  CHECK(qfi_eta_closed(1.0, 1.0, kHalfPi, 1.0) == 0.5);
  CHECK(qfi_eta_closed(1.0, 1.0, kHalfPi, 3.0) == 1.5);

  CHECK_THROWS_AS(qfi_eta_closed(0.0, 1.0, kHalfPi, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(qfi_eta_closed(1.1, 1.0, kHalfPi, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(qfi_eta_closed(0.5, 1.0, kHalfPi, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(qfi_eta_closed(0.5, 1.0, kHalfPi, -1.0),
                  std::invalid_argument);
}

TEST_CASE("closed-form QFI matches the state-family estimators") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double eta = 0.05 + 0.9 * u(rng);
    const double lambda = 0.4 + 1.2 * u(rng);
    const double t = 0.3 + 1.2 * u(rng);
    const double omega = 2.0 * u(rng);

    const ParamFamily f = coherence_decay_family(lambda, kHalfPi, t, omega, eta);
    const double closed = qfi_eta_closed(eta, lambda, kHalfPi, t);
    CHECK(qfi_2d(f, "eta") == doctest::Approx(closed).epsilon(1e-6));
    CHECK(crb(qfi_2d(f, "eta")) ==
          doctest::Approx(1.0 / closed).epsilon(1e-6));
  }
}

TEST_CASE("efficiency QFI does not depend on the qubit frequency") {
  const std::array<double, 3> omegas{0.0, 1.0, 10.0};
  std::array<double, 3> qfi{};
  for (std::size_t k = 0; k < omegas.size(); ++k) {
    const ParamFamily f =
        coherence_decay_family(1.0, kHalfPi, 1.0, omegas[k], 0.25);
    qfi[k] = qfi_2d(f, "eta");
  }
  CHECK(qfi[1] == doctest::Approx(qfi[0]).epsilon(1e-8));
  CHECK(qfi[2] == doctest::Approx(qfi[0]).epsilon(1e-8));
}

TEST_CASE("quadrature angle optimality on the measurement grid") {
  CHECK(optimal_theta(0.7) == kHalfPi);
  CHECK(optimal_theta(-2.0) == -kHalfPi);
  CHECK_THROWS_AS(optimal_theta(0.0), std::invalid_argument);

  // over theta_k = k pi / 100 the QFI peaks and the joint bound dips at
  // k = 50, i.e. theta = pi/2
  const double eta = 0.5, lambda = 0.7, t = 1.0;
  int argmax = -1, argmin = -1;
  double best_qfi = -1.0, best_sim = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 100; ++k) {
    const double theta = k * M_PI / 100.0;
    const double q = qfi_eta_closed(eta, lambda, theta, t);
    const double s = simultaneous_bound(eta, lambda, theta, t);
    if (q > best_qfi) {
      best_qfi = q;
      argmax = k;
    }
    if (s < best_sim) {
      best_sim = s;
      argmin = k;
    }
  }
  CHECK(argmax == 50);
  CHECK(argmin == 50);
}

TEST_CASE("approximate interrogation time and bound") {
  CHECK(approx_optimal_time(0.0) == 0.5);
  CHECK(approx_optimal_time(0.25) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(approx_optimal_time(0.81) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK_THROWS_AS(approx_optimal_time(1.0), std::invalid_argument);

  CHECK(approx_bound(0.25) ==
        doctest::Approx(1.5972640247326624).epsilon(1e-12));
  CHECK(approx_bound(0.0) == 0.0);
  CHECK(approx_bound(1.0) == 0.0);
  CHECK_THROWS_AS(approx_bound(-0.1), std::invalid_argument);
  CHECK_THROWS_AS(approx_bound(1.1), std::invalid_argument);

  // the approximate bound is exactly the CRB evaluated at lambda = 1,
  // theta = pi/2, t = approx_optimal_time
  for (double eta : {0.1, 0.25, 0.5, 0.8, 0.95}) {
    const double t = approx_optimal_time(eta);
    CHECK(approx_bound(eta) ==
          doctest::Approx(1.0 / qfi_eta_closed(eta, 1.0, kHalfPi, t))
              .epsilon(1e-10));
  }
}

TEST_CASE("numerically minimized efficiency bound") {
  // oracle root: u* satisfies (1 - u/2) e^u = 1
  CHECK(std::abs((1.0 - 0.5 * kUStar) * std::exp(kUStar) - 1.0) < 1e-13);

  const PrecisionReport r = exact_bound(0.25);
  CHECK(r.eta == 0.25);
  CHECK(r.theta == kHalfPi);
  CHECK(r.method == BoundMethod::ExactNumeric);
  CHECK(r.bound_value == doctest::Approx(1.5441386523708702).epsilon(1e-9));

  // the optimizer lands on the closed-form optimum: lambda = 1 and
  // 2 gamma t = u* with gamma = 2 - 2 sqrt(eta)
  CHECK(r.optimal_lambda == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(r.optimal_t ==
        doctest::Approx(kUStar / (2.0 * (2.0 - 2.0 * std::sqrt(0.25))))
            .epsilon(1e-3));

  for (double eta : {0.1, 0.25, 0.5, 0.8, 0.95}) {
    const PrecisionReport rep = exact_bound(eta);
    CHECK(rep.bound_value ==
          doctest::Approx(exact_bound_closed(eta)).epsilon(1e-8));
    // sandwich against the analytic approximation, tight to 3.5 percent
    CHECK(rep.bound_value <= approx_bound(eta));
    CHECK(approx_bound(eta) / rep.bound_value ==
          doctest::Approx(1.0344045350333169).epsilon(1e-6));
  }

  CHECK_THROWS_AS(exact_bound(0.0), std::invalid_argument);
  CHECK_THROWS_AS(exact_bound(1.0), std::invalid_argument);
}

TEST_CASE("dense grid never undercuts the minimized bound") {
  const double bound = exact_bound(0.25).bound_value;
  double grid_min = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= 400; ++i) {
    const double t = 20.0 * i / 400.0;
    for (int j = 0; j <= 400; ++j) {
      const double lambda = 0.5 + j / 400.0;
      grid_min =
          std::min(grid_min, 1.0 / qfi_eta_closed(0.25, lambda, kHalfPi, t));
    }
  }
  CHECK(grid_min >= bound - 1e-12);
  CHECK(grid_min <= bound + 2e-3);
}

TEST_CASE("joint bound for simultaneous estimation") {
  CHECK(simultaneous_bound(0.5, 1.0, kHalfPi, 1.0) ==
        doctest::Approx(4.340596627916028).epsilon(1e-12));

  // unencoded eta at lambda = 0
  CHECK(std::isinf(simultaneous_bound(0.5, 0.0, kHalfPi, 1.0)));

  // frozen decay: the bound collapses to the frequency part 1/t^2 exactly
  CHECK(rate(1.0, 1.0, kHalfPi) == 0.0);
  CHECK(simultaneous_bound(1.0, 1.0, kHalfPi, 2.0) == 0.25);

  CHECK_THROWS_AS(simultaneous_bound(0.0, 1.0, kHalfPi, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(simultaneous_bound(0.5, 1.0, kHalfPi, 0.0),
                  std::invalid_argument);

  // the joint bound is the trace of the inverse QFI matrix at theta = pi/2
  for (const auto& [eta, lambda, t] :
       std::vector<std::array<double, 3>>{{0.25, 1.0, 1.0},
                                          {0.5, 0.8, 1.5},
                                          {0.7, 1.3, 0.6}}) {
    const ParamFamily f = coherence_decay_family(lambda, kHalfPi, t, 0.3, eta);
    const QfiMatrix m = qfi_matrix_bloch(f, {"omega", "eta"});
    CHECK(std::abs(m.values(0, 1)) < 1e-8);  // parameters decouple
    const Eigen::MatrixXd c = crb(m);
    CHECK(c(0, 0) + c(1, 1) ==
          doctest::Approx(simultaneous_bound(eta, lambda, kHalfPi, t))
              .epsilon(1e-6));
  }
}

TEST_CASE("simultaneous versus independent estimation") {
  // minimized bounds over (t, lambda) on a five-point efficiency grid
  const std::array<double, 5> etas{0.1, 0.3, 0.5, 0.7, 0.9};
  const std::array<double, 5> sim_oracle{8.629869174014, 5.885079545737,
                                         3.177964831052, 1.186880818405,
                                         0.135462600144};
  const std::array<double, 5> ind_oracle{14.280522031272, 10.273541579613,
                                         5.813986516488, 2.252854933343,
                                         0.264891735513};

  std::array<double, 5> sim{}, ind{};
  for (std::size_t k = 0; k < etas.size(); ++k) {
    const SimultaneousReport r = simultaneous_vs_independent(etas[k]);
    sim[k] = r.simultaneous_bound;
    ind[k] = r.independent_bound;
    CHECK(r.simultaneous_bound ==
          doctest::Approx(sim_oracle[k]).epsilon(1e-6));
    CHECK(r.independent_bound ==
          doctest::Approx(ind_oracle[k]).epsilon(1e-6));
    CHECK(r.simultaneous_bound <= r.independent_bound);

    // independent runs split as 2 [e^2 (1-eta)^2 + minimized eta bound]
    const double omega_part = std::exp(2.0) * (1.0 - etas[k]) * (1.0 - etas[k]);
    CHECK(r.independent_bound ==
          doctest::Approx(2.0 * (omega_part + exact_bound_closed(etas[k])))
              .epsilon(1e-6));
    CHECK(r.omega_lambda == doctest::Approx(std::sqrt(etas[k])).epsilon(1e-3));
    CHECK(r.omega_t == doctest::Approx(1.0 / (1.0 - etas[k])).epsilon(1e-3));
    CHECK(r.eta_lambda == doctest::Approx(1.0).epsilon(1e-3));
  }

  // both bounds tighten monotonically with the efficiency
  for (std::size_t k = 1; k < etas.size(); ++k) {
    CHECK(sim[k] < sim[k - 1]);
    CHECK(ind[k] < ind[k - 1]);
  }

  // optimizing location for the joint bound at eta = 0.5
  const SimultaneousReport mid = simultaneous_vs_independent(0.5);
  CHECK(mid.sim_t == doctest::Approx(1.818082).epsilon(1e-3));
  CHECK(mid.sim_lambda == doctest::Approx(0.826156).epsilon(1e-3));

  CHECK_THROWS_AS(simultaneous_vs_independent(0.0), std::invalid_argument);
  CHECK_THROWS_AS(simultaneous_vs_independent(1.0), std::invalid_argument);
}

TEST_CASE("coherence decay family") {
  const ParamFamily f = coherence_decay_family(1.0, kHalfPi, 1.0, 0.7, 0.25);
  const DensityMatrix rho = f.at();
  CHECK(std::real(rho.mat().trace()) == doctest::Approx(1.0).epsilon(1e-14));

  // the frequency rotates the coherence without shrinking it
  const ParamFamily still = coherence_decay_family(1.0, kHalfPi, 1.0, 0.0, 0.25);
  CHECK(std::abs(rho.mat()(0, 1)) ==
        doctest::Approx(std::abs(still.at().mat()(0, 1))).epsilon(1e-12));
  CHECK(std::abs(rho.mat()(0, 1)) ==
        doctest::Approx(0.5 * std::exp(-1.0)).epsilon(1e-12));

  CHECK_THROWS_AS(f.drho("missing"), std::invalid_argument);
  CHECK_THROWS_AS(coherence_decay_family(1.0, kHalfPi, 0.0, 0.0, 0.25),
                  std::invalid_argument);
}
