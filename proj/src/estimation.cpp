#include "qfb/estimation.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "qfb/dynamics.hpp"
#include "qfb/optimize.hpp"
#include "qfb/util.hpp"

namespace qfb {

namespace {

constexpr double kHalfPi = 1.5707963267948966;

double decay_rate(double eta, double lambda, double theta) {
  return 1.0 + lambda * lambda - 2.0 * std::sin(theta) * lambda * std::sqrt(eta);
}

void require_unit_interval(double eta, bool allow_zero, bool allow_one,
                           const char* who) {
  const bool low_ok = allow_zero ? eta >= 0.0 : eta > 0.0;
  const bool high_ok = allow_one ? eta <= 1.0 : eta < 1.0;
  if (!std::isfinite(eta) || !low_ok || !high_ok) {
    std::ostringstream msg;
    msg << who << ": eta = " << eta << " outside " << (allow_zero ? "[" : "(")
        << "0, 1" << (allow_one ? "]" : ")");
    throw std::invalid_argument(msg.str());
  }
}

struct Min2d {
  double t;
  double lambda;
  double value;
};

// Minimizes f(t, lambda) over a log-spaced grid, then refines with a
// simplex in log coordinates seeded at the better of the grid minimum
// and the supplied starting point. Positivity of (t, lambda) is free.
Min2d minimize_t_lambda(const std::function<double(double, double)>& f,
                        double t_max, double seed_t, double seed_lambda) {
  const auto log_t = linspace(std::log(1e-3), std::log(t_max), 48);
  const auto log_l = linspace(std::log(0.25), std::log(4.0), 32);

  std::vector<double> best{std::log(seed_t), std::log(seed_lambda)};
  double best_val = f(seed_t, seed_lambda);
  for (double lt : log_t) {
    for (double ll : log_l) {
      const double v = f(std::exp(lt), std::exp(ll));
      if (v < best_val) {
        best_val = v;
        best = {lt, ll};
      }
    }
  }

  const auto obj = [&f](const std::vector<double>& x) {
    return f(std::exp(x[0]), std::exp(x[1]));
  };
  const MinResult res = nelder_mead(obj, best, {0.1, 0.1}, 1e-10, 4000);
  if (!res.converged) {
    std::ostringstream msg;
    msg << "optimizer did not converge; best value " << res.value << " at t = "
        << std::exp(res.x[0]) << ", lambda = " << std::exp(res.x[1]);
    throw std::runtime_error(msg.str());
  }
  return {std::exp(res.x[0]), std::exp(res.x[1]), res.value};
}

}  // namespace

double qfi_eta_closed(double eta, double lambda, double theta, double t) {
  require_unit_interval(eta, false, true, "qfi_eta_closed");
  if (eta == 0.0) {
    throw std::invalid_argument(
        "qfi_eta_closed: QFI diverges at eta = 0 (the bound on eta is 0 there)");
  }
  if (!(t > 0.0)) {
    std::ostringstream msg;
    msg << "qfi_eta_closed: t = " << t << " must be > 0";
    throw std::invalid_argument(msg.str());
  }
  const double s = std::sin(theta);
  const double num = lambda * lambda * s * s;
  if (num == 0.0) return 0.0;
  const double gamma = decay_rate(eta, lambda, theta);
  if (gamma == 0.0) return num * t / (2.0 * eta);
  const double e2gt = std::exp(-2.0 * gamma * t);
  return num * t * t * e2gt / (eta * -std::expm1(-2.0 * gamma * t));
}

double optimal_theta(double lambda) {
  if (lambda == 0.0) {
    throw std::invalid_argument(
        "optimal_theta: QFI vanishes identically at lambda = 0");
  }
  return std::copysign(kHalfPi, lambda);
}

double approx_optimal_time(double eta) {
  require_unit_interval(eta, true, false, "approx_optimal_time");
  return 1.0 / (2.0 - 2.0 * std::sqrt(eta));
}

double approx_bound(double eta) {
  require_unit_interval(eta, true, true, "approx_bound");
  const double root = 1.0 - std::sqrt(eta);
  return 4.0 * eta * root * root * std::expm1(2.0);
}

PrecisionReport exact_bound(double eta) {
  require_unit_interval(eta, false, false, "exact_bound");
  const auto objective = [eta](double t, double lambda) {
    return 1.0 / qfi_eta_closed(eta, lambda, kHalfPi, t);
  };
  const double t_max = 10.0 / (1.0 - std::sqrt(eta));
  const Min2d m =
      minimize_t_lambda(objective, t_max, approx_optimal_time(eta), 1.0);
  return {eta, m.t, m.lambda, kHalfPi, m.value, BoundMethod::ExactNumeric};
}

double simultaneous_bound(double eta, double lambda, double theta, double t) {
  require_unit_interval(eta, false, true, "simultaneous_bound");
  if (!(t > 0.0)) {
    std::ostringstream msg;
    msg << "simultaneous_bound: t = " << t << " must be > 0";
    throw std::invalid_argument(msg.str());
  }
  if (lambda == 0.0) return std::numeric_limits<double>::infinity();
  const double gamma = decay_rate(eta, lambda, theta);
  const double e2gt = std::exp(2.0 * gamma * t);
  const double growth = std::expm1(2.0 * gamma * t);
  return (e2gt + eta * growth / (lambda * lambda)) / (t * t);
}

SimultaneousReport simultaneous_vs_independent(double eta) {
  require_unit_interval(eta, false, false, "simultaneous_vs_independent");

  const auto joint = [eta](double t, double lambda) {
    return simultaneous_bound(eta, lambda, kHalfPi, t);
  };
  const auto omega_only = [eta](double t, double lambda) {
    const double gamma = decay_rate(eta, lambda, kHalfPi);
    return std::exp(2.0 * gamma * t) / (t * t);
  };

  const double t_max = 10.0 / (1.0 - std::sqrt(eta));
  const Min2d sim = minimize_t_lambda(joint, t_max, approx_optimal_time(eta), 1.0);
  // stationary point of e^{2 gamma t}/t^2: lambda = sqrt(eta), t = 1/(1 - eta)
  const Min2d omega =
      minimize_t_lambda(omega_only, t_max, 1.0 / (1.0 - eta), std::sqrt(eta));
  const PrecisionReport eta_best = exact_bound(eta);

  SimultaneousReport rep;
  rep.eta = eta;
  rep.simultaneous_bound = sim.value;
  rep.independent_bound = 2.0 * (omega.value + eta_best.bound_value);
  rep.sim_t = sim.t;
  rep.sim_lambda = sim.lambda;
  rep.omega_t = omega.t;
  rep.omega_lambda = omega.lambda;
  rep.eta_t = eta_best.optimal_t;
  rep.eta_lambda = eta_best.optimal_lambda;
  return rep;
}

ParamFamily coherence_decay_family(double lambda, double theta, double t,
                                   double omega0, double eta0) {
  if (!(t > 0.0)) {
    std::ostringstream msg;
    msg << "coherence_decay_family: t = " << t << " must be > 0";
    throw std::invalid_argument(msg.str());
  }
  ParamFamily family;
  family.rho = [lambda, theta, t](const ParamPoint& p) {
    FeedbackChannel ch;
    ch.kind = ChannelKind::Dephasing;
    ch.eta = p.at("eta");
    ch.lambda = lambda;
    ch.theta = theta;
    ch.omega = p.at("omega");
    ch.validate();
    return evolve_analytic_dephasing(ch, t);
  };
  family.point = {{"omega", omega0}, {"eta", eta0}};
  return family;
}

}  // namespace qfb
