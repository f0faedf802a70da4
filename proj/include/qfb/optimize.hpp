#pragma once

#include <functional>
#include <vector>

namespace qfb {

struct MinResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Derivative-free simplex descent. The simplex starts at x0 with one extra
// vertex per coordinate offset by initial_step[i]; convergence is declared
// when the value spread across the simplex drops below value_tol. The best
// vertex ever seen is returned, so the result never exceeds f(x0).
MinResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                      const std::vector<double>& x0,
                      const std::vector<double>& initial_step,
                      double value_tol = 1e-10, int max_iter = 2000);

}  // namespace qfb
