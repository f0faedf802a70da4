#include "qfb/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qfb {

namespace {

struct Vertex {
  std::vector<double> x;
  double fx;
};

std::vector<double> affine(const std::vector<double>& c,
                           const std::vector<double>& p, double t) {
  std::vector<double> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i] + t * (p[i] - c[i]);
  return out;
}

}  // namespace

MinResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                      const std::vector<double>& x0,
                      const std::vector<double>& initial_step,
                      double value_tol, int max_iter) {
  const std::size_t n = x0.size();
  if (n == 0) throw std::invalid_argument("empty starting point");
  if (initial_step.size() != n) {
    throw std::invalid_argument("initial_step length does not match x0");
  }

  constexpr double kReflect = 1.0;
  constexpr double kExpand = 2.0;
  constexpr double kContract = 0.5;
  constexpr double kShrink = 0.5;

  std::vector<Vertex> simplex;
  simplex.reserve(n + 1);
  simplex.push_back({x0, f(x0)});
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x = x0;
    x[i] += initial_step[i] != 0.0 ? initial_step[i] : 1e-3;
    simplex.push_back({x, f(x)});
  }

  auto by_value = [](const Vertex& a, const Vertex& b) { return a.fx < b.fx; };

  MinResult result;
  for (int iter = 0; iter < max_iter; ++iter) {
    std::sort(simplex.begin(), simplex.end(), by_value);
    result.iterations = iter;
    if (simplex.back().fx - simplex.front().fx < value_tol) {
      result.converged = true;
      break;
    }

    std::vector<double> centroid(n, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
      for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[v].x[i];
    }
    for (double& c : centroid) c /= static_cast<double>(n);

    Vertex& worst = simplex.back();
    const auto xr = affine(centroid, worst.x, -kReflect);
    const double fr = f(xr);

    if (fr < simplex.front().fx) {
      const auto xe = affine(centroid, worst.x, -kExpand);
      const double fe = f(xe);
      worst = fe < fr ? Vertex{xe, fe} : Vertex{xr, fr};
    } else if (fr < simplex[n - 1].fx) {
      worst = {xr, fr};
    } else {
      const bool outside = fr < worst.fx;
      const auto xc = affine(centroid, outside ? xr : worst.x, kContract);
      const double fc = f(xc);
      if (fc < (outside ? fr : worst.fx)) {
        worst = {xc, fc};
      } else {
        for (std::size_t v = 1; v <= n; ++v) {
          simplex[v].x = affine(simplex[0].x, simplex[v].x, kShrink);
          simplex[v].fx = f(simplex[v].x);
        }
      }
    }
  }

  std::sort(simplex.begin(), simplex.end(), by_value);
  result.x = simplex.front().x;
  result.value = simplex.front().fx;
  return result;
}

}  // namespace qfb
