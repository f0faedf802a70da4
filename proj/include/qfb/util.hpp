#pragma once

#include <string>
#include <vector>

namespace qfb {

// Shortest-faithful decimal with 15 significant digits, independent of the
// global locale. Intended for CSV output.
std::string format_double(double v);

// n evenly spaced points from a to b inclusive; n = 1 yields {a}.
std::vector<double> linspace(double a, double b, int n);

}  // namespace qfb
