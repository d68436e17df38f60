#pragma once

// Convex combination of two forecast sequences and estimation of the
// SSE-optimal combination weight from paired error histories.

#include <vector>

namespace trafficfc {

inline constexpr double kDefaultCombinationAlpha = 0.95;

struct CombinationWeight {
  enum class Source { fixed, estimated };
  double alpha = kDefaultCombinationAlpha;
  Source source = Source::fixed;
  // Set when the error sequences were indistinguishable and alpha fell back
  // to 0.5 instead of the (undefined) SSE minimizer.
  bool degenerate = false;
};

// Elementwise alpha*f1 + (1-alpha)*f2. Lengths must match; alpha must lie
// in [0, 1].
std::vector<double> combine(const std::vector<double>& f1, const std::vector<double>& f2,
                            double alpha);

// Minimizes sum((alpha*e1 + (1-alpha)*e2)^2) over alpha, clipped to [0, 1].
// The errors are e_it = Z_t - forecast_it on a common index set. A
// denominator below 1e-12 (e1 and e2 effectively identical) returns the
// degenerate weight 0.5.
CombinationWeight optimal_alpha(const std::vector<double>& e1, const std::vector<double>& e2);

}  // namespace trafficfc
