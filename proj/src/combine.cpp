#include "trafficfc/combine.hpp"

#include <cmath>
#include <sstream>

#include "trafficfc/errors.hpp"

namespace trafficfc {

std::vector<double> combine(const std::vector<double>& f1, const std::vector<double>& f2,
                            double alpha) {
  if (f1.size() != f2.size()) {
    std::ostringstream os;
    os << "combine: sequence lengths differ (" << f1.size() << " vs " << f2.size() << ")";
    throw data_error(os.str());
  }
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw config_error("combine: alpha must lie in [0, 1]");
  std::vector<double> out(f1.size());
  for (std::size_t i = 0; i < f1.size(); ++i)
    out[i] = alpha * f1[i] + (1.0 - alpha) * f2[i];
  return out;
}

CombinationWeight optimal_alpha(const std::vector<double>& e1, const std::vector<double>& e2) {
  if (e1.empty() || e1.size() != e2.size())
    throw data_error("optimal_alpha: error sequences must be nonempty and equal length");
  double s11 = 0.0, s22 = 0.0, s12 = 0.0;
  for (std::size_t i = 0; i < e1.size(); ++i) {
    s11 += e1[i] * e1[i];
    s22 += e2[i] * e2[i];
    s12 += e1[i] * e2[i];
  }
  CombinationWeight out;
  out.source = CombinationWeight::Source::estimated;
  // Denominator is sum((e1 - e2)^2), so it is nonnegative and vanishes only
  // when the two error sequences coincide.
  const double denom = s11 + s22 - 2.0 * s12;
  if (std::abs(denom) < 1e-12) {
    out.alpha = 0.5;
    out.degenerate = true;
    return out;
  }
  const double raw = (s22 - s12) / denom;
  out.alpha = std::min(1.0, std::max(0.0, raw));
  return out;
}

}  // namespace trafficfc
