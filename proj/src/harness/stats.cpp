#include "cqss/stats.hpp"

#include <cmath>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

namespace cqss {

ChiSquare chi_square_uniform(std::span<const std::uint64_t> counts) {
  if (counts.size() < 2) throw std::invalid_argument("chi-square needs at least two bins");
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  if (total <= 0.0) throw std::invalid_argument("chi-square needs observations");
  const double expected = total / static_cast<double>(counts.size());
  ChiSquare out;
  for (auto c : counts) {
    const double d = static_cast<double>(c) - expected;
    out.statistic += d * d / expected;
  }
  out.dof = static_cast<int>(counts.size()) - 1;
  out.p_value = boost::math::gamma_q(out.dof / 2.0, out.statistic / 2.0);
  return out;
}

BinomialBand binomial_band(double p, std::uint64_t trials, double sigmas) {
  if (trials == 0) throw std::invalid_argument("binomial band needs trials");
  BinomialBand b;
  b.expected = p;
  b.sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
  b.low = p - sigmas * b.sigma;
  b.high = p + sigmas * b.sigma;
  return b;
}

}  // namespace cqss
