#pragma once

#include <cstdint>
#include <span>

namespace cqss {

struct ChiSquare {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

/// Pearson goodness-of-fit against the uniform distribution over the bins.
ChiSquare chi_square_uniform(std::span<const std::uint64_t> counts);

/// expected +- sigmas * sqrt(p(1-p)/trials).
struct BinomialBand {
  double expected = 0.0;
  double sigma = 0.0;
  double low = 0.0;
  double high = 0.0;
  bool contains(double frequency) const { return frequency >= low && frequency <= high; }
};

BinomialBand binomial_band(double p, std::uint64_t trials, double sigmas = 4.0);

}  // namespace cqss
