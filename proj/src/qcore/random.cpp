#include <limits>

#include "cqss/qcore.hpp"

namespace cqss {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

RandomSource::RandomSource(std::uint64_t seed) : seed_(seed), engine_(seed) {}

RandomSource RandomSource::for_trial(std::uint64_t master_seed, std::uint64_t trial) {
  return RandomSource(mix_seed(master_seed, trial));
}

RandomSource RandomSource::fork(std::uint64_t stream) const {
  return RandomSource(mix_seed(seed_ ^ 0xD1B54A32D192ED03ULL, stream));
}

double RandomSource::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t RandomSource::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("RandomSource::below: empty range");
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t limit = max - max % n;
  std::uint64_t r = engine_();
  while (r >= limit) r = engine_();
  return r % n;
}

double RandomSource::normal() { return gauss_(engine_); }

std::size_t sample_outcome(std::span<const double> probabilities, RandomSource& rng) {
  std::vector<double> p(probabilities.begin(), probabilities.end());
  double total = 0.0;
  for (double& v : p) {
    if (v < 0.0) {
      if (v < -1e-12) throw InternalError("negative outcome probability");
      v = 0.0;
    }
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InternalError("outcome probabilities do not sum to 1");
  const double u = rng.uniform() * total;
  double acc = 0.0;
  std::size_t last_nonzero = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) last_nonzero = i;
    acc += p[i];
    if (u < acc) return i;
  }
  return last_nonzero;
}

}  // namespace cqss
