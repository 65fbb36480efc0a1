#include <cmath>

#include "cqss/harness.hpp"

namespace cqss {

StateVector demo_encode(const StateVector& xi, std::size_t width) {
  if (xi.size() != 2) throw std::invalid_argument("demo_encode: expected two amplitudes");
  if (std::abs(xi.squaredNorm() - 1.0) > 1e-9) throw std::invalid_argument("demo_encode: amplitudes not normalized");
  if (width < 2) throw std::invalid_argument("demo_encode: width must be at least 2");
  if (width > QuantumRegister::kMaxQubits) throw ResourceError("demo_encode: width exceeds the register cap");
  StateVector out = StateVector::Zero(Eigen::Index{1} << width);
  out(0) = xi(0);
  out(out.size() - 1) = xi(1);
  return out;
}

StateVector demo_decode(const StateVector& state) {
  const std::size_t width = qubit_count_for(static_cast<std::size_t>(state.size()));
  if (width < 2) throw DecodeError("demo_decode: need at least two qubits");
  const Complex a = state(0);
  const Complex b = state(state.size() - 1);
  const double inside = std::norm(a) + std::norm(b);
  const double outside = state.squaredNorm() - inside;
  if (outside > 1e-9 || std::abs(inside - 1.0) > 1e-9) {
    throw DecodeError("demo_decode: state is outside the code image (weight " + std::to_string(outside) +
                      " off |0...0>, |1...1>)");
  }
  StateVector xi(2);
  xi << a, b;
  // pin the global phase on the larger amplitude
  const Complex lead = std::abs(a) >= std::abs(b) ? a : b;
  xi *= std::conj(lead) / std::abs(lead);
  return xi / xi.norm();
}

StateVector random_haar(std::size_t width, RandomSource& rng) {
  if (width > QuantumRegister::kMaxQubits) throw ResourceError("random_haar: width exceeds the register cap");
  StateVector v(Eigen::Index{1} << width);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double re = rng.normal();
    const double im = rng.normal();
    v(i) = Complex(re, im);
  }
  return v / v.norm();
}

}  // namespace cqss
