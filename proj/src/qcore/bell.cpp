#include <cmath>

#include "cqss/qcore.hpp"

namespace cqss {

std::string to_string(BellKind kind) {
  switch (kind) {
    case BellKind::PhiMinus:
      return "phi-";
    case BellKind::PhiPlus:
      return "phi+";
    case BellKind::VarphiMinus:
      return "varphi-";
    case BellKind::VarphiPlus:
      return "varphi+";
  }
  return "?";
}

std::string to_string(PauliOp op) {
  switch (op) {
    case PauliOp::I:
      return "I";
    case PauliOp::X:
      return "X";
    case PauliOp::Z:
      return "Z";
    case PauliOp::ZX:
      return "ZX";
  }
  return "?";
}

std::string to_string(Basis basis) { return basis == Basis::Z ? "Z" : "X"; }

StateVector bell_state(BellKind kind) {
  const double h = 1.0 / std::sqrt(2.0);
  StateVector v = StateVector::Zero(4);
  switch (kind) {
    case BellKind::PhiMinus:
      v(1) = h;
      v(2) = -h;
      break;
    case BellKind::PhiPlus:
      v(1) = h;
      v(2) = h;
      break;
    case BellKind::VarphiMinus:
      v(0) = h;
      v(3) = -h;
      break;
    case BellKind::VarphiPlus:
      v(0) = h;
      v(3) = h;
      break;
  }
  return v;
}

Eigen::Matrix2cd pauli_matrix(PauliOp op) {
  Eigen::Matrix2cd x;
  x << 0, 1, 1, 0;
  Eigen::Matrix2cd z;
  z << 1, 0, 0, -1;
  switch (op) {
    case PauliOp::I:
      return Eigen::Matrix2cd::Identity();
    case PauliOp::X:
      return x;
    case PauliOp::Z:
      return z;
    case PauliOp::ZX:
      return z * x;
  }
  return Eigen::Matrix2cd::Identity();
}

PauliOp swap_correction(BellKind outcome) {
  switch (outcome) {
    case BellKind::VarphiPlus:
      return PauliOp::ZX;
    case BellKind::VarphiMinus:
      return PauliOp::X;
    case BellKind::PhiPlus:
      return PauliOp::Z;
    case BellKind::PhiMinus:
      return PauliOp::I;
  }
  return PauliOp::I;
}

}  // namespace cqss
