#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/Eigenvalues>

#include "cqss/qcore.hpp"

namespace cqss {

namespace {

inline std::size_t insert_zero_bit(std::size_t r, std::size_t bit) {
  const std::size_t low = r & ((std::size_t{1} << bit) - 1);
  return ((r >> bit) << (bit + 1)) | low;
}

inline std::size_t remove_bit(std::size_t i, std::size_t bit) {
  const std::size_t low = i & ((std::size_t{1} << bit) - 1);
  return ((i >> (bit + 1)) << bit) | low;
}

Eigen::VectorXd hermitian_eigenvalues(const Eigen::MatrixXcd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw InternalError("Hermitian eigensolver failed");
  return solver.eigenvalues();
}

Eigen::MatrixXcd psd_sqrt(const Eigen::MatrixXcd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(m);
  if (solver.info() != Eigen::Success) throw InternalError("Hermitian eigensolver failed");
  const Eigen::VectorXd roots = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return solver.eigenvectors() * roots.cast<Complex>().asDiagonal() * solver.eigenvectors().adjoint();
}

void require_same_dimension(const DensityMatrix& r, const DensityMatrix& s) {
  if (r.dimension() != s.dimension()) throw std::invalid_argument("density matrices differ in dimension");
}

}  // namespace

std::size_t qubit_count_for(std::size_t dimension) {
  if (dimension == 0 || (dimension & (dimension - 1)) != 0) {
    throw std::invalid_argument("dimension " + std::to_string(dimension) + " is not a power of two");
  }
  std::size_t n = 0;
  while ((std::size_t{1} << n) < dimension) ++n;
  return n;
}

DensityMatrix::DensityMatrix(Eigen::MatrixXcd entries, std::vector<QubitId> subset)
    : entries_(std::move(entries)), subset_(std::move(subset)) {
  if (entries_.rows() != entries_.cols()) throw std::invalid_argument("density matrix must be square");
  qubit_count_for(static_cast<std::size_t>(entries_.rows()));
}

DensityMatrix DensityMatrix::from_pure(const StateVector& psi) { return DensityMatrix(psi * psi.adjoint()); }

DensityMatrix DensityMatrix::maximally_mixed(std::size_t qubits) {
  const auto dim = static_cast<Eigen::Index>(std::size_t{1} << qubits);
  return DensityMatrix(Eigen::MatrixXcd::Identity(dim, dim) / static_cast<double>(dim));
}

std::size_t DensityMatrix::num_qubits() const { return qubit_count_for(dimension()); }

double DensityMatrix::purity() const { return (entries_ * entries_).trace().real(); }

bool DensityMatrix::is_valid(double tol) const {
  if ((entries_ - entries_.adjoint()).cwiseAbs().maxCoeff() > tol) return false;
  if (std::abs(entries_.trace() - Complex(1.0)) > tol) return false;
  const Eigen::MatrixXcd herm = 0.5 * (entries_ + entries_.adjoint());
  return hermitian_eigenvalues(herm).minCoeff() >= -tol;
}

double fidelity(const StateVector& a, const StateVector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("fidelity: dimension mismatch");
  return std::clamp(std::norm(a.dot(b)), 0.0, 1.0);
}

double fidelity(const StateVector& psi, const DensityMatrix& rho) {
  if (static_cast<std::size_t>(psi.size()) != rho.dimension()) {
    throw std::invalid_argument("fidelity: dimension mismatch");
  }
  return std::clamp((psi.adjoint() * rho.matrix() * psi)(0).real(), 0.0, 1.0);
}

double fidelity(const DensityMatrix& r, const DensityMatrix& s) {
  require_same_dimension(r, s);
  const Eigen::MatrixXcd root = psd_sqrt(r.matrix());
  Eigen::MatrixXcd inner = root * s.matrix() * root;
  inner = 0.5 * (inner + inner.adjoint());
  // Roundoff-level eigenvalues would otherwise contribute O(1e-8) via sqrt.
  const Eigen::VectorXd ev = hermitian_eigenvalues(inner);
  double t = 0.0;
  for (double v : ev) {
    if (v > 1e-13) t += std::sqrt(v);
  }
  return std::clamp(t * t, 0.0, 1.0);
}

double trace_distance(const DensityMatrix& r, const DensityMatrix& s) {
  require_same_dimension(r, s);
  Eigen::MatrixXcd diff = r.matrix() - s.matrix();
  diff = 0.5 * (diff + diff.adjoint());
  return std::clamp(0.5 * hermitian_eigenvalues(diff).cwiseAbs().sum(), 0.0, 1.0);
}

Eigen::MatrixXcd trace_out(const Eigen::MatrixXcd& rho, std::size_t position) {
  const std::size_t n = qubit_count_for(static_cast<std::size_t>(rho.rows()));
  if (position >= n) throw std::out_of_range("trace_out: position out of range");
  const std::size_t bit = n - 1 - position;
  const std::size_t half = static_cast<std::size_t>(rho.rows()) / 2;
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(half), static_cast<Eigen::Index>(half));
  for (std::size_t i = 0; i < half; ++i) {
    for (std::size_t j = 0; j < half; ++j) {
      Complex acc = 0.0;
      for (std::size_t v = 0; v < 2; ++v) {
        const std::size_t fi = insert_zero_bit(i, bit) | (v << bit);
        const std::size_t fj = insert_zero_bit(j, bit) | (v << bit);
        acc += rho(static_cast<Eigen::Index>(fi), static_cast<Eigen::Index>(fj));
      }
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = acc;
    }
  }
  return out;
}

Eigen::MatrixXcd partial_trace_keep(const StateVector& psi, std::span<const std::size_t> positions) {
  const std::size_t n = qubit_count_for(static_cast<std::size_t>(psi.size()));
  std::vector<bool> kept(n, false);
  for (std::size_t p : positions) {
    if (p >= n) throw std::out_of_range("partial_trace_keep: position out of range");
    if (kept[p]) throw std::invalid_argument("partial_trace_keep: duplicate position");
    kept[p] = true;
  }
  std::vector<std::size_t> rest;
  for (std::size_t p = 0; p < n; ++p) {
    if (!kept[p]) rest.push_back(p);
  }
  const std::size_t s = positions.size();
  const auto sub_dim = static_cast<Eigen::Index>(std::size_t{1} << s);
  const auto rest_dim = static_cast<Eigen::Index>(std::size_t{1} << rest.size());
  Eigen::MatrixXcd m(sub_dim, rest_dim);
  for (std::size_t i = 0; i < static_cast<std::size_t>(psi.size()); ++i) {
    std::size_t sub = 0;
    for (std::size_t p : positions) sub = (sub << 1) | ((i >> (n - 1 - p)) & 1U);
    std::size_t other = 0;
    for (std::size_t p : rest) other = (other << 1) | ((i >> (n - 1 - p)) & 1U);
    m(static_cast<Eigen::Index>(sub), static_cast<Eigen::Index>(other)) = psi(static_cast<Eigen::Index>(i));
  }
  return m * m.adjoint();
}

Eigen::MatrixXcd replace_with_mixed(const Eigen::MatrixXcd& rho, std::size_t position) {
  const std::size_t n = qubit_count_for(static_cast<std::size_t>(rho.rows()));
  if (position >= n) throw std::out_of_range("replace_with_mixed: position out of range");
  const Eigen::MatrixXcd reduced = trace_out(rho, position);
  const std::size_t bit = n - 1 - position;
  const std::size_t dim = static_cast<std::size_t>(rho.rows());
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(rho.rows(), rho.cols());
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      if (((i >> bit) & 1U) != ((j >> bit) & 1U)) continue;
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          0.5 * reduced(static_cast<Eigen::Index>(remove_bit(i, bit)), static_cast<Eigen::Index>(remove_bit(j, bit)));
    }
  }
  return out;
}

DensityMatrix expected_withheld_density(const StateVector& psi, std::size_t position) {
  const std::size_t one[] = {position};
  return expected_withheld_density(psi, one);
}

DensityMatrix expected_withheld_density(const StateVector& psi, std::span<const std::size_t> positions) {
  const std::size_t n = qubit_count_for(static_cast<std::size_t>(psi.size()));
  if (std::abs(psi.squaredNorm() - 1.0) > 1e-9) throw std::invalid_argument("state is not normalized");
  std::set<std::size_t> unique;
  for (std::size_t p : positions) {
    if (p >= n) throw std::out_of_range("withheld index " + std::to_string(p) + " out of range");
    unique.insert(p);
  }
  Eigen::MatrixXcd rho = psi * psi.adjoint();
  for (std::size_t p : unique) rho = replace_with_mixed(rho, p);
  return DensityMatrix(std::move(rho));
}

}  // namespace cqss
