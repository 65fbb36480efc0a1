#pragma once

// Exact state-vector simulation of a small set of qubits.
//
// Ordering convention: tensor position 0 is the most significant bit of the
// amplitude index. A register holding qubits (q0, q1, q2) at positions
// (0, 1, 2) stores amplitude <b0 b1 b2|psi> at index b0*4 + b1*2 + b2.
// Newly allocated qubits are appended at the least significant end.

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cqss/party.hpp"

namespace cqss {

using Complex = std::complex<double>;
using StateVector = Eigen::VectorXcd;

class QcoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Capacity exceeded.
class ResourceError : public QcoreError {
 public:
  using QcoreError::QcoreError;
};

/// Dead, unknown or duplicated qubit handle.
class QubitError : public QcoreError {
 public:
  using QcoreError::QcoreError;
};

/// Broken numerical invariant; never expected in a correct run.
class InternalError : public QcoreError {
 public:
  using QcoreError::QcoreError;
};

struct QubitId {
  std::uint32_t value = 0;
  auto operator<=>(const QubitId&) const = default;
};

/// The four Bell states. The enumerator value is the two-bit classical label
/// (x, y) packed as 2x + y:
///   PhiMinus    = (|01> - |10>)/sqrt2 -> 00
///   PhiPlus     = (|01> + |10>)/sqrt2 -> 01
///   VarphiMinus = (|00> - |11>)/sqrt2 -> 10
///   VarphiPlus  = (|00> + |11>)/sqrt2 -> 11
enum class BellKind : std::uint8_t { PhiMinus = 0, PhiPlus = 1, VarphiMinus = 2, VarphiPlus = 3 };

inline constexpr std::array<BellKind, 4> kAllBellKinds = {
    BellKind::PhiMinus, BellKind::PhiPlus, BellKind::VarphiMinus, BellKind::VarphiPlus};

/// ZX applies X first, then Z.
enum class PauliOp : std::uint8_t { I, X, Z, ZX };

enum class Basis : std::uint8_t { Z, X };

std::string to_string(BellKind kind);
std::string to_string(PauliOp op);
std::string to_string(Basis basis);

/// Two-qubit amplitudes in |00>,|01>,|10>,|11> order.
StateVector bell_state(BellKind kind);

Eigen::Matrix2cd pauli_matrix(PauliOp op);

/// Unitary the receiver applies after an entanglement swap through a
/// singlet link, given the dealer's Bell outcome on (qubit, link half):
/// VarphiPlus -> ZX, VarphiMinus -> X, PhiPlus -> Z, PhiMinus -> I.
PauliOp swap_correction(BellKind outcome);

/// Deterministic 64-bit stream. Uniform variates are built from the top 53
/// bits of mt19937_64 output, so sequences are reproducible across builds.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed);

  /// Stream for one trial of a batch; independent of execution order.
  static RandomSource for_trial(std::uint64_t master_seed, std::uint64_t trial);

  /// Child stream keyed by `stream`; does not advance this one.
  RandomSource fork(std::uint64_t stream) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on {0, ..., n-1}; n > 0.
  std::uint64_t below(std::uint64_t n);
  bool coin() { return (engine_() >> 63) != 0; }
  double normal();

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> gauss_;
};

/// splitmix64 finalizer; used to derive child seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

class DensityMatrix {
 public:
  DensityMatrix() = default;
  explicit DensityMatrix(Eigen::MatrixXcd entries, std::vector<QubitId> subset = {});

  static DensityMatrix from_pure(const StateVector& psi);
  static DensityMatrix maximally_mixed(std::size_t qubits);

  const Eigen::MatrixXcd& matrix() const { return entries_; }
  const std::vector<QubitId>& subset() const { return subset_; }
  std::size_t dimension() const { return static_cast<std::size_t>(entries_.rows()); }
  std::size_t num_qubits() const;
  Complex trace() const { return entries_.trace(); }
  double purity() const;

  /// Hermitian, unit trace and positive semidefinite, all within `tol`.
  bool is_valid(double tol = 1e-9) const;

 private:
  Eigen::MatrixXcd entries_;
  std::vector<QubitId> subset_;
};

/// Dense pure state over the live qubits plus a handle table. Measured
/// qubits are removed from the vector immediately.
class QuantumRegister {
 public:
  static constexpr std::size_t kMaxQubits = 24;

  QuantumRegister();

  std::size_t size() const { return layout_.size(); }
  bool contains(QubitId q) const { return slots_.count(q) != 0; }
  std::size_t position(QubitId q) const;
  PartyId owner(QubitId q) const;
  void set_owner(QubitId q, PartyId owner);
  /// Live qubits in tensor-position order.
  const std::vector<QubitId>& qubits() const { return layout_; }
  const StateVector& amplitudes() const { return amps_; }
  double norm_squared() const { return amps_.squaredNorm(); }

  QubitId alloc_qubit(int value, PartyId owner = PartyId::dealer());
  std::pair<QubitId, QubitId> alloc_bell_pair(BellKind kind, PartyId first_owner = PartyId::dealer(),
                                              PartyId second_owner = PartyId::dealer());
  /// Appends an arbitrary normalized k-qubit state as k new qubits, in order.
  std::vector<QubitId> load_state(const StateVector& psi, PartyId owner = PartyId::dealer());

  void apply_pauli(QubitId q, PauliOp op);

  /// Born probabilities of the four Bell outcomes on (qa, qb), indexed by
  /// the BellKind value.
  std::array<double, 4> bell_probabilities(QubitId qa, QubitId qb) const;
  /// Samples a Bell outcome, collapses, and removes qa and qb.
  BellKind bell_measure(QubitId qa, QubitId qb, RandomSource& rng);
  /// Forces the given Bell outcome; returns its prior probability. Throws
  /// InternalError for a zero-probability branch.
  double bell_project(QubitId qa, QubitId qb, BellKind outcome);

  /// Outcome 0 is |0> (Z) or |+x> (X). The qubit is removed.
  int measure_single(QubitId q, Basis basis, RandomSource& rng);
  /// Same as measure_single but the qubit stays live in the collapsed state.
  int collapse_single(QubitId q, Basis basis, RandomSource& rng);

  DensityMatrix reduced_density(std::span<const QubitId> subset) const;
  /// The full pure state with qubits reordered as `order` (a permutation of
  /// all live qubits).
  StateVector state_in_order(std::span<const QubitId> order) const;

 private:
  struct Slot {
    std::size_t position;
    PartyId owner;
  };

  QubitId next_id();
  void require_live(QubitId q) const;
  void require_pair(QubitId qa, QubitId qb) const;
  std::size_t bit_of(QubitId q) const { return size() - 1 - position(q); }
  /// Bell amplitudes c_B(r) over the remaining qubits for one kind.
  StateVector bell_component(QubitId qa, QubitId qb, BellKind kind) const;
  StateVector single_component(QubitId q, Basis basis, int outcome) const;
  void remove_qubits(std::vector<QubitId> gone, StateVector reduced);

  StateVector amps_;
  std::vector<QubitId> layout_;
  std::map<QubitId, Slot> slots_;
  std::uint32_t next_id_ = 0;
};

/// Applies the measurement-sampling rule: clamp small negatives, renormalize
/// small drift, inverse-CDF sample. Returns the chosen index.
std::size_t sample_outcome(std::span<const double> probabilities, RandomSource& rng);

/// |<a|b>|^2.
double fidelity(const StateVector& a, const StateVector& b);
/// <psi|rho|psi>.
double fidelity(const StateVector& psi, const DensityMatrix& rho);
/// Uhlmann fidelity (tr sqrt(sqrt(r) s sqrt(r)))^2.
double fidelity(const DensityMatrix& r, const DensityMatrix& s);

/// Half the sum of absolute eigenvalues of r - s.
double trace_distance(const DensityMatrix& r, const DensityMatrix& s);

/// Traces out the qubit at `position` of an n-qubit operator.
Eigen::MatrixXcd trace_out(const Eigen::MatrixXcd& rho, std::size_t position);
/// Keeps only the qubits at `positions` (in that order).
Eigen::MatrixXcd partial_trace_keep(const StateVector& psi, std::span<const std::size_t> positions);

/// (1/2) I on slot `position` tensored with the partial trace of rho over
/// that slot, the identity factor occupying the traced slot.
Eigen::MatrixXcd replace_with_mixed(const Eigen::MatrixXcd& rho, std::size_t position);

/// Players' state when the swap record of the qubit at 0-based `position`
/// is withheld.
DensityMatrix expected_withheld_density(const StateVector& psi, std::size_t position);
/// Same construction iterated over several positions.
DensityMatrix expected_withheld_density(const StateVector& psi, std::span<const std::size_t> positions);

/// log2 of a power-of-two dimension; throws std::invalid_argument otherwise.
std::size_t qubit_count_for(std::size_t dimension);

}  // namespace cqss
