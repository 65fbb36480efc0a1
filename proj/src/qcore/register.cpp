#include <algorithm>
#include <cmath>
#include <set>

#include "cqss/qcore.hpp"

namespace cqss {

namespace {

constexpr double kNormTolerance = 1e-9;
// Below this a forced branch cannot be renormalized.
constexpr double kDegenerateBranch = 1e-14;

inline std::size_t insert_zero_bit(std::size_t r, std::size_t bit) {
  const std::size_t low = r & ((std::size_t{1} << bit) - 1);
  return ((r >> bit) << (bit + 1)) | low;
}

inline int bit_at(std::size_t index, std::size_t bit) { return static_cast<int>((index >> bit) & 1U); }

}  // namespace

QuantumRegister::QuantumRegister() : amps_(StateVector::Ones(1)) {}

QubitId QuantumRegister::next_id() { return QubitId{next_id_++}; }

void QuantumRegister::require_live(QubitId q) const {
  if (!contains(q)) throw QubitError("unknown or measured qubit id " + std::to_string(q.value));
}

void QuantumRegister::require_pair(QubitId qa, QubitId qb) const {
  require_live(qa);
  require_live(qb);
  if (qa == qb) throw QubitError("Bell measurement needs two distinct qubits");
}

std::size_t QuantumRegister::position(QubitId q) const {
  require_live(q);
  return slots_.at(q).position;
}

PartyId QuantumRegister::owner(QubitId q) const {
  require_live(q);
  return slots_.at(q).owner;
}

void QuantumRegister::set_owner(QubitId q, PartyId owner) {
  require_live(q);
  slots_.at(q).owner = owner;
}

std::vector<QubitId> QuantumRegister::load_state(const StateVector& psi, PartyId owner) {
  const std::size_t k = qubit_count_for(static_cast<std::size_t>(psi.size()));
  if (size() + k > kMaxQubits) {
    throw ResourceError("register capacity of " + std::to_string(kMaxQubits) + " qubits exceeded");
  }
  if (std::abs(psi.squaredNorm() - 1.0) > kNormTolerance) {
    throw std::invalid_argument("state to load is not normalized");
  }
  const auto old_dim = static_cast<Eigen::Index>(amps_.size());
  const auto add_dim = static_cast<Eigen::Index>(psi.size());
  StateVector next(old_dim * add_dim);
  for (Eigen::Index i = 0; i < old_dim; ++i) next.segment(i * add_dim, add_dim) = amps_(i) * psi;
  amps_ = std::move(next);

  std::vector<QubitId> ids;
  ids.reserve(k);
  for (std::size_t j = 0; j < k; ++j) {
    const QubitId id = next_id();
    slots_[id] = Slot{layout_.size(), owner};
    layout_.push_back(id);
    ids.push_back(id);
  }
  return ids;
}

QubitId QuantumRegister::alloc_qubit(int value, PartyId owner) {
  if (value != 0 && value != 1) throw std::invalid_argument("basis value must be 0 or 1");
  StateVector basis = StateVector::Zero(2);
  basis(value) = 1.0;
  return load_state(basis, owner).front();
}

std::pair<QubitId, QubitId> QuantumRegister::alloc_bell_pair(BellKind kind, PartyId first_owner,
                                                             PartyId second_owner) {
  const auto ids = load_state(bell_state(kind), first_owner);
  slots_.at(ids[1]).owner = second_owner;
  return {ids[0], ids[1]};
}

void QuantumRegister::apply_pauli(QubitId q, PauliOp op) {
  require_live(q);
  if (op == PauliOp::I) return;
  const std::size_t bit = bit_of(q);
  const std::size_t half = static_cast<std::size_t>(amps_.size()) / 2;
  for (std::size_t r = 0; r < half; ++r) {
    const std::size_t i0 = insert_zero_bit(r, bit);
    const std::size_t i1 = i0 | (std::size_t{1} << bit);
    Complex a0 = amps_(i0);
    Complex a1 = amps_(i1);
    if (op == PauliOp::X || op == PauliOp::ZX) std::swap(a0, a1);
    if (op == PauliOp::Z || op == PauliOp::ZX) a1 = -a1;
    amps_(i0) = a0;
    amps_(i1) = a1;
  }
}

StateVector QuantumRegister::bell_component(QubitId qa, QubitId qb, BellKind kind) const {
  const std::size_t ba = bit_of(qa);
  const std::size_t bb = bit_of(qb);
  const std::size_t lo = std::min(ba, bb);
  const std::size_t hi = std::max(ba, bb);
  const StateVector bell = bell_state(kind);
  const std::size_t rest = static_cast<std::size_t>(amps_.size()) / 4;
  StateVector out(static_cast<Eigen::Index>(rest));
  for (std::size_t r = 0; r < rest; ++r) {
    const std::size_t base = insert_zero_bit(insert_zero_bit(r, lo), hi);
    Complex c = 0.0;
    for (int x = 0; x < 2; ++x) {
      for (int y = 0; y < 2; ++y) {
        const Complex coeff = bell(2 * x + y);
        if (coeff == 0.0) continue;
        const std::size_t idx = base | (std::size_t(x) << ba) | (std::size_t(y) << bb);
        c += std::conj(coeff) * amps_(static_cast<Eigen::Index>(idx));
      }
    }
    out(static_cast<Eigen::Index>(r)) = c;
  }
  return out;
}

std::array<double, 4> QuantumRegister::bell_probabilities(QubitId qa, QubitId qb) const {
  require_pair(qa, qb);
  std::array<double, 4> p{};
  for (BellKind kind : kAllBellKinds) {
    p[static_cast<std::size_t>(kind)] = bell_component(qa, qb, kind).squaredNorm();
  }
  return p;
}

void QuantumRegister::remove_qubits(std::vector<QubitId> gone, StateVector reduced) {
  for (QubitId q : gone) slots_.erase(q);
  std::erase_if(layout_, [&](QubitId q) { return std::find(gone.begin(), gone.end(), q) != gone.end(); });
  for (std::size_t p = 0; p < layout_.size(); ++p) slots_.at(layout_[p]).position = p;
  amps_ = std::move(reduced);
}

BellKind QuantumRegister::bell_measure(QubitId qa, QubitId qb, RandomSource& rng) {
  const auto p = bell_probabilities(qa, qb);
  const auto kind = static_cast<BellKind>(sample_outcome(p, rng));
  bell_project(qa, qb, kind);
  return kind;
}

double QuantumRegister::bell_project(QubitId qa, QubitId qb, BellKind outcome) {
  require_pair(qa, qb);
  StateVector c = bell_component(qa, qb, outcome);
  const double p = c.squaredNorm();
  if (p < kDegenerateBranch) throw InternalError("zero-probability Bell branch selected");
  c /= std::sqrt(p);
  remove_qubits({qa, qb}, std::move(c));
  return p;
}

StateVector QuantumRegister::single_component(QubitId q, Basis basis, int outcome) const {
  const std::size_t bit = bit_of(q);
  const std::size_t rest = static_cast<std::size_t>(amps_.size()) / 2;
  const double h = 1.0 / std::sqrt(2.0);
  StateVector out(static_cast<Eigen::Index>(rest));
  for (std::size_t r = 0; r < rest; ++r) {
    const std::size_t i0 = insert_zero_bit(r, bit);
    const std::size_t i1 = i0 | (std::size_t{1} << bit);
    const Complex a0 = amps_(static_cast<Eigen::Index>(i0));
    const Complex a1 = amps_(static_cast<Eigen::Index>(i1));
    Complex c;
    if (basis == Basis::Z) {
      c = outcome == 0 ? a0 : a1;
    } else {
      c = outcome == 0 ? h * (a0 + a1) : h * (a0 - a1);
    }
    out(static_cast<Eigen::Index>(r)) = c;
  }
  return out;
}

int QuantumRegister::measure_single(QubitId q, Basis basis, RandomSource& rng) {
  require_live(q);
  std::array<StateVector, 2> parts = {single_component(q, basis, 0), single_component(q, basis, 1)};
  const std::array<double, 2> p = {parts[0].squaredNorm(), parts[1].squaredNorm()};
  const int outcome = static_cast<int>(sample_outcome(p, rng));
  StateVector c = std::move(parts[static_cast<std::size_t>(outcome)]);
  c /= std::sqrt(p[static_cast<std::size_t>(outcome)]);
  remove_qubits({q}, std::move(c));
  return outcome;
}

int QuantumRegister::collapse_single(QubitId q, Basis basis, RandomSource& rng) {
  require_live(q);
  std::array<StateVector, 2> parts = {single_component(q, basis, 0), single_component(q, basis, 1)};
  const std::array<double, 2> p = {parts[0].squaredNorm(), parts[1].squaredNorm()};
  const int outcome = static_cast<int>(sample_outcome(p, rng));
  const StateVector& c = parts[static_cast<std::size_t>(outcome)];
  const double scale = 1.0 / std::sqrt(p[static_cast<std::size_t>(outcome)]);

  // Eigenvector of the observed outcome, written back into q's slot.
  const double h = 1.0 / std::sqrt(2.0);
  Complex e0;
  Complex e1;
  if (basis == Basis::Z) {
    e0 = outcome == 0 ? 1.0 : 0.0;
    e1 = outcome == 0 ? 0.0 : 1.0;
  } else {
    e0 = h;
    e1 = outcome == 0 ? h : -h;
  }
  const std::size_t bit = bit_of(q);
  for (Eigen::Index r = 0; r < c.size(); ++r) {
    const std::size_t i0 = insert_zero_bit(static_cast<std::size_t>(r), bit);
    const std::size_t i1 = i0 | (std::size_t{1} << bit);
    amps_(static_cast<Eigen::Index>(i0)) = scale * c(r) * e0;
    amps_(static_cast<Eigen::Index>(i1)) = scale * c(r) * e1;
  }
  return outcome;
}

DensityMatrix QuantumRegister::reduced_density(std::span<const QubitId> subset) const {
  if (subset.empty()) throw std::invalid_argument("reduced_density: empty subset");
  std::set<QubitId> seen;
  for (QubitId q : subset) {
    require_live(q);
    if (!seen.insert(q).second) throw QubitError("reduced_density: duplicate qubit id " + std::to_string(q.value));
  }
  std::vector<std::size_t> positions;
  positions.reserve(subset.size());
  for (QubitId q : subset) positions.push_back(position(q));
  return DensityMatrix(partial_trace_keep(amps_, positions), std::vector<QubitId>(subset.begin(), subset.end()));
}

StateVector QuantumRegister::state_in_order(std::span<const QubitId> order) const {
  if (order.size() != size()) throw QubitError("state_in_order: order must list every live qubit");
  std::set<QubitId> seen;
  for (QubitId q : order) {
    require_live(q);
    if (!seen.insert(q).second) throw QubitError("state_in_order: duplicate qubit id");
  }
  const std::size_t n = size();
  // source bit feeding each destination position
  std::vector<std::size_t> src_bit(n);
  for (std::size_t j = 0; j < n; ++j) src_bit[j] = bit_of(order[j]);
  StateVector out(amps_.size());
  for (std::size_t i = 0; i < static_cast<std::size_t>(amps_.size()); ++i) {
    std::size_t dst = 0;
    for (std::size_t j = 0; j < n; ++j) dst = (dst << 1) | static_cast<std::size_t>(bit_at(i, src_bit[j]));
    out(static_cast<Eigen::Index>(dst)) = amps_(static_cast<Eigen::Index>(i));
  }
  return out;
}

}  // namespace cqss
