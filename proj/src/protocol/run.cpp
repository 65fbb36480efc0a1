#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "cqss/protocol.hpp"

namespace cqss {

namespace {

std::vector<int> bits_payload(std::size_t index, TwoBits bits) {
  return {static_cast<int>(index), bits.x, bits.y};
}

std::optional<StateVector> pure_part(const DensityMatrix& rho) {
  if (rho.purity() < 1.0 - 1e-9) return std::nullopt;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(rho.matrix());
  if (solver.info() != Eigen::Success) throw InternalError("Hermitian eigensolver failed");
  const Eigen::Index top = solver.eigenvalues().size() - 1;  // ascending order
  return StateVector(solver.eigenvectors().col(top));
}

}  // namespace

ProtocolRun ProtocolRun::setup(int players, int controllers, int width, const StateVector& secret,
                               AccessPolicy policy, RandomSource rng) {
  policy.validate(players, controllers, width);
  if (static_cast<std::size_t>(width) + 2 > QuantumRegister::kMaxQubits) {
    throw PolicyError("N: width " + std::to_string(width) + " leaves no room for a link in a " +
                      std::to_string(QuantumRegister::kMaxQubits) + "-qubit register");
  }
  if (secret.size() != (Eigen::Index{1} << width)) {
    throw PolicyError("secret: expected " + std::to_string(Eigen::Index{1} << width) + " amplitudes, got " +
                      std::to_string(secret.size()));
  }
  if (std::abs(secret.squaredNorm() - 1.0) > 1e-9) throw PolicyError("secret: state is not normalized");

  ProtocolRun run;
  run.players_ = players;
  run.controllers_ = controllers;
  run.width_ = width;
  run.secret_ = secret;
  run.policy_ = std::move(policy);
  run.rng_ = rng;
  const auto ids = run.reg_.load_state(secret, PartyId::dealer());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    run.slots_.push_back(Slot{false, i + 1, run.policy_.qubit_to_player[i], ids[i], false, false, std::nullopt});
  }
  run.transcript_.bell_record.assign(ids.size(), std::nullopt);
  for (std::size_t i = 0; i < run.policy_.record_to_controller.size(); ++i) {
    const auto& holders = run.policy_.record_to_controller[i];
    for (PartyId c : holders) run.controller_links_left_[c] += holders.size() == 1 ? 2 : 1;
  }
  return run;
}

std::uint64_t ProtocolRun::planned_controller_links() const {
  // a classical share uses a link pair with one controller, a split share
  // one link with each of two controllers
  return 2 * static_cast<std::uint64_t>(policy_.record_to_controller.size());
}

void ProtocolRun::embed_decoys(std::span<const std::size_t> decoy_slots, const StateVector& extended) {
  for (const Slot& s : slots_) {
    if (s.distributed) throw PhaseError("decoys must be embedded before distribution starts");
  }
  if (decoys_ != 0) throw PhaseError("decoys already embedded");
  const std::size_t total = static_cast<std::size_t>(width_) + decoy_slots.size();
  if (extended.size() != (Eigen::Index{1} << total)) {
    throw PolicyError("decoys: extended state has the wrong dimension");
  }
  if (total + 2 > QuantumRegister::kMaxQubits) {
    throw ResourceError("decoys: " + std::to_string(total) + " distributed qubits exceed register capacity");
  }
  std::vector<bool> is_decoy(total, false);
  for (std::size_t p : decoy_slots) {
    if (p >= total || is_decoy[p]) throw PolicyError("decoys: placements must be distinct slots below N+M");
    is_decoy[p] = true;
  }

  QuantumRegister fresh;
  const auto ids = fresh.load_state(extended, PartyId::dealer());
  std::vector<Slot> next;
  std::size_t secret_index = 0;
  std::size_t decoy_index = 0;
  for (std::size_t p = 0; p < total; ++p) {
    Slot s;
    s.qubit = ids[p];
    s.decoy = is_decoy[p];
    if (s.decoy) {
      s.index = ++decoy_index;
      s.holder = PartyId::player(static_cast<std::uint16_t>((decoy_index - 1) % players_ + 1));
    } else {
      s.index = ++secret_index;
      s.holder = policy_.qubit_to_player[secret_index - 1];
    }
    next.push_back(s);
  }
  reg_ = std::move(fresh);
  slots_ = std::move(next);
  decoys_ = decoy_slots.size();
  transcript_.decoy_record.assign(decoys_, std::nullopt);
}

std::size_t ProtocolRun::slot_of_secret(std::size_t secret_index) const {
  for (std::size_t s = 0; s < slots_.size(); ++s) {
    if (!slots_[s].decoy && slots_[s].index == secret_index) return s;
  }
  throw std::out_of_range("secret index " + std::to_string(secret_index) + " out of range 1.." +
                          std::to_string(width_));
}

void ProtocolRun::tap(QuantumRegister& reg, QubitId in_flight, PartyId receiver, LinkKind kind) {
  if (!tap_) return;
  Channel channel{reg, in_flight, receiver, kind};
  tap_(channel);
}

BellKind ProtocolRun::distribute_qubit(std::size_t secret_index) {
  return distribute_slot(slot_of_secret(secret_index) + 1);
}

BellKind ProtocolRun::distribute_slot(std::size_t slot) {
  if (slot == 0 || slot > slots_.size()) throw std::out_of_range("slot " + std::to_string(slot) + " out of range");
  Slot& s = slots_[slot - 1];
  if (s.distributed) {
    throw PhaseError(std::string(s.decoy ? "decoy " : "qubit ") + std::to_string(s.index) + " already distributed");
  }
  const auto [mu, nu] = reg_.alloc_bell_pair(BellKind::PhiMinus, PartyId::dealer(), s.holder);
  ++transcript_.epr_player;
  tap(reg_, nu, s.holder, LinkKind::Player);
  const BellKind outcome = reg_.bell_measure(s.qubit, mu, rng_);
  ++transcript_.dealer_measurements;
  ++transcript_.dealer_distribution_measurements;
  s.qubit = nu;
  s.distributed = true;
  s.outcome = outcome;
  if (s.decoy) {
    transcript_.decoy_record[s.index - 1] = outcome;
  } else {
    transcript_.bell_record[s.index - 1] = outcome;
  }
  return outcome;
}

void ProtocolRun::distribute_all() {
  for (std::size_t s = 1; s <= slots_.size(); ++s) {
    if (!slots_[s - 1].distributed) distribute_slot(s);
  }
}

bool ProtocolRun::distribution_complete() const {
  return std::all_of(slots_.begin(), slots_.end(), [](const Slot& s) { return s.distributed; });
}

void ProtocolRun::require_record(std::size_t record_index) const {
  if (record_index == 0 || record_index > transcript_.bell_record.size()) {
    throw std::out_of_range("record " + std::to_string(record_index) + " out of range");
  }
  if (!transcript_.bell_record[record_index - 1]) {
    throw PhaseError("record " + std::to_string(record_index) + " does not exist yet; distribute the qubit first");
  }
  if (classical_.count(record_index) != 0 || split_.count(record_index) != 0) {
    throw PhaseError("record " + std::to_string(record_index) + " already sent to its controllers");
  }
}

void ProtocolRun::consume_controller_link(PartyId controller) {
  auto it = controller_links_left_.find(controller);
  if (it == controller_links_left_.end() || it->second == 0) {
    throw PhaseError("controller " + controller.to_string() + " has no unconsumed link left");
  }
  --it->second;
}

ClassicalExchange ProtocolRun::send_bits_classical(PartyId controller, std::size_t record_index) {
  require_record(record_index);
  const auto& holders = policy_.record_to_controller[record_index - 1];
  if (holders.size() != 1 || holders[0] != controller) {
    throw PolicyError("record " + std::to_string(record_index) + " is not a classical share of " +
                      controller.to_string());
  }
  const auto left = controller_links_left_.find(controller);
  if (left == controller_links_left_.end() || left->second < 2) {
    throw PhaseError("controller " + controller.to_string() + " needs two unconsumed links");
  }
  consume_controller_link(controller);
  consume_controller_link(controller);

  QuantumRegister links;
  const auto [alpha, beta] = links.alloc_bell_pair(BellKind::PhiMinus, PartyId::dealer(), controller);
  const auto [alpha2, beta2] = links.alloc_bell_pair(BellKind::PhiMinus, PartyId::dealer(), controller);
  transcript_.epr_controller += 2;
  tap(links, beta, controller, LinkKind::Controller);
  tap(links, beta2, controller, LinkKind::Controller);

  ClassicalExchange ex;
  ex.secret = encode_bits(*transcript_.bell_record[record_index - 1]);
  ex.dealer_pad = encode_bits(links.bell_measure(alpha, alpha2, rng_));
  ++transcript_.dealer_measurements;
  ex.controller_pad = encode_bits(links.bell_measure(beta, beta2, rng_));
  ++transcript_.controller_measurements;
  ex.announced = ex.secret ^ ex.dealer_pad;
  log({PartyId::dealer(), std::nullopt, "announce", bits_payload(record_index, ex.announced)});
  ex.decoded = ex.announced ^ ex.controller_pad;
  classical_[record_index] = ClassicalShare{ex.decoded, record_index, {controller}};
  return ex;
}

void ProtocolRun::split_bell_between_controllers(PartyId ca, PartyId cb, std::size_t record_index) {
  if (ca == cb) throw PolicyError("split share needs two distinct controllers");
  require_record(record_index);
  const auto& holders = policy_.record_to_controller[record_index - 1];
  if (holders.size() != 2 || holders[0] != ca || holders[1] != cb) {
    throw PolicyError("record " + std::to_string(record_index) + " is not a split share of (" + ca.to_string() +
                      ", " + cb.to_string() + ")");
  }
  consume_controller_link(ca);
  consume_controller_link(cb);

  SplitShare share{ca, cb, QuantumRegister{}, QubitId{}, QubitId{}, false};
  const BellKind kind = *transcript_.bell_record[record_index - 1];
  const auto [half_a, half_b] = share.reg.alloc_bell_pair(kind);

  auto teleport_half = [&](QubitId half, PartyId receiver) {
    const auto [alpha, beta] = share.reg.alloc_bell_pair(BellKind::PhiMinus, PartyId::dealer(), receiver);
    ++transcript_.epr_controller;
    tap(share.reg, beta, receiver, LinkKind::Controller);
    const BellKind outcome = share.reg.bell_measure(half, alpha, rng_);
    ++transcript_.dealer_measurements;
    log({PartyId::dealer(), receiver, "split-correction", bits_payload(record_index, encode_bits(outcome))});
    share.reg.apply_pauli(beta, swap_correction(outcome));
    return beta;
  };
  share.qa = teleport_half(half_a, ca);
  share.qb = teleport_half(half_b, cb);
  split_.emplace(record_index, std::move(share));
}

void ProtocolRun::transport_all() {
  for (std::size_t i = 1; i <= transcript_.bell_record.size(); ++i) {
    if (classical_.count(i) != 0 || split_.count(i) != 0) continue;
    const auto& holders = policy_.record_to_controller[i - 1];
    if (holders.size() == 1) {
      send_bits_classical(holders[0], i);
    } else {
      split_bell_between_controllers(holders[0], holders[1], i);
    }
  }
}

bool ProtocolRun::transport_complete() const {
  return classical_.size() + split_.size() == static_cast<std::size_t>(width_);
}

DensityMatrix ProtocolRun::controller_view(PartyId controller, std::size_t record_index) const {
  const auto it = split_.find(record_index);
  if (it == split_.end()) throw PhaseError("record " + std::to_string(record_index) + " is not a split share");
  const SplitShare& share = it->second;
  if (share.identified) throw PhaseError("split share already measured");
  QubitId q;
  if (controller == share.ca) {
    q = share.qa;
  } else if (controller == share.cb) {
    q = share.qb;
  } else {
    throw PolicyError(controller.to_string() + " holds no half of record " + std::to_string(record_index));
  }
  const QubitId one[] = {q};
  return share.reg.reduced_density(one);
}

BellKind ProtocolRun::joint_identify(PartyId ca, PartyId cb, std::size_t record_index) {
  const auto it = split_.find(record_index);
  if (it == split_.end()) throw PhaseError("record " + std::to_string(record_index) + " is not a split share");
  SplitShare& share = it->second;
  const bool same = (ca == share.ca && cb == share.cb) || (ca == share.cb && cb == share.ca);
  if (!same) {
    throw PolicyError("(" + ca.to_string() + ", " + cb.to_string() + ") do not jointly hold record " +
                      std::to_string(record_index));
  }
  if (share.identified) throw PhaseError("split share already measured");
  for (PartyId c : {share.ca, share.cb}) {
    if (!policy_.released(c)) {
      throw RefusalError("controller " + c.to_string() + " refuses the joint measurement of record " +
                         std::to_string(record_index));
    }
  }
  const BellKind kind = share.reg.bell_measure(share.qa, share.qb, rng_);
  ++transcript_.controller_measurements;
  share.identified = true;
  return kind;
}

void ProtocolRun::set_release(PartyId controller, Release decision) {
  if (controller.role != Role::Controller || controller.index < 1 || controller.index > controllers_) {
    throw PolicyError("policy.release: " + controller.to_string() + " is not a controller");
  }
  policy_.release[controller] = decision;
}

void ProtocolRun::set_cooperation(PartyId player, bool cooperates) {
  if (player.role != Role::Player || player.index < 1 || player.index > players_) {
    throw PolicyError("policy.cooperating_players: " + player.to_string() + " is not a player");
  }
  if (cooperates) {
    policy_.cooperating_players.insert(player);
  } else {
    policy_.cooperating_players.erase(player);
  }
}

int ProtocolRun::measure_held_qubit(std::size_t slot, PauliOp correction, Basis basis) {
  if (slot == 0 || slot > slots_.size()) throw std::out_of_range("slot " + std::to_string(slot) + " out of range");
  Slot& s = slots_[slot - 1];
  if (!s.distributed) throw PhaseError("slot " + std::to_string(slot) + " not distributed yet");
  if (s.consumed) throw PhaseError("slot " + std::to_string(slot) + " already measured");
  reg_.apply_pauli(s.qubit, correction);
  const int bit = reg_.measure_single(s.qubit, basis, rng_);
  ++transcript_.player_measurements;
  s.consumed = true;
  return bit;
}

Probe ProtocolRun::teleport_probe(PartyId receiver, const StateVector& qubit_state) {
  if (receiver.role == Role::Dealer) throw PolicyError("probe receiver must be a player or controller");
  QuantumRegister reg;
  const QubitId q = reg.load_state(qubit_state).front();
  const auto [alpha, beta] = reg.alloc_bell_pair(BellKind::PhiMinus, PartyId::dealer(), receiver);
  const bool to_controller = receiver.role == Role::Controller;
  if (to_controller) {
    ++transcript_.epr_controller;
    ++controller_probes_;
  } else {
    ++transcript_.epr_player;
    ++player_probes_;
  }
  tap(reg, beta, receiver, to_controller ? LinkKind::Controller : LinkKind::Player);
  const BellKind outcome = reg.bell_measure(q, alpha, rng_);
  ++transcript_.dealer_measurements;
  ++transcript_.probes;
  return Probe{std::move(reg), beta, outcome};
}

std::optional<BellKind> ProtocolRun::released_record(std::size_t record_index) {
  const auto& holders = policy_.record_to_controller[record_index - 1];
  const PartyId player = policy_.qubit_to_player[record_index - 1];
  if (const auto it = classical_.find(record_index); it != classical_.end()) {
    if (!policy_.released(holders[0])) return std::nullopt;
    log({holders[0], player, "release", bits_payload(record_index, it->second.bits)});
    return decode_bits(it->second.bits);
  }
  if (!policy_.released(holders[0]) || !policy_.released(holders[1])) return std::nullopt;
  const BellKind kind = joint_identify(holders[0], holders[1], record_index);
  log({holders[0], player, "release", bits_payload(record_index, encode_bits(kind))});
  return kind;
}

ReconstructOutcome ProtocolRun::reconstruct() {
  if (!distribution_complete()) throw PhaseError("reconstruct called before distribution completed");
  if (!transport_complete()) throw PhaseError("reconstruct called before all Bell records reached controllers");
  if (reconstructed_) throw PhaseError("reconstruct already performed on this run");
  reconstructed_ = true;

  std::vector<std::optional<BellKind>> available(static_cast<std::size_t>(width_));
  std::size_t released = 0;
  for (std::size_t i = 1; i <= available.size(); ++i) {
    available[i - 1] = released_record(i);
    if (available[i - 1]) ++released;
  }

  std::vector<PartyId> eligible;
  for (PartyId p : policy_.cooperating_players) {
    const auto held = policy_.qubits_of(p);
    const bool covered =
        std::all_of(held.begin(), held.end(), [&](std::size_t i) { return available[i - 1].has_value(); });
    if (covered && !held.empty()) eligible.push_back(p);
  }
  if (eligible.size() < static_cast<std::size_t>(policy_.threshold_k)) {
    return Sealed{std::to_string(released) + " of " + std::to_string(width_) + " corrections released; " +
                  std::to_string(eligible.size()) + " cooperating player(s) fully covered, " +
                  std::to_string(policy_.threshold_k) + " required"};
  }

  Recovered out;
  out.players = eligible;
  for (PartyId p : eligible) {
    for (std::size_t i : policy_.qubits_of(p)) out.qubit_indices.push_back(i);
  }
  std::sort(out.qubit_indices.begin(), out.qubit_indices.end());
  std::vector<QubitId> ids;
  for (std::size_t i : out.qubit_indices) {
    Slot& s = slots_[slot_of_secret(i)];
    const PauliOp op = swap_correction(*available[i - 1]);
    reg_.apply_pauli(s.qubit, op);
    transcript_.corrections.push_back({i, s.holder, s.qubit, op});
    ids.push_back(s.qubit);
  }
  out.state = reg_.reduced_density(ids);
  out.pure = pure_part(out.state);
  return out;
}

DensityMatrix ProtocolRun::withheld_state(const std::set<std::size_t>& withheld) const {
  for (std::size_t i : withheld) {
    if (i == 0 || i > static_cast<std::size_t>(width_)) {
      throw std::out_of_range("withheld index " + std::to_string(i) + " out of range 1.." + std::to_string(width_));
    }
  }
  for (std::size_t i = 1; i <= static_cast<std::size_t>(width_); ++i) {
    if (!transcript_.bell_record[i - 1]) throw PhaseError("withheld_state needs a completed distribution");
  }
  const std::vector<std::size_t> hidden(withheld.begin(), withheld.end());
  const auto dim = static_cast<Eigen::Index>(std::size_t{1} << width_);
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dim, dim);
  double total = 0.0;

  const std::size_t branches = std::size_t{1} << (2 * hidden.size());
  for (std::size_t code = 0; code < branches; ++code) {
    std::map<std::size_t, BellKind> forced;
    for (std::size_t h = 0; h < hidden.size(); ++h) forced[hidden[h]] = static_cast<BellKind>((code >> (2 * h)) & 3U);

    QuantumRegister reg;
    const auto ids = reg.load_state(secret_);
    std::vector<QubitId> held;
    double weight = 1.0;
    for (std::size_t i = 1; i <= ids.size(); ++i) {
      const auto [mu, nu] = reg.alloc_bell_pair(BellKind::PhiMinus);
      const auto f = forced.find(i);
      const BellKind outcome = f != forced.end() ? f->second : *transcript_.bell_record[i - 1];
      const double p = reg.bell_project(ids[i - 1], mu, outcome);
      if (f != forced.end()) {
        weight *= p;
      } else {
        reg.apply_pauli(nu, swap_correction(outcome));
      }
      held.push_back(nu);
    }
    const StateVector branch = reg.state_in_order(held);
    rho += weight * (branch * branch.adjoint());
    total += weight;
  }
  return DensityMatrix(rho / total);
}

ResourceReport ProtocolRun::resource_report() const {
  if (!distribution_complete() || !transport_complete()) throw PhaseError("resource report needs a completed run");
  std::uint64_t classical = 0;
  std::uint64_t split = 0;
  for (const auto& holders : policy_.record_to_controller) (holders.size() == 1 ? classical : split)++;
  const auto n = static_cast<std::uint64_t>(width_);
  const auto m = static_cast<std::uint64_t>(decoys_);
  const std::uint64_t probes = player_probes_ + controller_probes_;

  ResourceReport r;
  r.epr_player = transcript_.epr_player;
  r.epr_controller = transcript_.epr_controller;
  r.dealer_measurements = transcript_.dealer_measurements;
  r.dealer_distribution_measurements = transcript_.dealer_distribution_measurements;
  r.controller_measurements = transcript_.controller_measurements;
  r.decoy_overhead = m + probes;

  r.expected_epr_player = n + m + player_probes_;
  r.expected_epr_controller = 2 * n + controller_probes_;
  r.expected_dealer_distribution_measurements = n + m;
  r.expected_dealer_measurements = n + m + classical + 2 * split + probes;
  r.consistent = r.epr_player == r.expected_epr_player && r.epr_controller == r.expected_epr_controller &&
                 r.dealer_measurements == r.expected_dealer_measurements &&
                 r.dealer_distribution_measurements == r.expected_dealer_distribution_measurements;
  return r;
}

}  // namespace cqss
