#include <algorithm>
#include <cmath>

#include "cqss/security.hpp"

namespace cqss {

std::string to_string(DecoyState s) {
  switch (s) {
    case DecoyState::Zero: return "0";
    case DecoyState::One: return "1";
    case DecoyState::PlusX: return "+x";
    case DecoyState::MinusX: return "-x";
  }
  return "?";
}

StateVector decoy_vector(DecoyState s) {
  const double h = 1.0 / std::sqrt(2.0);
  StateVector v(2);
  switch (s) {
    case DecoyState::Zero: v << 1.0, 0.0; break;
    case DecoyState::One: v << 0.0, 1.0; break;
    case DecoyState::PlusX: v << h, h; break;
    case DecoyState::MinusX: v << h, -h; break;
  }
  return v;
}

Basis decoy_basis(DecoyState s) {
  return (s == DecoyState::Zero || s == DecoyState::One) ? Basis::Z : Basis::X;
}

int decoy_expected_bit(DecoyState s) { return (s == DecoyState::One || s == DecoyState::MinusX) ? 1 : 0; }

DecoyPlan DecoyPlan::sample(std::size_t width, std::size_t decoys, RandomSource& rng) {
  // partial Fisher-Yates over the N+M slots
  std::vector<std::size_t> slots(width + decoys);
  for (std::size_t i = 0; i < slots.size(); ++i) slots[i] = i;
  DecoyPlan plan;
  for (std::size_t j = 0; j < decoys; ++j) {
    const std::size_t pick = j + static_cast<std::size_t>(rng.below(slots.size() - j));
    std::swap(slots[j], slots[pick]);
    plan.placements.push_back(slots[j]);
  }
  std::sort(plan.placements.begin(), plan.placements.end());
  for (std::size_t j = 0; j < decoys; ++j) plan.states.push_back(static_cast<DecoyState>(rng.below(4)));
  return plan;
}

void DecoyPlan::validate(std::size_t width) const {
  if (placements.size() != states.size()) {
    throw PolicyError("decoys: " + std::to_string(placements.size()) + " placements for " +
                      std::to_string(states.size()) + " states");
  }
  const std::size_t total = width + states.size();
  for (std::size_t j = 0; j < placements.size(); ++j) {
    if (placements[j] >= total) {
      throw PolicyError("decoys.placements[" + std::to_string(j + 1) + "]: slot " + std::to_string(placements[j]) +
                        " beyond N+M=" + std::to_string(total));
    }
    if (j > 0 && placements[j] <= placements[j - 1]) {
      throw PolicyError("decoys.placements: must be strictly ascending");
    }
  }
}

StateVector insert_decoys(const StateVector& secret, const DecoyPlan& plan) {
  const std::size_t width = qubit_count_for(static_cast<std::size_t>(secret.size()));
  plan.validate(width);
  const std::size_t total = width + plan.count();
  if (total > QuantumRegister::kMaxQubits) {
    throw ResourceError("decoys: " + std::to_string(total) + " qubits exceed the register cap");
  }
  std::vector<int> decoy_at(total, -1);
  for (std::size_t j = 0; j < plan.count(); ++j) decoy_at[plan.placements[j]] = static_cast<int>(j);
  std::vector<StateVector> thetas;
  for (DecoyState s : plan.states) thetas.push_back(decoy_vector(s));

  StateVector out(Eigen::Index{1} << total);
  for (std::size_t i = 0; i < static_cast<std::size_t>(out.size()); ++i) {
    std::size_t secret_bits = 0;
    Complex amp = 1.0;
    for (std::size_t p = 0; p < total; ++p) {
      const std::size_t bit = (i >> (total - 1 - p)) & 1U;
      if (decoy_at[p] < 0) {
        secret_bits = (secret_bits << 1) | bit;
      } else {
        amp *= thetas[static_cast<std::size_t>(decoy_at[p])](static_cast<Eigen::Index>(bit));
      }
    }
    out(static_cast<Eigen::Index>(i)) = amp * secret(static_cast<Eigen::Index>(secret_bits));
  }
  return out;
}

void apply_decoy_plan(ProtocolRun& run, const DecoyPlan& plan) {
  if (plan.count() == 0) return;
  run.embed_decoys(plan.placements, insert_decoys(run.secret(), plan));
}

DetectionReport verify_decoys(ProtocolRun& run, const DecoyPlan& plan) {
  if (!run.distribution_complete()) throw PhaseError("decoys can only be checked after distribution");
  const auto& record = run.transcript().decoy_record;
  if (record.size() != plan.count()) throw PolicyError("decoys: plan does not match the run");
  DetectionReport report;
  for (std::size_t j = 0; j < plan.count(); ++j) {
    const std::size_t slot = plan.placements[j] + 1;
    const ProtocolRun::Slot& s = run.slots()[slot - 1];
    if (!s.decoy || s.index != j + 1) throw PolicyError("decoys: plan does not match the run");
    const PartyId holder = s.holder;
    const BellKind outcome = *record[j];
    const DecoyState state = plan.states[j];
    const TwoBits bits = encode_bits(outcome);
    run.log({PartyId::dealer(), std::nullopt, "decoy",
             {static_cast<int>(slot), bits.x, bits.y, static_cast<int>(decoy_basis(state))}});
    const int bit = run.measure_held_qubit(slot, swap_correction(outcome), decoy_basis(state));
    run.log({holder, PartyId::dealer(), "decoy-report", {static_cast<int>(slot), bit}});
    ++report.decoys_checked;
    if (bit != decoy_expected_bit(state)) ++report.mismatches;
  }
  return report;
}

DetectionReport check_controller_links(ProtocolRun& run, std::size_t probes, RandomSource& rng) {
  DetectionReport report;
  for (std::size_t i = 0; i < probes; ++i) {
    const auto c = PartyId::controller(static_cast<std::uint16_t>(i % static_cast<std::size_t>(run.controllers()) + 1));
    const auto state = static_cast<DecoyState>(rng.below(4));
    Probe probe = run.teleport_probe(c, decoy_vector(state));
    const TwoBits bits = encode_bits(probe.outcome);
    run.log({PartyId::dealer(), std::nullopt, "probe",
             {static_cast<int>(i + 1), bits.x, bits.y, static_cast<int>(decoy_basis(state))}});
    probe.reg.apply_pauli(probe.qubit, swap_correction(probe.outcome));
    const int bit = probe.reg.measure_single(probe.qubit, decoy_basis(state), run.rng());
    run.count_controller_measurement();
    run.log({c, PartyId::dealer(), "probe-report", {static_cast<int>(i + 1), bit}});
    ++report.decoys_checked;
    if (bit != decoy_expected_bit(state)) ++report.mismatches;
  }
  return report;
}

}  // namespace cqss
