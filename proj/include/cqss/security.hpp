#pragma once

// Decoy qubits hidden among the distributed shares, an intercept-resend
// eavesdropper, and the sealed-state audit.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "cqss/protocol.hpp"

namespace cqss {

enum class DecoyState : std::uint8_t { Zero, One, PlusX, MinusX };

std::string to_string(DecoyState s);
StateVector decoy_vector(DecoyState s);
Basis decoy_basis(DecoyState s);
/// Outcome a faithful measurement in decoy_basis(s) must give.
int decoy_expected_bit(DecoyState s);

struct DecoyPlan {
  /// 0-based slots among the N+M distributed qubits, ascending. Decoy j
  /// sits at placements[j-1].
  std::vector<std::size_t> placements;
  /// The dealer's private record.
  std::vector<DecoyState> states;

  std::size_t count() const { return states.size(); }

  /// M slots drawn uniformly without replacement, states uniform.
  static DecoyPlan sample(std::size_t width, std::size_t decoys, RandomSource& rng);
  /// Throws PolicyError when malformed for a width-N secret.
  void validate(std::size_t width) const;
};

/// Secret tensored with the decoys, qubits permuted into the planned slots.
StateVector insert_decoys(const StateVector& secret, const DecoyPlan& plan);
/// Loads the extended state into a fresh run (before distribution).
void apply_decoy_plan(ProtocolRun& run, const DecoyPlan& plan);

struct EveModel {
  enum class Strategy : std::uint8_t { None, InterceptResendRandomBasis };
  Strategy strategy = Strategy::None;
  double intercept_probability = 0.0;
  bool on_player_links = true;
  bool on_controller_links = false;

  void validate() const;
  bool active() const { return strategy != Strategy::None && intercept_probability > 0.0; }
};

std::string to_string(EveModel::Strategy s);

struct EveLog {
  std::uint64_t seen = 0;
  std::uint64_t intercepted = 0;
};

/// With the model's probability, measure the in-flight qubit in a random
/// basis and leave it collapsed. Returns true on interception.
bool eve_tap(Channel& channel, const EveModel& model, RandomSource& rng);

/// Hooks Eve onto every link the run opens from now on. `rng` should be a
/// stream of its own so Eve's presence leaves the protocol's draws intact.
std::shared_ptr<EveLog> install_eve(ProtocolRun& run, const EveModel& model, RandomSource rng);

enum class Verdict : std::uint8_t { Clean, EveDetected };
std::string to_string(Verdict v);

struct DetectionReport {
  std::uint64_t decoys_checked = 0;
  std::uint64_t mismatches = 0;

  Verdict verdict() const { return mismatches > 0 ? Verdict::EveDetected : Verdict::Clean; }
  DetectionReport& operator+=(const DetectionReport& o) {
    decoys_checked += o.decoys_checked;
    mismatches += o.mismatches;
    return *this;
  }
};

/// The dealer announces slot, Bell record and basis of each decoy; the holder
/// corrects, measures and reports back. Needs a completed distribution.
DetectionReport verify_decoys(ProtocolRun& run, const DecoyPlan& plan);

/// Teleports `probes` random decoy states to controllers (round-robin) and
/// has each one measured; the same test on the dealer-controller links.
DetectionReport check_controller_links(ProtocolRun& run, std::size_t probes, RandomSource& rng);

struct NoInfoAudit {
  std::set<std::size_t> withheld;
  double trace_distance = 0.0;
  bool passed = false;
};

inline constexpr double kNoInfoTolerance = 1e-10;

/// Players' state with `withheld` records hidden (1-based) against the
/// uniform Pauli-twirl prediction on those qubits.
NoInfoAudit no_information_audit(const ProtocolRun& run, const std::set<std::size_t>& withheld);

}  // namespace cqss
