#pragma once

// Controlled quantum secret sharing: the dealer swaps each qubit of an
// encoding state onto a player's half of a singlet link, and routes the
// resulting Bell record to controllers instead of the players. Players can
// only undo the swap (and so reconstruct) once the controllers release it.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "cqss/party.hpp"
#include "cqss/qcore.hpp"

namespace cqss {

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Arity or access-policy violation; the message names the offending field.
class PolicyError : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

/// Operation called in the wrong phase (double distribution, premature
/// reconstruction, exhausted links, ...).
class PhaseError : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

/// A controller declined to take part in a joint Bell measurement.
class RefusalError : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

struct TwoBits {
  int x = 0;
  int y = 0;
  auto operator<=>(const TwoBits&) const = default;
  TwoBits operator^(const TwoBits& o) const { return {x ^ o.x, y ^ o.y}; }
};

/// phi- -> 00, phi+ -> 01, varphi- -> 10, varphi+ -> 11.
TwoBits encode_bits(BellKind kind);
BellKind decode_bits(TwoBits bits);

enum class Release : std::uint8_t { Released, Withheld };
enum class ShareMode : std::uint8_t { Classical, Split };

std::string to_string(Release r);
std::string to_string(ShareMode m);

struct AccessPolicy {
  /// Entry i-1 is the player receiving qubit i.
  std::vector<PartyId> qubit_to_player;
  /// Entry i-1 holds the controller(s) receiving Bell record i: one holder
  /// for a classical share, an ordered pair for a split share.
  std::vector<std::vector<PartyId>> record_to_controller;
  int threshold_k = 1;
  /// Controllers missing from the map count as Released.
  std::map<PartyId, Release> release;
  std::set<PartyId> cooperating_players;

  ShareMode mode_of(std::size_t record_index) const;
  bool released(PartyId controller) const;
  std::vector<std::size_t> qubits_of(PartyId player) const;
  std::vector<std::size_t> records_of(PartyId controller) const;

  /// Throws PolicyError naming the offending field.
  void validate(int players, int controllers, int width) const;

  /// Qubit i -> player ((i-1) mod n) + 1. Classical records go round-robin
  /// to controllers; split records take consecutive controller pairs.
  /// Everyone releases and cooperates.
  static AccessPolicy round_robin(int width, int players, int controllers, ShareMode mode, int threshold_k);
};

struct Message {
  PartyId from;
  std::optional<PartyId> to;  // nullopt = public channel
  std::string topic;
  std::vector<int> payload;
};

struct AppliedCorrection {
  std::size_t secret_index = 0;
  PartyId player;
  QubitId qubit;
  PauliOp op = PauliOp::I;
};

struct Transcript {
  /// psi^1..psi^N, indexed by secret qubit.
  std::vector<std::optional<BellKind>> bell_record;
  /// Dealer's outcomes for decoy slots, indexed by decoy number.
  std::vector<std::optional<BellKind>> decoy_record;
  std::uint64_t epr_player = 0;
  std::uint64_t epr_controller = 0;
  std::uint64_t dealer_measurements = 0;
  std::uint64_t dealer_distribution_measurements = 0;
  std::uint64_t controller_measurements = 0;
  std::uint64_t player_measurements = 0;
  std::uint64_t probes = 0;
  std::vector<Message> messages;
  std::vector<AppliedCorrection> corrections;

  /// Canonical JSON text; identical runs produce identical bytes.
  std::string serialize() const;
};

struct ClassicalShare {
  TwoBits bits;
  std::size_t about_qubit = 0;
  std::vector<PartyId> holders;
};

/// Everything visible in one classical share transfer.
struct ClassicalExchange {
  TwoBits secret;
  TwoBits dealer_pad;
  TwoBits controller_pad;
  TwoBits announced;
  TwoBits decoded;
};

enum class LinkKind : std::uint8_t { Player, Controller };

/// The receiver's half of a fresh link, before the dealer's swap.
struct Channel {
  QuantumRegister& reg;
  QubitId in_flight;
  PartyId receiver;
  LinkKind kind;
};

using ChannelTap = std::function<void(Channel&)>;

struct Recovered {
  std::vector<PartyId> players;
  /// Secret qubit indices held by `players`, ascending.
  std::vector<std::size_t> qubit_indices;
  /// Corrected state of those qubits, in index order.
  DensityMatrix state;
  /// Set when `state` is pure; defined up to global phase.
  std::optional<StateVector> pure;
};

struct Sealed {
  std::string reason;
};

using ReconstructOutcome = std::variant<Recovered, Sealed>;

struct ResourceReport {
  std::uint64_t epr_player = 0;
  std::uint64_t epr_controller = 0;
  std::uint64_t dealer_measurements = 0;
  std::uint64_t dealer_distribution_measurements = 0;
  std::uint64_t controller_measurements = 0;
  std::uint64_t decoy_overhead = 0;

  std::uint64_t expected_epr_player = 0;
  std::uint64_t expected_epr_controller = 0;
  std::uint64_t expected_dealer_measurements = 0;
  std::uint64_t expected_dealer_distribution_measurements = 0;
  bool consistent = false;
};

/// A single-qubit probe teleported to a receiver outside the main register.
struct Probe {
  QuantumRegister reg;
  QubitId qubit;
  BellKind outcome;
};

class ProtocolRun {
 public:
  struct Slot {
    bool decoy = false;
    /// Secret index 1..N, or decoy number 1..M.
    std::size_t index = 0;
    PartyId holder;
    QubitId qubit;
    bool distributed = false;
    bool consumed = false;
    std::optional<BellKind> outcome;
  };

  /// Loads `secret` into a fresh register; links are allocated lazily.
  static ProtocolRun setup(int players, int controllers, int width, const StateVector& secret, AccessPolicy policy,
                           RandomSource rng);

  int players() const { return players_; }
  int controllers() const { return controllers_; }
  int width() const { return width_; }
  const AccessPolicy& policy() const { return policy_; }
  const Transcript& transcript() const { return transcript_; }
  const StateVector& secret() const { return secret_; }
  const QuantumRegister& quantum_register() const { return reg_; }
  const std::vector<Slot>& slots() const { return slots_; }
  const std::map<std::size_t, ClassicalShare>& classical_shares() const { return classical_; }
  RandomSource& rng() { return rng_; }

  /// Controller links reserved by the policy: two per classical share, one
  /// per controller per split share.
  std::uint64_t planned_controller_links() const;

  void set_channel_tap(ChannelTap tap) { tap_ = std::move(tap); }

  /// Replaces the register content with `extended`, a product of the secret
  /// and decoy qubits sitting at the 0-based `decoy_slots`. Decoy j goes to
  /// player ((j-1) mod n) + 1. Must precede any distribution.
  void embed_decoys(std::span<const std::size_t> decoy_slots, const StateVector& extended);

  BellKind distribute_qubit(std::size_t secret_index);
  /// 1-based slot over the N+M distributed qubits.
  BellKind distribute_slot(std::size_t slot);
  /// Ascending slot order.
  void distribute_all();
  bool distribution_complete() const;

  ClassicalExchange send_bits_classical(PartyId controller, std::size_t record_index);
  void split_bell_between_controllers(PartyId ca, PartyId cb, std::size_t record_index);
  /// Ships every Bell record per the policy, ascending record order.
  void transport_all();
  bool transport_complete() const;

  /// Reduced state of one controller's half of a split share.
  DensityMatrix controller_view(PartyId controller, std::size_t record_index) const;
  BellKind joint_identify(PartyId ca, PartyId cb, std::size_t record_index);

  void set_release(PartyId controller, Release decision);
  void set_cooperation(PartyId player, bool cooperates);

  /// The holder applies `correction` to its slot qubit and measures it.
  int measure_held_qubit(std::size_t slot, PauliOp correction, Basis basis);
  Probe teleport_probe(PartyId receiver, const StateVector& qubit_state);
  void count_controller_measurement() { ++transcript_.controller_measurements; }
  void log(Message message) { transcript_.messages.push_back(std::move(message)); }

  ReconstructOutcome reconstruct();

  /// Players' state when the records of `withheld` (1-based secret indices)
  /// stay hidden, by exact enumeration of the hidden swap branches.
  DensityMatrix withheld_state(const std::set<std::size_t>& withheld) const;

  ResourceReport resource_report() const;

 private:
  struct SplitShare {
    PartyId ca;
    PartyId cb;
    QuantumRegister reg;
    QubitId qa;
    QubitId qb;
    bool identified = false;
  };

  ProtocolRun() = default;

  std::size_t slot_of_secret(std::size_t secret_index) const;
  void require_record(std::size_t record_index) const;
  void consume_controller_link(PartyId controller);
  void tap(QuantumRegister& reg, QubitId in_flight, PartyId receiver, LinkKind kind);
  std::optional<BellKind> released_record(std::size_t record_index);

  int players_ = 0;
  int controllers_ = 0;
  int width_ = 0;
  StateVector secret_;
  AccessPolicy policy_;
  RandomSource rng_{0};
  QuantumRegister reg_;
  std::vector<Slot> slots_;
  std::size_t decoys_ = 0;
  std::map<PartyId, std::uint64_t> controller_links_left_;
  std::map<std::size_t, ClassicalShare> classical_;
  std::map<std::size_t, SplitShare> split_;
  std::uint64_t player_probes_ = 0;
  std::uint64_t controller_probes_ = 0;
  ChannelTap tap_;
  Transcript transcript_;
  bool reconstructed_ = false;
};

}  // namespace cqss
