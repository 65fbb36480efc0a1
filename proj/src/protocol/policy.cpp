#include <algorithm>

#include "cqss/protocol.hpp"

namespace cqss {

namespace {

std::string field(const std::string& name, std::size_t index) {
  return "policy." + name + "[" + std::to_string(index) + "]";
}

}  // namespace

ShareMode AccessPolicy::mode_of(std::size_t record_index) const {
  if (record_index == 0 || record_index > record_to_controller.size()) {
    throw std::out_of_range("record index " + std::to_string(record_index) + " out of range");
  }
  return record_to_controller[record_index - 1].size() == 2 ? ShareMode::Split : ShareMode::Classical;
}

bool AccessPolicy::released(PartyId controller) const {
  const auto it = release.find(controller);
  return it == release.end() || it->second == Release::Released;
}

std::vector<std::size_t> AccessPolicy::qubits_of(PartyId player) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < qubit_to_player.size(); ++i) {
    if (qubit_to_player[i] == player) out.push_back(i + 1);
  }
  return out;
}

std::vector<std::size_t> AccessPolicy::records_of(PartyId controller) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < record_to_controller.size(); ++i) {
    const auto& h = record_to_controller[i];
    if (std::find(h.begin(), h.end(), controller) != h.end()) out.push_back(i + 1);
  }
  return out;
}

void AccessPolicy::validate(int players, int controllers, int width) const {
  if (width < 1) throw PolicyError("N: secret width must be at least 1");
  if (players < 1) throw PolicyError("n: at least one player is required");
  if (controllers < 1) throw PolicyError("m: at least one controller is required");
  if (players > width) {
    throw PolicyError("n: " + std::to_string(players) + " players exceed secret width N=" + std::to_string(width));
  }
  if (controllers > 2 * width) {
    throw PolicyError("m: " + std::to_string(controllers) + " controllers exceed 2N=" + std::to_string(2 * width));
  }
  const auto n = static_cast<std::size_t>(width);
  if (qubit_to_player.size() != n) {
    throw PolicyError("policy.qubit_to_player: expected " + std::to_string(n) + " entries, got " +
                      std::to_string(qubit_to_player.size()));
  }
  if (record_to_controller.size() != n) {
    throw PolicyError("policy.record_to_controller: expected " + std::to_string(n) + " entries, got " +
                      std::to_string(record_to_controller.size()));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const PartyId p = qubit_to_player[i];
    if (p.role != Role::Player || p.index < 1 || p.index > players) {
      throw PolicyError(field("qubit_to_player", i + 1) + ": " + p.to_string() + " is not a player in 1.." +
                        std::to_string(players));
    }
  }
  for (int j = 1; j <= players; ++j) {
    if (qubits_of(PartyId::player(static_cast<std::uint16_t>(j))).empty()) {
      throw PolicyError("policy.qubit_to_player: player B" + std::to_string(j) + " receives no qubit");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& holders = record_to_controller[i];
    if (holders.size() != 1 && holders.size() != 2) {
      throw PolicyError(field("record_to_controller", i + 1) + ": expected 1 (classical) or 2 (split) holders");
    }
    for (PartyId c : holders) {
      if (c.role != Role::Controller || c.index < 1 || c.index > controllers) {
        throw PolicyError(field("record_to_controller", i + 1) + ": " + c.to_string() +
                          " is not a controller in 1.." + std::to_string(controllers));
      }
    }
    if (holders.size() == 2 && holders[0] == holders[1]) {
      throw PolicyError(field("record_to_controller", i + 1) + ": split share needs two distinct controllers");
    }
  }
  for (int j = 1; j <= controllers; ++j) {
    if (records_of(PartyId::controller(static_cast<std::uint16_t>(j))).empty()) {
      throw PolicyError("policy.record_to_controller: controller C" + std::to_string(j) + " holds no share");
    }
  }
  if (threshold_k < 1 || threshold_k > players) {
    throw PolicyError("policy.threshold_k: " + std::to_string(threshold_k) + " not in 1.." + std::to_string(players));
  }
  for (const auto& [c, decision] : release) {
    if (c.role != Role::Controller || c.index < 1 || c.index > controllers) {
      throw PolicyError("policy.release: " + c.to_string() + " is not a controller");
    }
  }
  for (PartyId p : cooperating_players) {
    if (p.role != Role::Player || p.index < 1 || p.index > players) {
      throw PolicyError("policy.cooperating_players: " + p.to_string() + " is not a player");
    }
  }
}

AccessPolicy AccessPolicy::round_robin(int width, int players, int controllers, ShareMode mode, int threshold_k) {
  AccessPolicy policy;
  policy.threshold_k = threshold_k;
  for (int i = 0; i < width; ++i) {
    policy.qubit_to_player.push_back(PartyId::player(static_cast<std::uint16_t>(i % players + 1)));
    if (mode == ShareMode::Classical) {
      policy.record_to_controller.push_back({PartyId::controller(static_cast<std::uint16_t>(i % controllers + 1))});
    } else {
      policy.record_to_controller.push_back(
          {PartyId::controller(static_cast<std::uint16_t>((2 * i) % controllers + 1)),
           PartyId::controller(static_cast<std::uint16_t>((2 * i + 1) % controllers + 1))});
    }
  }
  for (int j = 1; j <= controllers; ++j) {
    policy.release[PartyId::controller(static_cast<std::uint16_t>(j))] = Release::Released;
  }
  for (int j = 1; j <= players; ++j) policy.cooperating_players.insert(PartyId::player(static_cast<std::uint16_t>(j)));
  return policy;
}

}  // namespace cqss
