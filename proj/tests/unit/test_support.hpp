#pragma once

#include <algorithm>
#include <numeric>
#include <random>

#include "cqss/protocol.hpp"
#include "oracles.hpp"

namespace cqss::testing {

/// Random well-formed policy for a width-N secret: every player holds at
/// least one qubit, records are classical or split at random, and the
/// controllers actually used are relabeled 1..m.
struct RandomLayout {
  int players = 0;
  int controllers = 0;
  AccessPolicy policy;
};

inline RandomLayout random_layout(int width, std::mt19937_64& gen) {
  RandomLayout out;
  out.players = std::uniform_int_distribution<int>(1, width)(gen);
  std::vector<int> owner(static_cast<std::size_t>(width));
  std::iota(owner.begin(), owner.begin() + out.players, 1);
  for (int i = out.players; i < width; ++i) owner[static_cast<std::size_t>(i)] = std::uniform_int_distribution<int>(1, out.players)(gen);
  std::shuffle(owner.begin(), owner.end(), gen);
  for (int p : owner) out.policy.qubit_to_player.push_back(PartyId::player(static_cast<std::uint16_t>(p)));

  std::uniform_int_distribution<int> pick(1, 2 * width);
  std::vector<std::vector<int>> raw;
  for (int i = 0; i < width; ++i) {
    const int a = pick(gen);
    if (std::bernoulli_distribution(0.5)(gen)) {
      int b = pick(gen);
      while (b == a) b = pick(gen);
      raw.push_back({a, b});
    } else {
      raw.push_back({a});
    }
  }
  std::vector<int> used;
  for (const auto& h : raw) used.insert(used.end(), h.begin(), h.end());
  std::sort(used.begin(), used.end());
  used.erase(std::unique(used.begin(), used.end()), used.end());
  out.controllers = static_cast<int>(used.size());
  for (const auto& h : raw) {
    std::vector<PartyId> holders;
    for (int c : h) {
      const auto label = std::lower_bound(used.begin(), used.end(), c) - used.begin() + 1;
      holders.push_back(PartyId::controller(static_cast<std::uint16_t>(label)));
    }
    out.policy.record_to_controller.push_back(holders);
  }
  out.policy.threshold_k = std::uniform_int_distribution<int>(1, out.players)(gen);
  for (int j = 1; j <= out.players; ++j) out.policy.cooperating_players.insert(PartyId::player(static_cast<std::uint16_t>(j)));
  return out;
}

}  // namespace cqss::testing
