#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace cqss {

enum class Role : std::uint8_t { Dealer, Player, Controller };

/// A protocol participant. Players are numbered 1..n, controllers 1..m; the
/// dealer always has index 0.
struct PartyId {
  Role role = Role::Dealer;
  std::uint16_t index = 0;

  static constexpr PartyId dealer() { return {Role::Dealer, 0}; }
  static constexpr PartyId player(std::uint16_t i) { return {Role::Player, i}; }
  static constexpr PartyId controller(std::uint16_t i) { return {Role::Controller, i}; }

  auto operator<=>(const PartyId&) const = default;

  /// "dealer", "B3", "C1".
  std::string to_string() const;
};

}  // namespace cqss
