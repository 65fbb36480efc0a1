#include "cqss/party.hpp"

namespace cqss {

std::string PartyId::to_string() const {
  switch (role) {
    case Role::Dealer:
      return "dealer";
    case Role::Player:
      return "B" + std::to_string(index);
    case Role::Controller:
      return "C" + std::to_string(index);
  }
  return "?";
}

}  // namespace cqss
