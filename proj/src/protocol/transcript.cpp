#include <json.hpp>

#include "cqss/protocol.hpp"

namespace cqss {

std::string Transcript::serialize() const {
  using json = nlohmann::ordered_json;
  json out;
  auto record = json::array();
  for (const auto& k : bell_record) record.push_back(k ? json(to_string(*k)) : json(nullptr));
  out["bell_record"] = record;
  auto decoys = json::array();
  for (const auto& k : decoy_record) decoys.push_back(k ? json(to_string(*k)) : json(nullptr));
  out["decoy_record"] = decoys;
  out["epr_player"] = epr_player;
  out["epr_controller"] = epr_controller;
  out["dealer_measurements"] = dealer_measurements;
  out["dealer_distribution_measurements"] = dealer_distribution_measurements;
  out["controller_measurements"] = controller_measurements;
  out["player_measurements"] = player_measurements;
  out["probes"] = probes;
  auto msgs = json::array();
  for (const Message& m : messages) {
    msgs.push_back({{"from", m.from.to_string()},
                    {"to", m.to ? json(m.to->to_string()) : json("public")},
                    {"topic", m.topic},
                    {"payload", m.payload}});
  }
  out["messages"] = msgs;
  auto corr = json::array();
  for (const AppliedCorrection& c : corrections) {
    corr.push_back({{"qubit", c.secret_index}, {"player", c.player.to_string()}, {"op", to_string(c.op)}});
  }
  out["corrections"] = corr;
  return out.dump();
}

}  // namespace cqss
