#include <algorithm>
#include <numeric>

#include "cqss/harness.hpp"

namespace cqss {

namespace {

constexpr int kExhaustiveUpTo = 5;
constexpr std::uint64_t kSamplesPerCount = 256;

void require_one_share_per_controller(const ScenarioConfig& cfg) {
  if (cfg.width != cfg.players || cfg.width != cfg.controllers) {
    throw ConfigError("mstar: needs n = m = N, got N=" + std::to_string(cfg.width) + ", n=" +
                      std::to_string(cfg.players) + ", m=" + std::to_string(cfg.controllers));
  }
  for (int c = 1; c <= cfg.controllers; ++c) {
    const auto records = cfg.policy.records_of(PartyId::controller(static_cast<std::uint16_t>(c)));
    if (records.size() != 1 || cfg.policy.mode_of(records.front()) != ShareMode::Classical) {
      throw ConfigError("policy.record_to_controller: mstar needs every controller to hold exactly one classical "
                        "share; C" + std::to_string(c) + " does not");
    }
  }
}

/// Every r-subset of 1..m in lexicographic order.
std::vector<std::vector<int>> all_subsets(int m, int r) {
  std::vector<std::vector<int>> out;
  std::vector<bool> pick(static_cast<std::size_t>(m), false);
  std::fill(pick.begin(), pick.begin() + r, true);
  do {
    std::vector<int> s;
    for (int i = 0; i < m; ++i) {
      if (pick[static_cast<std::size_t>(i)]) s.push_back(i + 1);
    }
    out.push_back(std::move(s));
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return out;
}

std::vector<std::vector<int>> sampled_subsets(int m, int r, RandomSource& rng) {
  std::vector<std::vector<int>> out;
  std::vector<int> all(static_cast<std::size_t>(m));
  std::iota(all.begin(), all.end(), 1);
  for (std::uint64_t s = 0; s < kSamplesPerCount; ++s) {
    for (int j = 0; j < r; ++j) {
      const auto pick = static_cast<std::size_t>(j) + static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(m - j)));
      std::swap(all[static_cast<std::size_t>(j)], all[pick]);
    }
    std::vector<int> subset(all.begin(), all.begin() + r);
    std::sort(subset.begin(), subset.end());
    out.push_back(std::move(subset));
  }
  return out;
}

}  // namespace

MstarTable mstar_sweep(const ScenarioConfig& cfg) {
  cfg.validate();
  require_one_share_per_controller(cfg);
  MstarTable table;
  table.threshold_k = cfg.policy.threshold_k;
  table.exhaustive = cfg.controllers <= kExhaustiveUpTo;
  const StateVector psi = cfg.secret_for(0);

  std::uint64_t run_index = 0;
  for (int r = 0; r <= cfg.controllers; ++r) {
    RandomSource pick_rng(mix_seed(cfg.master_seed, static_cast<std::uint64_t>(r)));
    const auto subsets = table.exhaustive ? all_subsets(cfg.controllers, r) : sampled_subsets(cfg.controllers, r, pick_rng);
    MstarRow row;
    row.released = static_cast<std::size_t>(r);
    for (const auto& subset : subsets) {
      AccessPolicy policy = cfg.policy;
      for (int c = 1; c <= cfg.controllers; ++c) policy.release[PartyId::controller(static_cast<std::uint16_t>(c))] = Release::Withheld;
      for (int c : subset) policy.release[PartyId::controller(static_cast<std::uint16_t>(c))] = Release::Released;
      ProtocolRun run = ProtocolRun::setup(cfg.players, cfg.controllers, cfg.width, psi, policy,
                                           RandomSource::for_trial(cfg.master_seed, run_index++));
      run.distribute_all();
      run.transport_all();
      ++row.subsets;
      if (std::holds_alternative<Recovered>(run.reconstruct())) ++row.recovered;
    }
    if (row.recovered > 0 && !table.mstar) table.mstar = row.released;
    table.rows.push_back(row);
  }
  return table;
}

Json mstar_to_json(const MstarTable& table) {
  Json rows = Json::array();
  for (const MstarRow& r : table.rows) {
    rows.push_back({{"released", r.released}, {"subsets", r.subsets}, {"recovered", r.recovered}});
  }
  Json j;
  j["threshold_k"] = table.threshold_k;
  j["mstar"] = table.mstar ? Json(*table.mstar) : Json(nullptr);
  j["exhaustive"] = table.exhaustive;
  j["rows"] = rows;
  j["mstar_equals_k"] = table.mstar.has_value() && *table.mstar == static_cast<std::size_t>(table.threshold_k);
  return j;
}

}  // namespace cqss
