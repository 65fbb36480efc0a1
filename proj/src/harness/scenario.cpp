#include <cmath>
#include <fstream>
#include <set>

#include "cqss/harness.hpp"

namespace cqss {

namespace {

const std::set<std::string> kTopLevel = {"schema", "name",   "N",     "n",           "m",      "mode",
                                         "mixed",  "policy", "decoys", "controller_decoys", "eve", "secret",
                                         "trials", "master_seed", "expect"};

[[noreturn]] void fail(const std::string& field, const std::string& what) { throw ConfigError(field + ": " + what); }

void reject_unknown(const Json& obj, const std::set<std::string>& known, const std::string& path) {
  for (const auto& [key, value] : obj.items()) {
    if (known.count(key) == 0) fail(path.empty() ? key : path + "." + key, "unknown field");
  }
}

const Json& require(const Json& obj, const std::string& key, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) fail(path, "missing");
  return *it;
}

std::int64_t as_int(const Json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  return v.get<std::int64_t>();
}

std::uint64_t as_u64(const Json& v, const std::string& path) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    fail(path, "expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

double as_double(const Json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

bool as_bool(const Json& v, const std::string& path) {
  if (!v.is_boolean()) fail(path, "expected true or false");
  return v.get<bool>();
}

std::string as_string(const Json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

int small_int(const Json& v, const std::string& path) {
  const std::int64_t x = as_int(v, path);
  if (x < 0 || x > 1000) fail(path, std::to_string(x) + " out of range");
  return static_cast<int>(x);
}

Complex as_complex(const Json& v, const std::string& path) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    return {v[0].get<double>(), v[1].get<double>()};
  }
  fail(path, "expected a number or [re, im]");
}

Json complex_json(Complex c) {
  if (c.imag() == 0.0) return c.real();
  return Json::array({c.real(), c.imag()});
}

ShareMode share_mode(const std::string& s, const std::string& path) {
  if (s == "classical") return ShareMode::Classical;
  if (s == "split") return ShareMode::Split;
  fail(path, "expected \"classical\" or \"split\", got \"" + s + "\"");
}

PartyId controller_ref(const std::string& s, const std::string& path) {
  if (s.size() < 2 || s[0] != 'C') fail(path, "expected a controller name like \"C1\", got \"" + s + "\"");
  try {
    std::size_t used = 0;
    const int idx = std::stoi(s.substr(1), &used);
    if (used != s.size() - 1 || idx < 1 || idx > 65535) throw std::invalid_argument(s);
    return PartyId::controller(static_cast<std::uint16_t>(idx));
  } catch (const std::logic_error&) {
    fail(path, "expected a controller name like \"C1\", got \"" + s + "\"");
  }
}

std::uint16_t party_index(const Json& v, const std::string& path) {
  const std::int64_t x = as_int(v, path);
  if (x < 1 || x > 65535) fail(path, std::to_string(x) + " is not a valid party index");
  return static_cast<std::uint16_t>(x);
}

std::string mode_name(ScenarioMode m) {
  switch (m) {
    case ScenarioMode::Classical: return "classical";
    case ScenarioMode::Split: return "split";
    case ScenarioMode::Mixed: return "mixed";
  }
  return "?";
}

/// Holders when the scenario does not list them: holder slots are dealt to
/// C1..Cm in turn, one per classical record and two per split record.
std::vector<PartyId> next_holders(std::size_t& cursor, ShareMode mode, int controllers) {
  const auto m = static_cast<std::size_t>(controllers);
  std::vector<PartyId> out;
  const int slots = mode == ShareMode::Classical ? 1 : 2;
  for (int s = 0; s < slots; ++s) out.push_back(PartyId::controller(static_cast<std::uint16_t>(cursor++ % m + 1)));
  return out;
}

ShareMode mode_for_record(const ScenarioConfig& cfg, std::size_t i) {
  if (cfg.mode == ScenarioMode::Classical) return ShareMode::Classical;
  if (cfg.mode == ScenarioMode::Split) return ShareMode::Split;
  const auto it = cfg.mixed.find(i);
  return it == cfg.mixed.end() ? ShareMode::Classical : it->second;
}

void parse_policy(const Json& doc, ScenarioConfig& cfg) {
  const Json empty = Json::object();
  const Json& p = doc.contains("policy") ? doc["policy"] : empty;
  if (!p.is_object()) fail("policy", "expected an object");
  reject_unknown(p, {"threshold_k", "qubit_to_player", "record_to_controller", "release", "cooperating_players"},
                 "policy");
  const auto n = static_cast<std::size_t>(cfg.width);
  AccessPolicy& pol = cfg.policy;
  pol.threshold_k = p.contains("threshold_k") ? small_int(p["threshold_k"], "policy.threshold_k") : cfg.players;

  if (p.contains("qubit_to_player")) {
    const Json& q = p["qubit_to_player"];
    if (!q.is_array()) fail("policy.qubit_to_player", "expected an array");
    for (std::size_t i = 0; i < q.size(); ++i) {
      pol.qubit_to_player.push_back(
          PartyId::player(party_index(q[i], "policy.qubit_to_player[" + std::to_string(i + 1) + "]")));
    }
  } else if (cfg.players > 0) {
    for (std::size_t i = 0; i < n; ++i) {
      pol.qubit_to_player.push_back(PartyId::player(static_cast<std::uint16_t>(i % static_cast<std::size_t>(cfg.players) + 1)));
    }
  }

  if (p.contains("record_to_controller")) {
    const Json& r = p["record_to_controller"];
    if (!r.is_array()) fail("policy.record_to_controller", "expected an array");
    for (std::size_t i = 0; i < r.size(); ++i) {
      const std::string path = "policy.record_to_controller[" + std::to_string(i + 1) + "]";
      std::vector<PartyId> holders;
      if (r[i].is_array()) {
        for (std::size_t h = 0; h < r[i].size(); ++h) holders.push_back(PartyId::controller(party_index(r[i][h], path)));
      } else {
        holders.push_back(PartyId::controller(party_index(r[i], path)));
      }
      pol.record_to_controller.push_back(std::move(holders));
    }
  } else if (cfg.controllers > 0) {
    std::size_t cursor = 0;
    for (std::size_t i = 1; i <= n; ++i) {
      pol.record_to_controller.push_back(next_holders(cursor, mode_for_record(cfg, i), cfg.controllers));
    }
  }

  for (int j = 1; j <= cfg.controllers; ++j) pol.release[PartyId::controller(static_cast<std::uint16_t>(j))] = Release::Released;
  if (p.contains("release")) {
    const Json& rel = p["release"];
    if (!rel.is_object()) fail("policy.release", "expected an object like {\"C1\": \"withheld\"}");
    for (const auto& [key, value] : rel.items()) {
      const std::string path = "policy.release." + key;
      const PartyId c = controller_ref(key, path);
      const std::string v = as_string(value, path);
      if (v == "released") {
        pol.release[c] = Release::Released;
      } else if (v == "withheld") {
        pol.release[c] = Release::Withheld;
      } else {
        fail(path, "expected \"released\" or \"withheld\"");
      }
    }
  }

  if (p.contains("cooperating_players")) {
    const Json& c = p["cooperating_players"];
    if (!c.is_array()) fail("policy.cooperating_players", "expected an array");
    for (std::size_t i = 0; i < c.size(); ++i) {
      pol.cooperating_players.insert(
          PartyId::player(party_index(c[i], "policy.cooperating_players[" + std::to_string(i + 1) + "]")));
    }
  } else {
    for (int j = 1; j <= cfg.players; ++j) pol.cooperating_players.insert(PartyId::player(static_cast<std::uint16_t>(j)));
  }
}

void parse_eve(const Json& e, EveModel& eve) {
  if (!e.is_object()) fail("eve", "expected an object");
  reject_unknown(e, {"strategy", "intercept_probability", "on_player_links", "on_controller_links"}, "eve");
  if (e.contains("strategy")) {
    const std::string s = as_string(e["strategy"], "eve.strategy");
    if (s == "none") {
      eve.strategy = EveModel::Strategy::None;
    } else if (s == "intercept_resend") {
      eve.strategy = EveModel::Strategy::InterceptResendRandomBasis;
      eve.intercept_probability = 1.0;
    } else {
      fail("eve.strategy", "expected \"none\" or \"intercept_resend\", got \"" + s + "\"");
    }
  }
  if (e.contains("intercept_probability")) {
    eve.intercept_probability = as_double(e["intercept_probability"], "eve.intercept_probability");
  }
  if (e.contains("on_player_links")) eve.on_player_links = as_bool(e["on_player_links"], "eve.on_player_links");
  if (e.contains("on_controller_links")) {
    eve.on_controller_links = as_bool(e["on_controller_links"], "eve.on_controller_links");
  }
}

void parse_secret(const Json& s, SecretSource& src) {
  if (!s.is_object()) fail("secret", "expected an object");
  reject_unknown(s, {"source", "amplitudes", "seed"}, "secret");
  const std::string kind = as_string(require(s, "source", "secret.source"), "secret.source");
  if (kind == "explicit") {
    src.kind = SecretSource::Kind::Explicit;
  } else if (kind == "demo") {
    src.kind = SecretSource::Kind::Demo;
  } else if (kind == "random_haar") {
    src.kind = SecretSource::Kind::RandomHaar;
  } else {
    fail("secret.source", "expected \"explicit\", \"demo\" or \"random_haar\", got \"" + kind + "\"");
  }
  if (src.kind != SecretSource::Kind::RandomHaar) {
    const Json& a = require(s, "amplitudes", "secret.amplitudes");
    if (!a.is_array()) fail("secret.amplitudes", "expected an array");
    for (std::size_t i = 0; i < a.size(); ++i) {
      src.amplitudes.push_back(as_complex(a[i], "secret.amplitudes[" + std::to_string(i) + "]"));
    }
  } else if (s.contains("amplitudes")) {
    fail("secret.amplitudes", "not used by random_haar");
  }
  if (s.contains("seed")) {
    if (src.kind != SecretSource::Kind::RandomHaar) fail("secret.seed", "only used by random_haar");
    src.seed = as_u64(s["seed"], "secret.seed");
  }
}

void parse_expect(const Json& e, Expectation& x) {
  if (!e.is_object()) fail("expect", "expected an object");
  reject_unknown(e, {"outcome", "min_fidelity", "min_detection_frequency", "max_detection_frequency"}, "expect");
  if (e.contains("outcome")) {
    x.outcome = as_string(e["outcome"], "expect.outcome");
    if (*x.outcome != "recovered" && *x.outcome != "sealed") fail("expect.outcome", "expected \"recovered\" or \"sealed\"");
  }
  if (e.contains("min_fidelity")) x.min_fidelity = as_double(e["min_fidelity"], "expect.min_fidelity");
  if (e.contains("min_detection_frequency")) {
    x.min_detection_frequency = as_double(e["min_detection_frequency"], "expect.min_detection_frequency");
  }
  if (e.contains("max_detection_frequency")) {
    x.max_detection_frequency = as_double(e["max_detection_frequency"], "expect.max_detection_frequency");
  }
}

}  // namespace

void ScenarioConfig::validate() const {
  if (width < 1) fail("N", "must be at least 1");
  if (players < 1) fail("n", "must be at least 1");
  if (controllers < 1) fail("m", "must be at least 1");
  if (trials < 1) fail("trials", "must be at least 1");
  if (static_cast<std::size_t>(width) + decoys + 2 > QuantumRegister::kMaxQubits) {
    fail("decoys", "N+M+2 = " + std::to_string(static_cast<std::size_t>(width) + decoys + 2) +
                       " live qubits exceed the cap of " + std::to_string(QuantumRegister::kMaxQubits));
  }
  try {
    policy.validate(players, controllers, width);
    eve.validate();
  } catch (const PolicyError& e) {
    throw ConfigError(e.what());
  }
  for (std::size_t i = 1; i <= static_cast<std::size_t>(width); ++i) {
    const ShareMode want = mode_for_record(*this, i);
    if (policy.mode_of(i) != want) {
      fail("policy.record_to_controller[" + std::to_string(i) + "]",
           "a " + to_string(policy.mode_of(i)) + " share contradicts mode " + mode_name(mode) +
               (mode == ScenarioMode::Mixed ? " (mixed." + std::to_string(i) + " = " + to_string(want) + ")" : ""));
    }
  }
  if (mode != ScenarioMode::Mixed && !mixed.empty()) fail("mixed", "only allowed with mode \"mixed\"");
  for (const auto& [i, m] : mixed) {
    if (i < 1 || i > static_cast<std::size_t>(width)) fail("mixed." + std::to_string(i), "record index out of range");
  }

  switch (secret.kind) {
    case SecretSource::Kind::Demo:
      if (secret.amplitudes.size() != 2) fail("secret.amplitudes", "demo encoding takes two amplitudes (a, b)");
      if (width < 2) fail("N", "demo encoding needs N >= 2");
      break;
    case SecretSource::Kind::Explicit:
      if (secret.amplitudes.size() != (std::size_t{1} << width)) {
        fail("secret.amplitudes", "expected 2^N = " + std::to_string(std::size_t{1} << width) + " amplitudes, got " +
                                      std::to_string(secret.amplitudes.size()));
      }
      break;
    case SecretSource::Kind::RandomHaar: break;
  }
  if (secret.kind != SecretSource::Kind::RandomHaar) {
    double norm = 0.0;
    for (Complex c : secret.amplitudes) norm += std::norm(c);
    if (std::abs(norm - 1.0) > 1e-9) fail("secret.amplitudes", "not normalized (sum |a|^2 = " + std::to_string(norm) + ")");
  }
  if (expect && expect->min_fidelity && (*expect->min_fidelity < 0.0 || *expect->min_fidelity > 1.0)) {
    fail("expect.min_fidelity", "not in [0, 1]");
  }
}

StateVector ScenarioConfig::secret_for(std::uint64_t trial) const {
  switch (secret.kind) {
    case SecretSource::Kind::Explicit: {
      StateVector v(static_cast<Eigen::Index>(secret.amplitudes.size()));
      for (std::size_t i = 0; i < secret.amplitudes.size(); ++i) v(static_cast<Eigen::Index>(i)) = secret.amplitudes[i];
      return v;
    }
    case SecretSource::Kind::Demo: {
      StateVector xi(2);
      xi << secret.amplitudes[0], secret.amplitudes[1];
      return demo_encode(xi, static_cast<std::size_t>(width));
    }
    case SecretSource::Kind::RandomHaar: {
      RandomSource rng(mix_seed(secret.seed.value_or(master_seed), trial));
      return random_haar(static_cast<std::size_t>(width), rng);
    }
  }
  throw InternalError("unknown secret source");
}

std::set<std::size_t> ScenarioConfig::withheld_records() const {
  std::set<std::size_t> out;
  for (std::size_t i = 0; i < policy.record_to_controller.size(); ++i) {
    for (PartyId c : policy.record_to_controller[i]) {
      if (!policy.released(c)) out.insert(i + 1);
    }
  }
  return out;
}

ScenarioConfig parse_scenario(const Json& doc) {
  if (!doc.is_object()) fail("scenario", "expected a JSON object");
  reject_unknown(doc, kTopLevel, "");
  const std::string schema = as_string(require(doc, "schema", "schema"), "schema");
  if (schema != kScenarioSchema) fail("schema", "expected \"" + std::string(kScenarioSchema) + "\", got \"" + schema + "\"");

  ScenarioConfig cfg;
  if (doc.contains("name")) cfg.name = as_string(doc["name"], "name");
  cfg.width = small_int(require(doc, "N", "N"), "N");
  cfg.players = small_int(require(doc, "n", "n"), "n");
  cfg.controllers = small_int(require(doc, "m", "m"), "m");
  if (cfg.width > static_cast<int>(QuantumRegister::kMaxQubits)) fail("N", "exceeds the register cap");

  const std::string mode = doc.contains("mode") ? as_string(doc["mode"], "mode") : "classical";
  if (mode == "classical") {
    cfg.mode = ScenarioMode::Classical;
  } else if (mode == "split") {
    cfg.mode = ScenarioMode::Split;
  } else if (mode == "mixed") {
    cfg.mode = ScenarioMode::Mixed;
  } else {
    fail("mode", "expected \"classical\", \"split\" or \"mixed\", got \"" + mode + "\"");
  }
  if (doc.contains("mixed")) {
    const Json& mx = doc["mixed"];
    if (!mx.is_object()) fail("mixed", "expected an object like {\"1\": \"split\"}");
    for (const auto& [key, value] : mx.items()) {
      std::size_t idx = 0;
      try {
        std::size_t used = 0;
        idx = std::stoul(key, &used);
        if (used != key.size()) throw std::invalid_argument(key);
      } catch (const std::logic_error&) {
        fail("mixed." + key, "key must be a record index");
      }
      cfg.mixed[idx] = share_mode(as_string(value, "mixed." + key), "mixed." + key);
    }
  }

  parse_policy(doc, cfg);
  if (doc.contains("decoys")) cfg.decoys = as_u64(doc["decoys"], "decoys");
  if (doc.contains("controller_decoys")) cfg.controller_decoys = as_u64(doc["controller_decoys"], "controller_decoys");
  if (doc.contains("eve")) parse_eve(doc["eve"], cfg.eve);
  parse_secret(require(doc, "secret", "secret"), cfg.secret);
  if (doc.contains("trials")) cfg.trials = as_u64(doc["trials"], "trials");
  if (doc.contains("master_seed")) cfg.master_seed = as_u64(doc["master_seed"], "master_seed");
  if (doc.contains("expect")) {
    Expectation x;
    parse_expect(doc["expect"], x);
    cfg.expect = x;
  }
  if (cfg.decoys > QuantumRegister::kMaxQubits) fail("decoys", "exceeds the register cap");
  if (cfg.controller_decoys > 100000) fail("controller_decoys", "too many probes");
  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": file not found or unreadable");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": not valid JSON (" + e.what() + ")");
  }
  return parse_scenario(doc);
}

Json scenario_to_json(const ScenarioConfig& cfg) {
  Json j;
  j["schema"] = kScenarioSchema;
  j["name"] = cfg.name;
  j["N"] = cfg.width;
  j["n"] = cfg.players;
  j["m"] = cfg.controllers;
  j["mode"] = mode_name(cfg.mode);
  if (cfg.mode == ScenarioMode::Mixed) {
    Json mx = Json::object();
    for (const auto& [i, m] : cfg.mixed) mx[std::to_string(i)] = to_string(m);
    j["mixed"] = mx;
  }
  Json pol;
  pol["threshold_k"] = cfg.policy.threshold_k;
  Json q = Json::array();
  for (PartyId p : cfg.policy.qubit_to_player) q.push_back(p.index);
  pol["qubit_to_player"] = q;
  Json r = Json::array();
  for (const auto& holders : cfg.policy.record_to_controller) {
    Json h = Json::array();
    for (PartyId c : holders) h.push_back(c.index);
    r.push_back(h);
  }
  pol["record_to_controller"] = r;
  Json rel = Json::object();
  for (const auto& [c, decision] : cfg.policy.release) rel[c.to_string()] = to_string(decision);
  pol["release"] = rel;
  Json coop = Json::array();
  for (PartyId p : cfg.policy.cooperating_players) coop.push_back(p.index);
  pol["cooperating_players"] = coop;
  j["policy"] = pol;
  j["decoys"] = cfg.decoys;
  j["controller_decoys"] = cfg.controller_decoys;
  j["eve"] = {{"strategy", to_string(cfg.eve.strategy)},
              {"intercept_probability", cfg.eve.intercept_probability},
              {"on_player_links", cfg.eve.on_player_links},
              {"on_controller_links", cfg.eve.on_controller_links}};
  Json sec;
  switch (cfg.secret.kind) {
    case SecretSource::Kind::Explicit: sec["source"] = "explicit"; break;
    case SecretSource::Kind::Demo: sec["source"] = "demo"; break;
    case SecretSource::Kind::RandomHaar: sec["source"] = "random_haar"; break;
  }
  if (cfg.secret.kind != SecretSource::Kind::RandomHaar) {
    Json a = Json::array();
    for (Complex c : cfg.secret.amplitudes) a.push_back(complex_json(c));
    sec["amplitudes"] = a;
  }
  if (cfg.secret.seed) sec["seed"] = *cfg.secret.seed;
  j["secret"] = sec;
  j["trials"] = cfg.trials;
  j["master_seed"] = cfg.master_seed;
  if (cfg.expect) {
    Json e = Json::object();
    if (cfg.expect->outcome) e["outcome"] = *cfg.expect->outcome;
    if (cfg.expect->min_fidelity) e["min_fidelity"] = *cfg.expect->min_fidelity;
    if (cfg.expect->min_detection_frequency) e["min_detection_frequency"] = *cfg.expect->min_detection_frequency;
    if (cfg.expect->max_detection_frequency) e["max_detection_frequency"] = *cfg.expect->max_detection_frequency;
    j["expect"] = e;
  }
  return j;
}

}  // namespace cqss
