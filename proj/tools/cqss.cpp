// cqss: run controlled quantum secret sharing scenarios from the command line.
//
// Exit status: 0 when every embedded check passes, 1 when one fails, 2 on a
// usage or scenario error.

#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <set>
#include <string>

#include <CLI11.hpp>

#include "cqss/harness.hpp"
#include "cqss/stats.hpp"

namespace {

using cqss::Json;

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;

struct Options {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::string out;
  int verbosity = 0;
};

cqss::ScenarioConfig load(const Options& opt) {
  cqss::ScenarioConfig cfg = cqss::load_scenario(opt.scenario);
  if (opt.seed) cfg.master_seed = *opt.seed;
  return cfg;
}

void emit(const Options& opt, const std::string& text) {
  if (opt.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(opt.out, std::ios::binary);
  if (!f) throw cqss::ConfigError("--out: cannot write " + opt.out);
  f << text;
}

Json header(const cqss::ScenarioConfig& cfg, const char* kind) {
  Json j;
  j["schema"] = cqss::kReportSchema;
  j["kind"] = kind;
  j["scenario"] = cfg.name;
  j["master_seed"] = cfg.master_seed;
  return j;
}

int cmd_run(const Options& opt) {
  const cqss::ScenarioConfig cfg = load(opt);
  std::mutex err;
  cqss::RunOptions ro;
  if (opt.verbosity >= 2) {
    ro.on_trial = [&](const cqss::TrialResult& t) {
      const std::lock_guard<std::mutex> lock(err);
      std::cerr << "trial " << t.trial << ": " << (t.recovered ? "recovered" : "sealed")
                << " decoys " << t.decoys.mismatches << "/" << t.decoys.decoys_checked << "\n";
    };
  }
  const cqss::RunReport rep = cqss::run_scenario(cfg, ro);
  Json j = rep.to_json();
  j.erase("schema");
  Json out = header(cfg, "run");
  out.update(j);
  emit(opt, out.dump(2) + "\n");
  if (opt.verbosity >= 1) {
    std::cerr << cfg.name << ": " << rep.trials.size() << " trials, " << rep.recovered << " recovered, " << rep.sealed
              << " sealed, " << rep.detections << " flagged\n";
    for (const auto& c : rep.checks) std::cerr << (c.passed ? "  ok   " : "  FAIL ") << c.name << ": " << c.detail << "\n";
  }
  return rep.passed() ? kOk : kFailed;
}

/// Every non-empty withheld set for small N; singletons and the full set above.
std::vector<std::set<std::size_t>> withheld_sweep(int width) {
  std::vector<std::set<std::size_t>> out;
  const auto n = static_cast<std::size_t>(width);
  if (n <= 6) {
    for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
      std::set<std::size_t> s;
      for (std::size_t i = 0; i < n; ++i) {
        if ((mask >> i) & 1U) s.insert(i + 1);
      }
      out.push_back(std::move(s));
    }
    return out;
  }
  std::set<std::size_t> all;
  for (std::size_t i = 1; i <= n; ++i) {
    out.push_back({i});
    all.insert(i);
  }
  out.push_back(all);
  return out;
}

int cmd_noinfo(const Options& opt) {
  const cqss::ScenarioConfig cfg = load(opt);
  cqss::ProtocolRun run = cqss::ProtocolRun::setup(cfg.players, cfg.controllers, cfg.width, cfg.secret_for(0),
                                                   cfg.policy, cqss::RandomSource::for_trial(cfg.master_seed, 0));
  run.distribute_all();
  Json out = header(cfg, "noinfo");
  out["tolerance"] = cqss::kNoInfoTolerance;
  Json rows = Json::array();
  bool ok = true;
  double worst = 0.0;
  for (const auto& w : withheld_sweep(cfg.width)) {
    const cqss::NoInfoAudit a = cqss::no_information_audit(run, w);
    ok = ok && a.passed;
    worst = std::max(worst, a.trace_distance);
    rows.push_back({{"withheld", a.withheld}, {"trace_distance", a.trace_distance}, {"passed", a.passed}});
    if (opt.verbosity >= 2) std::cerr << "withheld " << Json(a.withheld).dump() << ": " << a.trace_distance << "\n";
  }
  out["audits"] = rows;
  out["max_trace_distance"] = worst;
  out["passed"] = ok;
  emit(opt, out.dump(2) + "\n");
  if (opt.verbosity >= 1) std::cerr << rows.size() << " withheld sets, max trace distance " << worst << "\n";
  return ok ? kOk : kFailed;
}

int cmd_eve(const Options& opt) {
  const cqss::ScenarioConfig cfg = load(opt);
  std::set<std::size_t> counts = {1, 2, 4, 8};
  if (cfg.decoys > 0) counts.insert(cfg.decoys);
  const double p = cfg.eve.active() && cfg.eve.on_player_links ? cfg.eve.intercept_probability : 0.0;

  Json out = header(cfg, "eve");
  out["strategy"] = cqss::to_string(cfg.eve.strategy);
  out["intercept_probability"] = cfg.eve.intercept_probability;
  out["trials"] = cfg.trials;
  Json rows = Json::array();
  bool ok = true;
  for (std::size_t m : counts) {
    cqss::ScenarioConfig c = cfg;
    c.decoys = m;
    c.controller_decoys = 0;
    c.eve.on_controller_links = false;
    c.expect.reset();
    const cqss::RunReport rep = cqss::run_scenario(c);
    const double escape = static_cast<double>(cfg.trials - rep.detections) / static_cast<double>(cfg.trials);
    const double expected = cqss::expected_escape_probability(p, m);
    const cqss::BinomialBand band = cqss::binomial_band(expected, cfg.trials);
    const bool within = band.contains(escape) && (p > 0.0 || rep.detections == 0);
    ok = ok && within;
    rows.push_back({{"decoys", m},
                    {"escape_frequency", escape},
                    {"expected_escape", expected},
                    {"low", band.low},
                    {"high", band.high},
                    {"within_band", within}});
    if (opt.verbosity >= 1) {
      std::cerr << "M=" << m << ": escape " << escape << " expected " << expected << (within ? "" : "  OUT OF BAND") << "\n";
    }
  }
  out["curve"] = rows;
  out["passed"] = ok;
  emit(opt, out.dump(2) + "\n");
  return ok ? kOk : kFailed;
}

int cmd_mstar(const Options& opt) {
  const cqss::ScenarioConfig cfg = load(opt);
  const cqss::MstarTable t = cqss::mstar_sweep(cfg);
  Json out = header(cfg, "mstar");
  out.update(cqss::mstar_to_json(t));
  const bool ok = t.mstar.has_value() && *t.mstar == static_cast<std::size_t>(t.threshold_k);
  out["passed"] = ok;
  emit(opt, out.dump(2) + "\n");
  if (opt.verbosity >= 1) {
    for (const auto& r : t.rows) std::cerr << "r=" << r.released << ": " << r.recovered << "/" << r.subsets << " recovered\n";
  }
  return ok ? kOk : kFailed;
}

int cmd_resources(const Options& opt) {
  const cqss::ScenarioConfig cfg = load(opt);
  const cqss::ResourceReport r = cqss::run_trial(cfg, 0).resources;
  std::string text;
  auto line = [&](const char* key, std::uint64_t got, std::optional<std::uint64_t> want = std::nullopt) {
    text += std::string(key) + "=" + std::to_string(got);
    if (want) text += " (expected " + std::to_string(*want) + ")";
    text += "\n";
  };
  text += "scenario=" + cfg.name + "\n";
  line("epr_player", r.epr_player, r.expected_epr_player);
  line("epr_controller", r.epr_controller, r.expected_epr_controller);
  line("dealer_measurements", r.dealer_measurements, r.expected_dealer_measurements);
  line("dealer_distribution_measurements", r.dealer_distribution_measurements,
       r.expected_dealer_distribution_measurements);
  line("controller_measurements", r.controller_measurements);
  line("decoy_overhead", r.decoy_overhead);
  text += std::string("consistent=") + (r.consistent ? "true" : "false") + "\n";
  emit(opt, text);
  return r.consistent ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Controlled quantum secret sharing simulator"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  Options opt;
  app.add_option("--seed", opt.seed, "Override the scenario's master seed");
  app.add_option("--out", opt.out, "Write the report to this file instead of stdout");
  app.add_flag("-v,--verbose", opt.verbosity, "Progress on stderr; repeat for per-trial detail");

  struct Sub {
    const char* name;
    const char* help;
    int (*fn)(const Options&);
  };
  const Sub subs[] = {
      {"run", "Execute the scenario's trials and report", cmd_run},
      {"noinfo", "Audit the players' state for every withheld set", cmd_noinfo},
      {"eve", "Decoy detection curve for M in {1, 2, 4, 8}", cmd_eve},
      {"mstar", "Minimum number of consenting controllers", cmd_mstar},
      {"resources", "Entanglement and measurement counts for one run", cmd_resources},
  };
  int (*chosen)(const Options&) = nullptr;
  for (const Sub& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("scenario", opt.scenario, "Scenario file (JSON)")->required();
    sub->callback([&chosen, fn = s.fn] { chosen = fn; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    return chosen(opt);
  } catch (const cqss::ConfigError& e) {
    std::cerr << "cqss: " << e.what() << "\n";
    return kUsage;
  } catch (const cqss::PolicyError& e) {
    std::cerr << "cqss: " << e.what() << "\n";
    return kUsage;
  } catch (const cqss::ResourceError& e) {
    std::cerr << "cqss: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "cqss: " << e.what() << "\n";
    return kFailed;
  }
}
