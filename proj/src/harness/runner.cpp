#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "cqss/harness.hpp"
#include "cqss/stats.hpp"

namespace cqss {

namespace {

constexpr double kFidelityFloor = 1.0 - 1e-10;

Json detection_json(const DetectionReport& d) {
  return {{"checked", d.decoys_checked}, {"mismatches", d.mismatches}, {"verdict", to_string(d.verdict())}};
}

Json audit_json(const NoInfoAudit& a) {
  return {{"withheld", a.withheld}, {"trace_distance", a.trace_distance}, {"passed", a.passed}};
}

Json resources_json(const ResourceReport& r) {
  return {{"epr_player", r.epr_player},
          {"epr_controller", r.epr_controller},
          {"dealer_measurements", r.dealer_measurements},
          {"dealer_distribution_measurements", r.dealer_distribution_measurements},
          {"controller_measurements", r.controller_measurements},
          {"decoy_overhead", r.decoy_overhead},
          {"consistent", r.consistent}};
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

bool detected(const TrialResult& t) {
  return t.decoys.verdict() == Verdict::EveDetected || t.controller_probes.verdict() == Verdict::EveDetected;
}

void add_checks(RunReport& rep) {
  const ScenarioConfig& cfg = rep.config;
  auto add = [&](std::string name, bool ok, std::string detail) {
    rep.checks.push_back({std::move(name), ok, std::move(detail)});
  };

  const auto inconsistent = std::count_if(rep.trials.begin(), rep.trials.end(),
                                          [](const TrialResult& t) { return !t.resources.consistent; });
  add("resources_consistent", inconsistent == 0, std::to_string(inconsistent) + " trials off the closed form");

  if (rep.audit) {
    add("no_information", rep.audit->passed, "trace distance " + fmt(rep.audit->trace_distance));
  }

  if (!cfg.eve.active()) {
    add("no_false_positives", rep.detections == 0, std::to_string(rep.detections) + " trials flagged");
    if (rep.recovered > 0) {
      add("fidelity", *rep.min_fidelity >= kFidelityFloor, "min fidelity " + fmt(*rep.min_fidelity));
    }
  } else {
    std::size_t checked = 0;
    if (cfg.eve.on_player_links) checked += cfg.decoys;
    if (cfg.eve.on_controller_links) checked += cfg.controller_decoys;
    if (checked > 0) {
      const double p_detect = 1.0 - expected_escape_probability(cfg.eve.intercept_probability, checked);
      const BinomialBand band = binomial_band(p_detect, cfg.trials);
      add("detection_curve", band.contains(rep.detection_frequency),
          "frequency " + fmt(rep.detection_frequency) + ", expected " + fmt(p_detect) + " +- " + fmt(4 * band.sigma));
    }
  }

  if (cfg.expect) {
    const Expectation& x = *cfg.expect;
    if (x.outcome) {
      const std::uint64_t hits = *x.outcome == "recovered" ? rep.recovered : rep.sealed;
      add("expect.outcome", hits == rep.trials.size(),
          std::to_string(hits) + "/" + std::to_string(rep.trials.size()) + " trials " + *x.outcome);
    }
    if (x.min_fidelity) {
      const bool ok = rep.min_fidelity.has_value() && *rep.min_fidelity >= *x.min_fidelity;
      add("expect.min_fidelity", ok, rep.min_fidelity ? "min fidelity " + fmt(*rep.min_fidelity) : "nothing recovered");
    }
    if (x.min_detection_frequency) {
      add("expect.min_detection_frequency", rep.detection_frequency >= *x.min_detection_frequency,
          "frequency " + fmt(rep.detection_frequency));
    }
    if (x.max_detection_frequency) {
      add("expect.max_detection_frequency", rep.detection_frequency <= *x.max_detection_frequency,
          "frequency " + fmt(rep.detection_frequency));
    }
  }
}

}  // namespace

double expected_escape_probability(double intercept_probability, std::size_t decoys) {
  return std::pow(1.0 - intercept_probability / 4.0, static_cast<double>(decoys));
}

TrialResult run_trial(const ScenarioConfig& cfg, std::uint64_t trial) {
  TrialResult res;
  res.trial = trial;
  const RandomSource base = RandomSource::for_trial(cfg.master_seed, trial);
  const StateVector psi = cfg.secret_for(trial);
  ProtocolRun run = ProtocolRun::setup(cfg.players, cfg.controllers, cfg.width, psi, cfg.policy, base.fork(0));

  RandomSource plan_rng = base.fork(1);
  const DecoyPlan plan = DecoyPlan::sample(static_cast<std::size_t>(cfg.width), cfg.decoys, plan_rng);
  apply_decoy_plan(run, plan);
  std::shared_ptr<EveLog> eve;
  if (cfg.eve.active()) eve = install_eve(run, cfg.eve, base.fork(2));

  run.distribute_all();
  res.decoys = verify_decoys(run, plan);
  RandomSource probe_rng = base.fork(3);
  res.controller_probes = check_controller_links(run, cfg.controller_decoys, probe_rng);
  run.transport_all();
  if (trial == 0) res.audit = no_information_audit(run, cfg.withheld_records());

  const ReconstructOutcome out = run.reconstruct();
  if (const auto* rec = std::get_if<Recovered>(&out)) {
    res.recovered = true;
    res.players = rec->players;
    res.qubit_indices = rec->qubit_indices;
    if (rec->qubit_indices.size() == static_cast<std::size_t>(cfg.width)) {
      res.fidelity = fidelity(psi, rec->state);
      if (cfg.secret.kind == SecretSource::Kind::Demo && rec->pure) {
        StateVector xi(2);
        xi << cfg.secret.amplitudes[0], cfg.secret.amplitudes[1];
        try {
          res.decoded_fidelity = fidelity(xi, demo_decode(*rec->pure));
        } catch (const DecodeError&) {
          res.decoded_fidelity = 0.0;
        }
      }
    } else {
      std::vector<std::size_t> keep;
      for (std::size_t i : rec->qubit_indices) keep.push_back(i - 1);
      res.fidelity = fidelity(DensityMatrix(partial_trace_keep(psi, keep)), rec->state);
    }
  } else {
    res.sealed_reason = std::get<Sealed>(out).reason;
  }
  res.resources = run.resource_report();
  if (eve) res.eve_intercepts = eve->intercepted;
  return res;
}

RunReport run_scenario(const ScenarioConfig& cfg, const RunOptions& options) {
  cfg.validate();
  RunReport rep;
  rep.config = cfg;
  rep.trials.resize(cfg.trials);

  unsigned workers = options.threads != 0 ? options.threads : std::max(1U, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, cfg.trials));
  std::atomic<std::uint64_t> next{0};
  std::mutex failure_mutex;
  std::optional<std::uint64_t> failed_trial;
  std::exception_ptr failure;

  auto work = [&] {
    for (std::uint64_t t = next++; t < cfg.trials; t = next++) {
      try {
        rep.trials[t] = run_trial(cfg, t);
        if (options.on_trial) options.on_trial(rep.trials[t]);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failed_trial || t < *failed_trial) {
          failed_trial = t;
          failure = std::current_exception();
        }
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) {
    try {
      std::rethrow_exception(failure);
    } catch (const std::exception& e) {
      throw TrialError(*failed_trial, e.what());
    }
  }

  double sum = 0.0;
  for (const TrialResult& t : rep.trials) {
    if (t.recovered) {
      ++rep.recovered;
      sum += *t.fidelity;
      rep.min_fidelity = rep.min_fidelity ? std::min(*rep.min_fidelity, *t.fidelity) : *t.fidelity;
    } else {
      ++rep.sealed;
    }
    if (detected(t)) ++rep.detections;
  }
  if (rep.recovered > 0) rep.mean_fidelity = sum / static_cast<double>(rep.recovered);
  rep.detection_frequency = static_cast<double>(rep.detections) / static_cast<double>(cfg.trials);
  rep.audit = rep.trials.front().audit;
  add_checks(rep);
  return rep;
}

bool RunReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

Json RunReport::to_json() const {
  Json j;
  j["schema"] = kReportSchema;
  j["scenario"] = config.name;
  j["config"] = scenario_to_json(config);

  Json agg;
  agg["trials"] = trials.size();
  agg["recovered"] = recovered;
  agg["sealed"] = sealed;
  agg["mean_fidelity"] = mean_fidelity ? Json(*mean_fidelity) : Json(nullptr);
  agg["min_fidelity"] = min_fidelity ? Json(*min_fidelity) : Json(nullptr);
  agg["detections"] = detections;
  agg["detection_frequency"] = detection_frequency;
  j["aggregate"] = agg;
  j["audit"] = audit ? audit_json(*audit) : Json(nullptr);
  if (mstar) j["mstar"] = mstar_to_json(*mstar);

  Json checks_json = Json::array();
  for (const Check& c : checks) checks_json.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  j["checks"] = checks_json;
  j["passed"] = passed();

  Json per = Json::array();
  for (const TrialResult& t : trials) {
    Json row;
    row["trial"] = t.trial;
    row["outcome"] = t.recovered ? "recovered" : "sealed";
    if (t.recovered) {
      Json players = Json::array();
      for (PartyId p : t.players) players.push_back(p.to_string());
      row["players"] = players;
      row["qubits"] = t.qubit_indices;
      row["fidelity"] = *t.fidelity;
      if (t.decoded_fidelity) row["decoded_fidelity"] = *t.decoded_fidelity;
    } else {
      row["reason"] = t.sealed_reason;
    }
    row["decoys"] = detection_json(t.decoys);
    if (config.controller_decoys > 0) row["controller_probes"] = detection_json(t.controller_probes);
    if (config.eve.active()) row["eve_intercepts"] = t.eve_intercepts;
    row["resources"] = resources_json(t.resources);
    per.push_back(row);
  }
  j["trials"] = per;
  return j;
}

}  // namespace cqss
