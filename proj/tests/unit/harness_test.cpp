#include <gtest/gtest.h>

#include <cmath>

#include "cqss/harness.hpp"
#include "cqss/stats.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace cqss {
namespace {

StateVector xi(Complex a, Complex b) {
  StateVector v(2);
  v << a, b;
  return v;
}

Json demo_doc(int width, int trials) {
  Json d = Json::parse(R"({"schema": "cqss-scenario/1", "name": "t",
                           "secret": {"source": "demo", "amplitudes": [0.6, [0, 0.8]]}})");
  d["N"] = width;
  d["n"] = width;
  d["m"] = width;
  d["trials"] = trials;
  return d;
}

std::string config_error(const Json& doc) {
  try {
    parse_scenario(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(Demo, EncodeExamples) {
  const StateVector e = demo_encode(xi(1.0, 0.0), 3);
  ASSERT_EQ(e.size(), 8);
  EXPECT_EQ(e(0), Complex(1.0));
  EXPECT_NEAR(e.tail(7).norm(), 0.0, 0.0);

  const double h = 1.0 / std::sqrt(2.0);
  const StateVector bell = demo_encode(xi(h, h), 2);
  EXPECT_NEAR(fidelity(bell, oracle::bell(3)), 1.0, 1e-15);

  EXPECT_THROW(demo_encode(xi(1.0, 1.0), 3), std::invalid_argument);
  EXPECT_THROW(demo_encode(xi(1.0, 0.0), 1), std::invalid_argument);
}

TEST(Demo, SingleQubitMarginalsCarryNoPhase) {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 10; ++trial) {
    const StateVector x = oracle::haar_state(1, gen);
    const std::size_t width = 2 + static_cast<std::size_t>(trial % 4);
    const StateVector e = demo_encode(x, width);
    for (std::size_t p = 0; p < width; ++p) {
      const std::size_t one[] = {p};
      const Eigen::MatrixXcd r = partial_trace_keep(e, one);
      EXPECT_NEAR(r(0, 0).real(), std::norm(x(0)), 1e-12);
      EXPECT_NEAR(r(1, 1).real(), std::norm(x(1)), 1e-12);
      EXPECT_NEAR(std::abs(r(0, 1)), 0.0, 1e-12);
    }
  }
}

TEST(Demo, DecodeRoundTripAndErrors) {
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 10; ++trial) {
    const StateVector x = oracle::haar_state(1, gen);
    const StateVector phased = demo_encode(x, 4) * std::polar(1.0, 0.3 * trial);
    EXPECT_NEAR(fidelity(demo_decode(phased), x), 1.0, 1e-12);
  }
  StateVector zeros = StateVector::Zero(8);
  zeros(0) = 1.0;
  const StateVector d = demo_decode(zeros);
  EXPECT_NEAR(std::abs(d(0) - Complex(1.0)), 0.0, 1e-15);
  EXPECT_EQ(d(1), Complex(0.0));
  EXPECT_THROW(demo_decode(oracle::bell(1)), DecodeError);
}

TEST(Demo, HaarSamplerIsNormalizedAndSeeded) {
  RandomSource a(5);
  RandomSource b(5);
  const StateVector x = random_haar(4, a);
  EXPECT_NEAR(x.squaredNorm(), 1.0, 1e-12);
  EXPECT_EQ(x, random_haar(4, b));
  // E|<0|psi>|^2 = 1/d
  RandomSource c(6);
  double acc = 0.0;
  constexpr int kSamples = 4000;
  for (int i = 0; i < kSamples; ++i) acc += std::norm(random_haar(2, c)(0));
  EXPECT_NEAR(acc / kSamples, 0.25, 0.02);
}

TEST(Scenario, ParsesWithDefaults) {
  const ScenarioConfig cfg = parse_scenario(demo_doc(3, 5));
  EXPECT_EQ(cfg.width, 3);
  EXPECT_EQ(cfg.policy.threshold_k, 3);
  EXPECT_EQ(cfg.policy.record_to_controller.size(), 3U);
  EXPECT_EQ(cfg.trials, 5U);
  EXPECT_EQ(cfg.secret.kind, SecretSource::Kind::Demo);
  EXPECT_NEAR(std::abs(cfg.secret.amplitudes[1] - Complex(0.0, 0.8)), 0.0, 1e-15);
  EXPECT_TRUE(cfg.withheld_records().empty());
}

TEST(Scenario, RoundTrip) {
  Json doc = demo_doc(3, 2);
  doc["mode"] = "mixed";
  doc["mixed"] = {{"2", "split"}};
  doc["policy"] = {{"release", {{"C2", "withheld"}}}, {"threshold_k", 2}};
  doc["eve"] = {{"strategy", "intercept_resend"}, {"intercept_probability", 0.5}};
  doc["decoys"] = 2;
  doc["expect"] = {{"outcome", "sealed"}};
  const ScenarioConfig cfg = parse_scenario(doc);
  EXPECT_EQ(cfg.policy.mode_of(2), ShareMode::Split);
  EXPECT_EQ(cfg.policy.mode_of(1), ShareMode::Classical);
  EXPECT_EQ(cfg.withheld_records(), (std::set<std::size_t>{2}));
  const Json out = scenario_to_json(cfg);
  EXPECT_EQ(scenario_to_json(parse_scenario(out)).dump(), out.dump());
}

TEST(Scenario, ErrorsNameTheField) {
  Json d = demo_doc(3, 1);
  d.erase("N");
  EXPECT_EQ(config_error(d).rfind("N:", 0), 0U) << config_error(d);

  d = demo_doc(3, 1);
  d["schema"] = "cqss-scenario/0";
  EXPECT_EQ(config_error(d).rfind("schema:", 0), 0U);

  d = demo_doc(3, 1);
  d["trails"] = 3;
  EXPECT_EQ(config_error(d).rfind("trails:", 0), 0U);

  d = demo_doc(3, 0);
  EXPECT_EQ(config_error(d).rfind("trials:", 0), 0U);

  d = demo_doc(3, 1);
  d["n"] = 4;
  EXPECT_NE(config_error(d).find("n:"), std::string::npos) << config_error(d);

  d = demo_doc(3, 1);
  d["mode"] = "split";
  d["policy"] = {{"record_to_controller", {1, 2, 3}}};
  EXPECT_NE(config_error(d).find("policy.record_to_controller[1]"), std::string::npos) << config_error(d);

  d = demo_doc(3, 1);
  d["secret"]["amplitudes"] = {1.0, 1.0};
  EXPECT_NE(config_error(d).find("secret.amplitudes"), std::string::npos);

  d = demo_doc(3, 1);
  d["eve"] = {{"intercept_probability", 2.0}};
  EXPECT_NE(config_error(d).find("eve.intercept_probability"), std::string::npos);

  d = demo_doc(3, 1);
  d["policy"] = {{"release", {{"C9", "withheld"}}}};
  EXPECT_NE(config_error(d).find("policy.release"), std::string::npos);

  d = demo_doc(3, 1);
  d["decoys"] = 22;
  EXPECT_NE(config_error(d).find("decoys"), std::string::npos);

  EXPECT_THROW(load_scenario("/nonexistent/scenario.json"), ConfigError);
}

TEST(RunScenario, FullReleaseDemo) {
  const RunReport rep = run_scenario(parse_scenario(demo_doc(3, 100)));
  EXPECT_EQ(rep.recovered, 100U);
  EXPECT_GE(*rep.mean_fidelity, 1.0 - 1e-10);
  EXPECT_GE(*rep.min_fidelity, 1.0 - 1e-10);
  EXPECT_EQ(rep.detections, 0U);
  for (const TrialResult& t : rep.trials) {
    ASSERT_TRUE(t.decoded_fidelity.has_value());
    EXPECT_GE(*t.decoded_fidelity, 1.0 - 1e-10);
  }
  EXPECT_TRUE(rep.passed());
}

TEST(RunScenario, OneWithheldControllerSealsEverything) {
  Json d = demo_doc(3, 50);
  d["policy"] = {{"release", {{"C3", "withheld"}}}};
  d["expect"] = {{"outcome", "sealed"}};
  const RunReport rep = run_scenario(parse_scenario(d));
  EXPECT_EQ(rep.sealed, 50U);
  ASSERT_TRUE(rep.audit.has_value());
  EXPECT_TRUE(rep.audit->passed);
  EXPECT_EQ(rep.audit->withheld, (std::set<std::size_t>{3}));
  EXPECT_TRUE(rep.passed());
}

TEST(RunScenario, FailingExpectationIsReported) {
  Json d = demo_doc(2, 3);
  d["expect"] = {{"outcome", "sealed"}};
  const RunReport rep = run_scenario(parse_scenario(d));
  EXPECT_FALSE(rep.passed());
}

TEST(RunScenario, EveDetectionFrequency) {
  Json d = demo_doc(2, 10000);
  d["decoys"] = 4;
  d["eve"] = {{"strategy", "intercept_resend"}};
  const RunReport rep = run_scenario(parse_scenario(d));
  const BinomialBand band = binomial_band(1.0 - std::pow(0.75, 4), 10000);
  EXPECT_TRUE(band.contains(rep.detection_frequency)) << rep.detection_frequency;
  EXPECT_TRUE(rep.passed());
}

TEST(RunScenario, ReportIsDeterministicAcrossThreadCounts) {
  Json d = demo_doc(3, 40);
  d["secret"] = {{"source", "random_haar"}};
  d["decoys"] = 2;
  d["mode"] = "split";
  d["m"] = 4;
  const ScenarioConfig cfg = parse_scenario(d);
  const std::string one = run_scenario(cfg, RunOptions{1, {}}).to_json().dump();
  EXPECT_EQ(one, run_scenario(cfg, RunOptions{1, {}}).to_json().dump());
  EXPECT_EQ(one, run_scenario(cfg, RunOptions{3, {}}).to_json().dump());
  ScenarioConfig other = cfg;
  other.master_seed = 1;
  EXPECT_NE(one, run_scenario(other).to_json().dump());
}

TEST(Mstar, FullThresholdNeedsEveryController) {
  const MstarTable t = mstar_sweep(parse_scenario(demo_doc(3, 1)));
  ASSERT_TRUE(t.mstar.has_value());
  EXPECT_EQ(*t.mstar, 3U);
  EXPECT_TRUE(t.exhaustive);
  ASSERT_EQ(t.rows.size(), 4U);
  EXPECT_EQ(t.rows[0].subsets, 1U);
  EXPECT_EQ(t.rows[0].recovered, 0U);
  EXPECT_EQ(t.rows[1].subsets, 3U);
  EXPECT_EQ(t.rows[3].recovered, 1U);
}

TEST(Mstar, ThresholdTwo) {
  Json d = demo_doc(3, 1);
  d["policy"] = {{"threshold_k", 2}};
  const MstarTable t = mstar_sweep(parse_scenario(d));
  EXPECT_EQ(*t.mstar, 2U);
  EXPECT_EQ(t.rows[2].recovered, 3U);

  // releases covering B1 and B2 let that pair reconstruct
  d["policy"]["release"] = {{"C3", "withheld"}};
  const ScenarioConfig cfg = parse_scenario(d);
  const TrialResult r = run_trial(cfg, 0);
  EXPECT_TRUE(r.recovered);
  EXPECT_EQ(r.players, (std::vector<PartyId>{PartyId::player(1), PartyId::player(2)}));
  EXPECT_GE(*r.fidelity, 1.0 - 1e-10);
}

TEST(Mstar, SampledAboveFiveControllers) {
  Json d = demo_doc(6, 1);
  d["policy"] = {{"threshold_k", 4}};
  const MstarTable t = mstar_sweep(parse_scenario(d));
  EXPECT_FALSE(t.exhaustive);
  EXPECT_EQ(t.rows[3].subsets, 256U);
  EXPECT_EQ(*t.mstar, 4U);
}

TEST(Mstar, RejectsOtherLayouts) {
  Json d = demo_doc(3, 1);
  d["m"] = 2;
  EXPECT_THROW(mstar_sweep(parse_scenario(d)), ConfigError);
  d = demo_doc(3, 1);
  d["mode"] = "split";
  EXPECT_THROW(mstar_sweep(parse_scenario(d)), ConfigError);
}

TEST(Properties, ControllerVeto) {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 40; ++trial) {
    const int width = 2 + trial % 5;
    const int k = std::uniform_int_distribution<int>(1, width)(gen);
    // C1 holds n-k+1 records, one per distinct player
    const int vetoed = width - k + 1;
    const int controllers = 1 + (width - vetoed > 0 ? 1 : 0);
    ScenarioConfig cfg;
    cfg.width = cfg.players = width;
    cfg.controllers = controllers;
    cfg.policy = AccessPolicy::round_robin(width, width, controllers, ShareMode::Classical, k);
    for (int i = 0; i < width; ++i) {
      cfg.policy.record_to_controller[static_cast<std::size_t>(i)] = {PartyId::controller(i < vetoed ? 1 : 2)};
    }
    cfg.policy.release[PartyId::controller(1)] = Release::Withheld;
    cfg.secret.kind = SecretSource::Kind::RandomHaar;
    cfg.trials = 3;
    cfg.master_seed = static_cast<std::uint64_t>(trial);
    const RunReport rep = run_scenario(cfg);
    EXPECT_EQ(rep.sealed, 3U) << "N=" << width << " k=" << k;
  }
}

TEST(Properties, ReducesToOrdinarySharingWhenEverythingIsReleased) {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 30; ++trial) {
    const int width = 1 + trial % 6;
    const auto layout = testing::random_layout(width, gen);
    ScenarioConfig cfg;
    cfg.width = width;
    cfg.players = layout.players;
    cfg.controllers = layout.controllers;
    cfg.policy = layout.policy;
    cfg.mode = ScenarioMode::Mixed;
    for (std::size_t i = 1; i <= static_cast<std::size_t>(width); ++i) cfg.mixed[i] = cfg.policy.mode_of(i);
    cfg.secret.kind = SecretSource::Kind::RandomHaar;
    cfg.trials = 4;
    cfg.master_seed = static_cast<std::uint64_t>(trial);
    const RunReport rep = run_scenario(cfg);
    EXPECT_EQ(rep.recovered, 4U);
    EXPECT_GE(*rep.min_fidelity, 1.0 - 1e-10);
    EXPECT_TRUE(rep.passed());
  }
}

}  // namespace
}  // namespace cqss
