#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "cqss/security.hpp"
#include "cqss/stats.hpp"
#include "oracles.hpp"

namespace cqss {
namespace {

using oracle::Mat;
using oracle::Vec;

ProtocolRun make_run(const StateVector& psi, int n, int m, std::uint64_t seed) {
  const int width = static_cast<int>(qubit_count_for(static_cast<std::size_t>(psi.size())));
  return ProtocolRun::setup(n, m, width, psi, AccessPolicy::round_robin(width, n, m, ShareMode::Classical, n),
                            RandomSource(seed));
}

const EveModel kAlwaysEve{EveModel::Strategy::InterceptResendRandomBasis, 1.0, true, false};

TEST(Decoys, StatesAndBases) {
  EXPECT_EQ(decoy_basis(DecoyState::Zero), Basis::Z);
  EXPECT_EQ(decoy_basis(DecoyState::One), Basis::Z);
  EXPECT_EQ(decoy_basis(DecoyState::PlusX), Basis::X);
  EXPECT_EQ(decoy_basis(DecoyState::MinusX), Basis::X);
  const double h = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(std::abs(decoy_vector(DecoyState::MinusX)(1) + h), 0.0, 1e-15);
  EXPECT_EQ(decoy_expected_bit(DecoyState::One), 1);
  EXPECT_EQ(decoy_expected_bit(DecoyState::PlusX), 0);
}

TEST(Decoys, InsertExamples) {
  StateVector zero(2);
  zero << 1.0, 0.0;
  EXPECT_EQ(insert_decoys(zero, DecoyPlan{}), zero);

  const StateVector ext = insert_decoys(zero, DecoyPlan{{1}, {DecoyState::PlusX}});
  const double h = 1.0 / std::sqrt(2.0);
  ASSERT_EQ(ext.size(), 4);
  EXPECT_NEAR(std::abs(ext(0) - h), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(ext(1) - h), 0.0, 1e-15);
  EXPECT_EQ(ext(2), Complex(0.0));
  EXPECT_EQ(ext(3), Complex(0.0));

  // decoy in front instead
  const StateVector front = insert_decoys(zero, DecoyPlan{{0}, {DecoyState::One}});
  EXPECT_EQ(front(2), Complex(1.0));
}

TEST(Decoys, SecretBlockIsUntouched) {
  std::mt19937_64 gen(1);
  RandomSource rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const StateVector psi = oracle::haar_state(3, gen);
    const DecoyPlan plan = DecoyPlan::sample(3, 1 + trial % 4, rng);
    const StateVector ext = insert_decoys(psi, plan);
    EXPECT_NEAR(ext.squaredNorm(), 1.0, 1e-12);
    std::vector<std::size_t> keep;
    for (std::size_t p = 0; p < 3 + plan.count(); ++p) {
      if (std::find(plan.placements.begin(), plan.placements.end(), p) == plan.placements.end()) keep.push_back(p);
    }
    EXPECT_LE((partial_trace_keep(ext, keep) - psi * psi.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
    // each decoy slot carries exactly its planned state
    for (std::size_t j = 0; j < plan.count(); ++j) {
      const std::size_t one[] = {plan.placements[j]};
      const Vec theta = decoy_vector(plan.states[j]);
      EXPECT_LE((partial_trace_keep(ext, one) - theta * theta.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Decoys, SamplingIsUniformOverSlots) {
  RandomSource rng(2);
  constexpr int kTrials = 20000;
  std::array<int, 5> hits{};
  std::array<int, 4> kinds{};
  for (int t = 0; t < kTrials; ++t) {
    const DecoyPlan plan = DecoyPlan::sample(3, 2, rng);
    plan.validate(3);
    ASSERT_EQ(plan.count(), 2U);
    for (std::size_t p : plan.placements) ++hits[p];
    for (DecoyState s : plan.states) ++kinds[static_cast<std::size_t>(s)];
  }
  const BinomialBand slot_band = binomial_band(2.0 / 5.0, kTrials);
  for (int h : hits) EXPECT_TRUE(slot_band.contains(static_cast<double>(h) / kTrials)) << h;
  const BinomialBand kind_band = binomial_band(0.25, 2 * kTrials);
  for (int k : kinds) EXPECT_TRUE(kind_band.contains(static_cast<double>(k) / (2 * kTrials))) << k;
}

TEST(Decoys, MalformedPlans) {
  EXPECT_THROW((DecoyPlan{{0, 1}, {DecoyState::Zero}}.validate(2)), PolicyError);
  EXPECT_THROW((DecoyPlan{{3}, {DecoyState::Zero}}.validate(2)), PolicyError);
  EXPECT_THROW((DecoyPlan{{1, 1}, {DecoyState::Zero, DecoyState::One}}.validate(2)), PolicyError);
  EXPECT_NO_THROW((DecoyPlan{{2}, {DecoyState::Zero}}.validate(2)));
}

TEST(Decoys, VerificationPhaseAndAccounting) {
  std::mt19937_64 gen(3);
  ProtocolRun run = make_run(oracle::haar_state(2, gen), 2, 2, 5);
  const DecoyPlan plan{{0, 3}, {DecoyState::MinusX, DecoyState::One}};
  apply_decoy_plan(run, plan);
  EXPECT_THROW(verify_decoys(run, plan), PhaseError);
  run.distribute_all();
  const DetectionReport report = verify_decoys(run, plan);
  EXPECT_EQ(report.decoys_checked, 2U);
  EXPECT_EQ(report.mismatches, 0U);
  EXPECT_EQ(report.verdict(), Verdict::Clean);
  run.transport_all();
  const ResourceReport r = run.resource_report();
  EXPECT_EQ(r.epr_player, 4U);
  EXPECT_EQ(r.dealer_measurements, 6U);
  EXPECT_EQ(r.decoy_overhead, 2U);
  EXPECT_TRUE(r.consistent);
  // decoys do not disturb the secret
  EXPECT_GE(fidelity(run.secret(), std::get<Recovered>(run.reconstruct()).state), 1.0 - 1e-10);
}

TEST(Decoys, NoFalsePositives) {
  std::mt19937_64 gen(4);
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const StateVector psi = oracle::haar_state(2, gen);
    ProtocolRun run = make_run(psi, 2, 2, seed);
    RandomSource plan_rng = run.rng().fork(1);
    const DecoyPlan plan = DecoyPlan::sample(2, seed % 17, plan_rng);
    apply_decoy_plan(run, plan);
    run.distribute_all();
    const DetectionReport r = verify_decoys(run, plan);
    ASSERT_EQ(r.decoys_checked, plan.count());
    ASSERT_EQ(r.mismatches, 0U) << "seed " << seed;
  }
}

// Exhaustive enumeration for one decoy and an always-on intercept-resend
// attack on the receiving half of the link, in plain matrices.
double oracle_detection_probability() {
  const double h = 1.0 / std::sqrt(2.0);
  std::array<Vec, 4> theta;
  theta[0] = Vec::Zero(2);
  theta[0] << 1.0, 0.0;
  theta[1] = Vec::Zero(2);
  theta[1] << 0.0, 1.0;
  theta[2] = Vec::Zero(2);
  theta[2] << h, h;
  theta[3] = Vec::Zero(2);
  theta[3] << h, -h;
  const std::array<int, 4> basis_of = {0, 0, 1, 1};
  const std::array<int, 4> bit_of = {0, 1, 0, 1};
  const std::array<std::array<Vec, 2>, 2> eigen = {{{theta[0], theta[1]}, {theta[2], theta[3]}}};

  // correction for each Bell outcome, found by search over the Paulis
  const Mat id = Mat::Identity(2, 2);
  const std::array<Mat, 4> paulis = {id, oracle::sigma_x(), oracle::sigma_z(), oracle::sigma_z() * oracle::sigma_x()};
  std::mt19937_64 gen(99);
  const Vec probe = oracle::haar_state(1, gen);
  std::array<Mat, 4> fix;
  for (int k = 0; k < 4; ++k) {
    const Vec r = oracle::swap_branch(probe, k);
    for (const Mat& p : paulis) {
      if (std::norm(probe.dot(p * r)) / r.squaredNorm() > 1.0 - 1e-12) fix[static_cast<std::size_t>(k)] = p;
    }
  }

  const Vec link = oracle::bell(0);
  double detect = 0.0;
  for (int d = 0; d < 4; ++d) {
    const Vec full = oracle::kron(theta[static_cast<std::size_t>(d)], link);  // (theta, mu, nu)
    for (int eb = 0; eb < 2; ++eb) {
      for (int eo = 0; eo < 2; ++eo) {
        // Eve projects nu
        const Vec& e = eigen[static_cast<std::size_t>(eb)][static_cast<std::size_t>(eo)];
        const Mat proj = oracle::kron(Mat::Identity(4, 4), Mat(e * e.adjoint()));
        const Vec after_eve = proj * full;
        for (int k = 0; k < 4; ++k) {
          // dealer's Bell outcome on (theta, mu)
          const Vec b = oracle::bell(k);
          Vec nu = Vec::Zero(2);
          for (int i = 0; i < 4; ++i) {
            for (int v = 0; v < 2; ++v) nu(v) += std::conj(b(i)) * after_eve(2 * i + v);
          }
          const Vec corrected = fix[static_cast<std::size_t>(k)] * nu;
          const Vec& wrong = eigen[static_cast<std::size_t>(basis_of[static_cast<std::size_t>(d)])]
                                  [static_cast<std::size_t>(1 - bit_of[static_cast<std::size_t>(d)])];
          detect += 0.25 * 0.5 * std::norm(wrong.dot(corrected));
        }
      }
    }
  }
  return detect;
}

TEST(Eve, OracleDetectionProbabilityForOneDecoy) {
  EXPECT_NEAR(oracle_detection_probability(), 0.25, 1e-12);
}

TEST(Eve, TapExamples) {
  // probability 0 leaves the state alone
  {
    QuantumRegister reg;
    const StateVector plus = decoy_vector(DecoyState::PlusX);
    const QubitId q = reg.load_state(plus).front();
    Channel ch{reg, q, PartyId::player(1), LinkKind::Player};
    RandomSource rng(1);
    EXPECT_FALSE(eve_tap(ch, EveModel{EveModel::Strategy::InterceptResendRandomBasis, 0.0}, rng));
    EXPECT_FALSE(eve_tap(ch, EveModel{}, rng));
    EXPECT_NEAR(fidelity(reg.amplitudes(), plus), 1.0, 1e-15);
  }
  // an eigenstate of the chosen basis survives
  {
    QuantumRegister reg;
    const QubitId q = reg.load_state(decoy_vector(DecoyState::PlusX)).front();
    RandomSource rng(2);
    reg.collapse_single(q, Basis::X, rng);
    EXPECT_NEAR(fidelity(reg.amplitudes(), decoy_vector(DecoyState::PlusX)), 1.0, 1e-15);
  }
  // |0> measured in X, then in Z: uniform outcome
  {
    constexpr int kTrials = 10000;
    int ones = 0;
    RandomSource rng(3);
    for (int t = 0; t < kTrials; ++t) {
      QuantumRegister reg;
      const QubitId q = reg.alloc_qubit(0);
      reg.collapse_single(q, Basis::X, rng);
      ones += reg.measure_single(q, Basis::Z, rng);
    }
    EXPECT_TRUE(binomial_band(0.5, kTrials).contains(static_cast<double>(ones) / kTrials)) << ones;
  }
  // link filtering
  {
    QuantumRegister reg;
    const QubitId q = reg.load_state(decoy_vector(DecoyState::PlusX)).front();
    Channel ch{reg, q, PartyId::controller(1), LinkKind::Controller};
    RandomSource rng(4);
    EXPECT_FALSE(eve_tap(ch, kAlwaysEve, rng));
    EveModel both = kAlwaysEve;
    both.on_controller_links = true;
    EXPECT_TRUE(eve_tap(ch, both, rng));
  }
  EXPECT_THROW((EveModel{EveModel::Strategy::InterceptResendRandomBasis, 1.5}.validate()), PolicyError);
}

double escape_frequency(std::size_t decoys, int trials, std::uint64_t master) {
  StateVector psi(2);
  psi << std::sqrt(0.2), Complex(0.0, std::sqrt(0.8));
  int escaped = 0;
  for (int t = 0; t < trials; ++t) {
    RandomSource base = RandomSource::for_trial(master, static_cast<std::uint64_t>(t));
    ProtocolRun run = ProtocolRun::setup(1, 1, 1, psi, AccessPolicy::round_robin(1, 1, 1, ShareMode::Classical, 1),
                                         base.fork(0));
    RandomSource plan_rng = base.fork(1);
    const DecoyPlan plan = DecoyPlan::sample(1, decoys, plan_rng);
    apply_decoy_plan(run, plan);
    install_eve(run, kAlwaysEve, base.fork(2));
    run.distribute_all();
    if (verify_decoys(run, plan).verdict() == Verdict::Clean) ++escaped;
  }
  return static_cast<double>(escaped) / trials;
}

TEST(Eve, EscapeProbabilityFollowsThreeQuartersToTheM) {
  constexpr int kTrials = 10000;
  for (std::size_t m : {1U, 2U, 4U, 8U}) {
    const double expected = std::pow(0.75, static_cast<double>(m));
    const double got = escape_frequency(m, kTrials, 1000 + m);
    EXPECT_TRUE(binomial_band(expected, kTrials).contains(got)) << "M=" << m << " got " << got << " want " << expected;
  }
}

TEST(Eve, ControllerLinkProbes) {
  std::mt19937_64 gen(5);
  const StateVector psi = oracle::haar_state(2, gen);
  {
    ProtocolRun run = make_run(psi, 2, 2, 1);
    RandomSource rng(9);
    const DetectionReport r = check_controller_links(run, 50, rng);
    EXPECT_EQ(r.decoys_checked, 50U);
    EXPECT_EQ(r.mismatches, 0U);
    run.distribute_all();
    run.transport_all();
    const ResourceReport rep = run.resource_report();
    EXPECT_EQ(rep.epr_controller, 4U + 50U);
    EXPECT_EQ(rep.decoy_overhead, 50U);
    EXPECT_TRUE(rep.consistent);
  }
  {
    ProtocolRun run = make_run(psi, 2, 2, 1);
    EveModel eve = kAlwaysEve;
    eve.on_player_links = false;
    eve.on_controller_links = true;
    const auto log = install_eve(run, eve, RandomSource(7));
    RandomSource rng(9);
    constexpr std::size_t kProbes = 4000;
    const DetectionReport r = check_controller_links(run, kProbes, rng);
    EXPECT_EQ(log->intercepted, kProbes);
    EXPECT_TRUE(binomial_band(0.25, kProbes).contains(static_cast<double>(r.mismatches) / kProbes)) << r.mismatches;
  }
}

TEST(Audit, Examples) {
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 5; ++trial) {
    const StateVector psi = oracle::haar_state(3, gen);
    ProtocolRun run = make_run(psi, 3, 3, static_cast<std::uint64_t>(trial));
    EXPECT_THROW(no_information_audit(run, {1}), PhaseError);
    run.distribute_all();
    for (std::size_t i = 1; i <= 3; ++i) EXPECT_TRUE(no_information_audit(run, {i}).passed);
    const NoInfoAudit none = no_information_audit(run, {});
    EXPECT_LE(none.trace_distance, 1e-10);
    const NoInfoAudit all = no_information_audit(run, {1, 2, 3});
    EXPECT_TRUE(all.passed);
    EXPECT_LE(trace_distance(run.withheld_state({1, 2, 3}), DensityMatrix::maximally_mixed(3)), 1e-10);
    EXPECT_TRUE(no_information_audit(run, {1, 3}).passed);
  }
}

}  // namespace
}  // namespace cqss
