#pragma once

// Scenario files, batch execution and reports.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cqss/protocol.hpp"
#include "cqss/security.hpp"

namespace cqss {

using Json = nlohmann::ordered_json;

/// Malformed or inconsistent scenario; the message names the field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A module error raised inside trial `trial`.
class TrialError : public std::runtime_error {
 public:
  TrialError(std::uint64_t trial, const std::string& what)
      : std::runtime_error("trial " + std::to_string(trial) + ": " + what), trial_(trial) {}
  std::uint64_t trial() const { return trial_; }

 private:
  std::uint64_t trial_;
};

/// a|0...0> + b|1...1> over `width` >= 2 qubits.
StateVector demo_encode(const StateVector& xi, std::size_t width);
/// (a, b) up to global phase; throws DecodeError outside the code image.
StateVector demo_decode(const StateVector& state);

/// Independent complex Gaussian components, normalized.
StateVector random_haar(std::size_t width, RandomSource& rng);

inline constexpr const char* kScenarioSchema = "cqss-scenario/1";
inline constexpr const char* kReportSchema = "cqss-report/1";

enum class ScenarioMode : std::uint8_t { Classical, Split, Mixed };

struct SecretSource {
  enum class Kind : std::uint8_t { Explicit, Demo, RandomHaar };
  Kind kind = Kind::Demo;
  /// Explicit: 2^N amplitudes. Demo: the single-qubit (a, b).
  std::vector<Complex> amplitudes;
  /// RandomHaar; falls back to the master seed.
  std::optional<std::uint64_t> seed;
};

/// Optional assertions checked by `run`.
struct Expectation {
  /// "recovered" or "sealed", required of every trial.
  std::optional<std::string> outcome;
  std::optional<double> min_fidelity;
  std::optional<double> min_detection_frequency;
  std::optional<double> max_detection_frequency;
};

struct ScenarioConfig {
  std::string name;
  int width = 0;        // N
  int players = 0;      // n
  int controllers = 0;  // m
  ScenarioMode mode = ScenarioMode::Classical;
  /// Mixed mode: record index -> share mode.
  std::map<std::size_t, ShareMode> mixed;
  AccessPolicy policy;
  std::size_t decoys = 0;
  std::size_t controller_decoys = 0;
  EveModel eve;
  SecretSource secret;
  std::uint64_t trials = 1;
  std::uint64_t master_seed = 0;
  std::optional<Expectation> expect;

  /// Throws ConfigError naming the field.
  void validate() const;
  /// The secret of trial `trial`.
  StateVector secret_for(std::uint64_t trial) const;
  /// Record indices (1-based) some withholding controller keeps hidden.
  std::set<std::size_t> withheld_records() const;
};

ScenarioConfig parse_scenario(const Json& doc);
ScenarioConfig load_scenario(const std::filesystem::path& path);
Json scenario_to_json(const ScenarioConfig& cfg);

struct TrialResult {
  std::uint64_t trial = 0;
  bool recovered = false;
  std::string sealed_reason;
  std::vector<PartyId> players;
  std::vector<std::size_t> qubit_indices;
  /// Against the exact marginal of the secret on the recovered qubits.
  std::optional<double> fidelity;
  /// Demo secrets decoded from a full recovery, against the input (a, b).
  std::optional<double> decoded_fidelity;
  DetectionReport decoys;
  DetectionReport controller_probes;
  std::uint64_t eve_intercepts = 0;
  ResourceReport resources;
  /// Trial 0 only: the sealed-state audit for the withheld records.
  std::optional<NoInfoAudit> audit;
};

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct MstarRow {
  std::size_t released = 0;
  std::uint64_t subsets = 0;
  std::uint64_t recovered = 0;
};

struct MstarTable {
  std::vector<MstarRow> rows;
  bool exhaustive = true;
  /// Smallest release count with a successful reconstruction.
  std::optional<std::size_t> mstar;
  int threshold_k = 0;
};

struct RunReport {
  ScenarioConfig config;
  std::vector<TrialResult> trials;
  std::uint64_t recovered = 0;
  std::uint64_t sealed = 0;
  std::optional<double> mean_fidelity;
  std::optional<double> min_fidelity;
  std::uint64_t detections = 0;
  double detection_frequency = 0.0;
  std::optional<NoInfoAudit> audit;
  std::optional<MstarTable> mstar;
  std::vector<Check> checks;

  bool passed() const;
  Json to_json() const;
};

struct RunOptions {
  /// 0 = one per hardware thread.
  unsigned threads = 0;
  /// Called once per finished trial, from worker threads.
  std::function<void(const TrialResult&)> on_trial;
};

/// Executes cfg.trials independent runs. Results depend only on
/// (cfg, master_seed), never on thread scheduling.
RunReport run_scenario(const ScenarioConfig& cfg, const RunOptions& options = {});

/// One trial; trial-index seeding as in run_scenario.
TrialResult run_trial(const ScenarioConfig& cfg, std::uint64_t trial);

/// Release-count sweep for one-share-per-controller configurations
/// (n = m = N). Exhaustive for m <= 5, 256 sampled subsets per count above.
MstarTable mstar_sweep(const ScenarioConfig& cfg);
Json mstar_to_json(const MstarTable& table);

/// Probability that M decoys all pass with Eve intercepting each link with
/// probability p: (1 - p/4)^M.
double expected_escape_probability(double intercept_probability, std::size_t decoys);

}  // namespace cqss
