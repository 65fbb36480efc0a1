#include "cqss/security.hpp"

namespace cqss {

NoInfoAudit no_information_audit(const ProtocolRun& run, const std::set<std::size_t>& withheld) {
  if (!run.distribution_complete()) throw PhaseError("audit needs a completed distribution");
  std::vector<std::size_t> positions;
  for (std::size_t i : withheld) {
    if (i == 0 || i > static_cast<std::size_t>(run.width())) {
      throw std::out_of_range("withheld index " + std::to_string(i) + " out of range");
    }
    positions.push_back(i - 1);
  }
  NoInfoAudit audit;
  audit.withheld = withheld;
  audit.trace_distance = trace_distance(run.withheld_state(withheld), expected_withheld_density(run.secret(), positions));
  audit.passed = audit.trace_distance <= kNoInfoTolerance;
  return audit;
}

}  // namespace cqss
