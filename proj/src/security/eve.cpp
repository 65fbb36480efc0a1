#include <cmath>

#include "cqss/security.hpp"

namespace cqss {

std::string to_string(EveModel::Strategy s) {
  return s == EveModel::Strategy::None ? "none" : "intercept_resend";
}

std::string to_string(Verdict v) { return v == Verdict::Clean ? "clean" : "eve_detected"; }

void EveModel::validate() const {
  if (!(intercept_probability >= 0.0 && intercept_probability <= 1.0)) {
    throw PolicyError("eve.intercept_probability: " + std::to_string(intercept_probability) + " not in [0, 1]");
  }
}

bool eve_tap(Channel& channel, const EveModel& model, RandomSource& rng) {
  if (model.strategy == EveModel::Strategy::None) return false;
  if (channel.kind == LinkKind::Player && !model.on_player_links) return false;
  if (channel.kind == LinkKind::Controller && !model.on_controller_links) return false;
  if (model.intercept_probability < 1.0 && rng.uniform() >= model.intercept_probability) return false;
  const Basis basis = rng.coin() ? Basis::X : Basis::Z;
  channel.reg.collapse_single(channel.in_flight, basis, rng);
  return true;
}

std::shared_ptr<EveLog> install_eve(ProtocolRun& run, const EveModel& model, RandomSource rng) {
  model.validate();
  auto log = std::make_shared<EveLog>();
  auto stream = std::make_shared<RandomSource>(rng);
  run.set_channel_tap([model, stream, log](Channel& ch) {
    ++log->seen;
    if (eve_tap(ch, model, *stream)) ++log->intercepted;
  });
  return log;
}

}  // namespace cqss
