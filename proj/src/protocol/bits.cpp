#include "cqss/protocol.hpp"

namespace cqss {

TwoBits encode_bits(BellKind kind) {
  const auto v = static_cast<int>(kind);
  return {(v >> 1) & 1, v & 1};
}

BellKind decode_bits(TwoBits bits) {
  if ((bits.x & ~1) != 0 || (bits.y & ~1) != 0) throw std::invalid_argument("bits must be 0 or 1");
  return static_cast<BellKind>(bits.x * 2 + bits.y);
}

std::string to_string(Release r) { return r == Release::Released ? "released" : "withheld"; }

std::string to_string(ShareMode m) { return m == ShareMode::Classical ? "classical" : "split"; }

}  // namespace cqss
