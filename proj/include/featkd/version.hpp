#pragma once

namespace featkd {

inline constexpr const char* kVersion = "0.1.0";

// Generator identity, recorded in run manifests so outputs can be tied to the
// exact random stream that produced them.
inline constexpr const char* kRngName = "splitmix64+box-muller";

}  // namespace featkd
