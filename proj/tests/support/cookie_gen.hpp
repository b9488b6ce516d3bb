#pragma once

#include <cstdint>
#include <string>

namespace cmcs::testing {

/// Random but well-formed scenario script: `set`/`get` only target apps with
/// an open web-view, and cookie names carry the writer's prefix (`A_k3`) so
/// apps never overwrite each other's records.
std::string random_scenario(std::uint64_t seed, std::size_t steps = 40);

}  // namespace cmcs::testing
