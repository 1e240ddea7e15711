#pragma once

#include "toolcheck/ingest.hpp"

#include <cstdint>
#include <vector>

namespace toolcheck {

struct SyntheticConfig {
    std::size_t count = 1000;
    std::uint64_t seed = 0;
};

/// Seeded cases with 1-3 tools and 1-2 gold calls each. Gold is always clean,
/// and every case admits every error code: each called tool has a typed
/// required parameter and an optional parameter the gold leaves unset.
std::vector<EvalCase> make_synthetic_cases(const SyntheticConfig& cfg);

}  // namespace toolcheck
