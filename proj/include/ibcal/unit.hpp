#pragma once

#include <numbers>
#include <string_view>

#include "ibcal/errors.hpp"

namespace ibcal {

// Log base used for every information quantity. Internals always work in a
// single caller-chosen unit so that estimates, thresholds, and confidence
// bounds stay consistent.
enum class LogUnit { Nats, Bits };

// Factor converting a value in nats to the requested unit.
constexpr double unit_factor(LogUnit u) {
    return u == LogUnit::Bits ? 1.0 / std::numbers::ln2 : 1.0;
}

constexpr const char* unit_name(LogUnit u) {
    return u == LogUnit::Bits ? "bits" : "nats";
}

inline LogUnit parse_unit(std::string_view s) {
    if (s == "nats") return LogUnit::Nats;
    if (s == "bits") return LogUnit::Bits;
    throw SchemaError("unknown log unit: '" + std::string(s) + "' (expected nats or bits)");
}

}  // namespace ibcal
