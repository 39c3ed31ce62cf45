#include "ibcal/hyperparameter.hpp"

#include <cmath>
#include <cstdio>

namespace ibcal {

const char* variant_name(IbVariant v) {
    switch (v) {
        case IbVariant::Classical: return "classical";
        case IbVariant::Deterministic: return "deterministic";
        case IbVariant::Ibkd: return "ibkd";
    }
    return "unknown";
}

IbVariant parse_variant(std::string_view s) {
    if (s == "classical") return IbVariant::Classical;
    if (s == "deterministic") return IbVariant::Deterministic;
    if (s == "ibkd") return IbVariant::Ibkd;
    throw SchemaError("unknown solver variant: '" + std::string(s) + "'");
}

namespace {
std::string short_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}
}  // namespace

double HyperparameterPoint::lambda() const {
    if (variant == IbVariant::Deterministic || values.size() != 1) {
        throw OutOfRange("lambda() requires a one-parameter variant");
    }
    return values[0];
}

double HyperparameterPoint::gamma() const {
    if (variant != IbVariant::Deterministic || values.size() != 2) {
        throw OutOfRange("gamma() requires the deterministic variant");
    }
    return values[0];
}

double HyperparameterPoint::beta() const {
    if (variant != IbVariant::Deterministic || values.size() != 2) {
        throw OutOfRange("beta() requires the deterministic variant");
    }
    return values[1];
}

void HyperparameterPoint::validate() const {
    const std::size_t arity = variant == IbVariant::Deterministic ? 2 : 1;
    if (values.size() != arity) {
        throw OutOfRange(std::string("hyperparameter arity mismatch for ") +
                         variant_name(variant));
    }
    for (double v : values) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw OutOfRange("hyperparameter components must be positive and finite");
        }
    }
    if (variant == IbVariant::Deterministic && values[0] > 1.0) {
        throw OutOfRange("deterministic variant requires gamma <= 1");
    }
}

std::string HyperparameterPoint::label() const {
    if (variant == IbVariant::Deterministic) {
        return std::string(variant_name(variant)) + "(gamma=" + short_num(values[0]) +
               ",beta=" + short_num(values[1]) + ")";
    }
    return std::string(variant_name(variant)) + "(lambda=" + short_num(values[0]) + ")";
}

}  // namespace ibcal
