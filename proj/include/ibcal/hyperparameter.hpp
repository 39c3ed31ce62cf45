#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ibcal/errors.hpp"

namespace ibcal {

// Objective family an encoder was trained under.
//  Classical:      minimize I(X;T) - lambda * I(T;Y)
//  Deterministic:  minimize H(T) - gamma * H(T|X) - beta * I(T;Y)
//  Ibkd:           minimize -I(T;Y) + lambda * I(X;T)
enum class IbVariant { Classical, Deterministic, Ibkd };

const char* variant_name(IbVariant v);
IbVariant parse_variant(std::string_view s);

struct HyperparameterPoint {
    IbVariant variant = IbVariant::Classical;
    std::vector<double> values{1.0};  // {lambda} or {gamma, beta}

    double lambda() const;
    double gamma() const;
    double beta() const;

    // Positivity and arity; deterministic additionally requires gamma <= 1.
    void validate() const;

    std::string label() const;

    bool operator==(const HyperparameterPoint&) const = default;
};

inline HyperparameterPoint classical_point(double lambda) {
    return {IbVariant::Classical, {lambda}};
}

inline HyperparameterPoint deterministic_point(double gamma, double beta) {
    return {IbVariant::Deterministic, {gamma, beta}};
}

inline HyperparameterPoint ibkd_point(double lambda) {
    return {IbVariant::Ibkd, {lambda}};
}

}  // namespace ibcal
