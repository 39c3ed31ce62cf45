#include "ibcal/mi_bound.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace ibcal {

namespace {

void validate_params(const BoundParams& p) {
    if (p.n < 1) throw OutOfRange("bound params need n >= 1");
    if (p.nu < 2 || p.nv < 2) throw OutOfRange("bound params need both alphabet sizes >= 2");
}

double binary_entropy_nats(double x) {
    if (x < 0.0 || x > 1.0) {
        throw OutOfRange("binary entropy argument must lie in [0, 1], got " +
                         std::to_string(x));
    }
    if (x == 0.0 || x == 1.0) return 0.0;
    return -x * std::log(x) - (1.0 - x) * std::log(1.0 - x);
}

// log[(|U||V|-1)(|U|-1)(|V|-1)] in nats.
double first_branch_slope(const BoundParams& p) {
    const double uv = static_cast<double>(p.nu) * static_cast<double>(p.nv);
    return std::log((uv - 1.0) * (static_cast<double>(p.nu) - 1.0) *
                    (static_cast<double>(p.nv) - 1.0));
}

double delta_i_nats(double th, const BoundParams& p) {
    const double branch = 2.0 - 2.0 / static_cast<double>(p.nu);
    if (th > branch) return std::log(static_cast<double>(p.nu));
    return 0.5 * th * first_branch_slope(p) + 3.0 * binary_entropy_nats(0.5 * th);
}

double delta_i_envelope_nats(double th, const BoundParams& p) {
    const double branch = 2.0 - 2.0 / static_cast<double>(p.nu);
    const double c = first_branch_slope(p);
    // The first branch f(th) = (th/2) c + 3 h(th/2) is unimodal with its
    // maximum where ln((1-t)/t) = -c/3 at t = th/2.
    const double th_peak = 2.0 / (1.0 + std::exp(-c / 3.0));
    auto f = [&](double x) { return 0.5 * x * c + 3.0 * binary_entropy_nats(0.5 * x); };
    double sup;
    if (th <= branch) {
        sup = f(std::min(th, th_peak));
    } else {
        sup = std::max(f(std::min(branch, th_peak)),
                       std::log(static_cast<double>(p.nu)));
    }
    const double cap = std::log(static_cast<double>(std::min(p.nu, p.nv)));
    return std::min(sup, cap);
}

}  // namespace

double plugin_mi(const Histogram2D& hist, LogUnit unit) {
    if (hist.n == 0) throw EmptyHistogram("plug-in estimate needs at least one sample");
    return exact_mi(normalized(hist), unit);
}

double binary_entropy(double x, LogUnit unit) {
    return binary_entropy_nats(x) * unit_factor(unit);
}

double theta(double epsilon, const BoundParams& params) {
    validate_params(params);
    if (!(epsilon > 0.0 && epsilon <= 1.0)) {
        throw OutOfRange("theta needs epsilon in (0, 1]");
    }
    const double k = static_cast<double>(params.nu) * static_cast<double>(params.nv);
    // ln(2^k - 2) = k ln2 + ln(1 - 2^(1-k)); exact for k >= 2, overflow-free.
    const double log_states = k * std::numbers::ln2 + std::log1p(-std::exp2(1.0 - k));
    return std::sqrt(2.0 / static_cast<double>(params.n) *
                     (log_states - std::log(epsilon)));
}

double delta_i(double th, const BoundParams& params) {
    validate_params(params);
    return delta_i_nats(th, params) * unit_factor(params.unit);
}

double delta_i_envelope(double th, const BoundParams& params) {
    validate_params(params);
    return delta_i_envelope_nats(th, params) * unit_factor(params.unit);
}

double lower_conf_bound(double estimate, double epsilon, const BoundParams& params) {
    validate_params(params);
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw OutOfRange("lower_conf_bound needs epsilon in (0, 1)");
    }
    return estimate - delta_i_envelope(theta(epsilon, params), params);
}

double p_value(double estimate, double alpha, const BoundParams& params) {
    validate_params(params);
    if (alpha < 0.0) throw OutOfRange("p_value needs alpha >= 0");
    if (!std::isfinite(estimate)) throw NonFinite("p_value estimate must be finite");

    const double scale = unit_factor(params.unit);
    // Work in nats; the predicate is scale-invariant.
    const double est = estimate / scale;
    const double a = alpha / scale;
    auto exceeds = [&](double eps) {
        return est - delta_i_envelope_nats(theta(eps, params), params) > a;
    };

    if (!exceeds(1.0)) return 1.0;
    constexpr double kEpsFloor = 1e-300;
    double lo = kEpsFloor;
    if (exceeds(lo)) return lo;  // infimum is at or below the floor; round up to it
    double hi = 1.0;
    constexpr double kTol = 1e-9;
    for (int iter = 0; iter < 200 && (hi - lo) > kTol; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (exceeds(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;  // predicate verified true at hi: rounded up, never optimistic
}

}  // namespace ibcal
