#include "ibcal/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ibcal/parallel.hpp"
#include "ibcal/rng.hpp"

namespace ibcal {

namespace {

constexpr double kEmptyCluster = 1e-12;

struct Prepared {
    std::size_t nx = 0;
    std::size_t ny = 0;
    std::vector<double> px;
    Mat py_x;  // |X| x |Y|; rows with zero source mass are set uniform
};

Prepared prepare(const JointPMF& source) {
    Prepared pr;
    pr.nx = source.nu();
    pr.ny = source.nv();
    pr.px = source.marginal_u();
    pr.py_x = Mat(pr.nx, pr.ny);
    for (std::size_t x = 0; x < pr.nx; ++x) {
        if (pr.px[x] > 0.0) {
            for (std::size_t y = 0; y < pr.ny; ++y) {
                pr.py_x(x, y) = source(x, y) / pr.px[x];
            }
        } else {
            for (std::size_t y = 0; y < pr.ny; ++y) {
                pr.py_x(x, y) = 1.0 / static_cast<double>(pr.ny);
            }
        }
    }
    return pr;
}

// KL(p || q) over one row; p(y)=0 terms contribute 0, q(y)=0 against
// p(y)>0 yields +inf, which the caller maps to zero posterior weight.
double kl_row(const double* p, const double* q, std::size_t n) {
    double acc = 0.0;
    for (std::size_t y = 0; y < n; ++y) {
        if (p[y] <= 0.0) continue;
        if (q[y] <= 0.0) return std::numeric_limits<double>::infinity();
        acc += p[y] * (std::log(p[y]) - std::log(q[y]));
    }
    return acc;
}

void validate_config(const SolverConfig& cfg) {
    if (cfg.t_size < 2) throw OutOfRange("solver needs |T| >= 2");
    if (cfg.max_iters < 1) throw OutOfRange("solver needs max_iters >= 1");
    if (!(cfg.conv_tol > 0.0)) throw OutOfRange("solver needs conv_tol > 0");
    if (cfg.restarts < 1) throw OutOfRange("solver needs restarts >= 1");
    if (!(cfg.init_concentration > 0.0)) {
        throw OutOfRange("solver needs init_concentration > 0");
    }
}

Mat dirichlet_rows(std::size_t nx, std::size_t nt, double concentration, Rng& rng) {
    Mat rows(nx, nt);
    for (std::size_t x = 0; x < nx; ++x) {
        double total = 0.0;
        for (std::size_t t = 0; t < nt; ++t) {
            rows(x, t) = rng.gamma(concentration);
            total += rows(x, t);
        }
        if (!(total > 0.0)) {
            for (std::size_t t = 0; t < nt; ++t) rows(x, t) = 1.0 / static_cast<double>(nt);
        } else {
            for (std::size_t t = 0; t < nt; ++t) rows(x, t) /= total;
        }
    }
    return rows;
}

/**
 * Shared alternating-update loop. `mult` multiplies the informativeness
 * term (lambda in the classical objective, beta in the deterministic one);
 * gamma = 1 reproduces the classical update exactly, including bitwise
 * identical iterates, since (a - mult*b) / 1.0 == a - mult*b.
 */
Encoder solve_core(const JointPMF& source, double gamma, double mult,
                   const HyperparameterPoint& hp, const SolverConfig& cfg,
                   const IterationObserver& observer) {
    validate_config(cfg);
    const Prepared pr = prepare(source);
    const std::size_t nx = pr.nx;
    const std::size_t ny = pr.ny;
    const std::size_t nt = cfg.t_size;

    bool have_best = false;
    Encoder best;
    double best_obj = std::numeric_limits<double>::infinity();

    std::vector<double> qt(nt);
    Mat qyt(nt, ny);
    std::vector<double> logw(nt);

    for (std::size_t restart = 0; restart < cfg.restarts; ++restart) {
        Rng rng(derive_seed(cfg.seed, "ib_init", restart));
        Mat q = dirichlet_rows(nx, nt, cfg.init_concentration, rng);
        if (observer) observer(0, q);  // iteration 0 is the initialization
        std::size_t iters = 0;

        for (std::size_t iter = 1; iter <= cfg.max_iters; ++iter) {
            // Feature marginal.
            for (std::size_t t = 0; t < nt; ++t) {
                double acc = 0.0;
                for (std::size_t x = 0; x < nx; ++x) acc += pr.px[x] * q(x, t);
                qt[t] = acc;
            }
            // Decoder q(y|t).
            for (std::size_t t = 0; t < nt; ++t) {
                if (qt[t] < kEmptyCluster) {
                    for (std::size_t y = 0; y < ny; ++y) {
                        qyt(t, y) = 1.0 / static_cast<double>(ny);
                    }
                    continue;
                }
                for (std::size_t y = 0; y < ny; ++y) {
                    double acc = 0.0;
                    for (std::size_t x = 0; x < nx; ++x) acc += source(x, y) * q(x, t);
                    qyt(t, y) = acc / qt[t];
                }
            }
            // Encoder update in log-space.
            double max_change = 0.0;
            for (std::size_t x = 0; x < nx; ++x) {
                double peak = -std::numeric_limits<double>::infinity();
                for (std::size_t t = 0; t < nt; ++t) {
                    double w;
                    if (qt[t] <= 0.0) {
                        w = -std::numeric_limits<double>::infinity();
                    } else {
                        const double kl =
                            kl_row(pr.py_x.data.data() + x * ny, qyt.data.data() + t * ny, ny);
                        w = std::isinf(kl)
                                ? -std::numeric_limits<double>::infinity()
                                : (std::log(qt[t]) - mult * kl) / gamma;
                    }
                    logw[t] = w;
                    peak = std::max(peak, w);
                }
                if (!std::isfinite(peak)) {
                    // Every candidate weight vanished; keep the row alive.
                    for (std::size_t t = 0; t < nt; ++t) {
                        const double fresh = 1.0 / static_cast<double>(nt);
                        max_change = std::max(max_change, std::abs(fresh - q(x, t)));
                        q(x, t) = fresh;
                    }
                    continue;
                }
                double z = 0.0;
                for (std::size_t t = 0; t < nt; ++t) {
                    logw[t] = std::exp(logw[t] - peak);
                    z += logw[t];
                }
                for (std::size_t t = 0; t < nt; ++t) {
                    const double fresh = logw[t] / z;
                    max_change = std::max(max_change, std::abs(fresh - q(x, t)));
                    q(x, t) = fresh;
                }
            }
            iters = iter;
            if (observer) observer(iter, q);
            if (max_change < cfg.conv_tol) break;
        }

        for (double v : q.data) {
            if (!std::isfinite(v)) throw NonFinite("solver produced a non-finite encoder");
        }
        Encoder cand{std::move(q), hp, {iters, 0.0, restart}};
        const double obj = objective_value(source, cand, hp, LogUnit::Nats);
        if (!std::isfinite(obj)) throw NonFinite("solver objective is non-finite");
        cand.diag.final_objective = obj;
        if (!have_best || obj < best_obj) {  // ties keep the earliest restart
            best = std::move(cand);
            best_obj = obj;
            have_best = true;
        }
    }
    return best;
}

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw OutOfRange(std::string(what) + " must be positive and finite");
    }
}

}  // namespace

Encoder solve_classical(const JointPMF& source, double lambda,
                        const SolverConfig& config, const IterationObserver& observer) {
    require_positive(lambda, "lambda");
    return solve_core(source, 1.0, lambda, classical_point(lambda), config, observer);
}

Encoder solve_deterministic(const JointPMF& source, double gamma, double beta,
                            const SolverConfig& config, const IterationObserver& observer) {
    require_positive(beta, "beta");
    if (!(gamma > 0.0 && gamma <= 1.0)) {
        throw OutOfRange("deterministic solver needs gamma in (0, 1]");
    }
    return solve_core(source, gamma, beta, deterministic_point(gamma, beta), config,
                      observer);
}

Encoder solve_ibkd(const JointPMF& source, double lambda, const SolverConfig& config,
                   const IterationObserver& observer) {
    require_positive(lambda, "lambda");
    return solve_core(source, 1.0, 1.0 / lambda, ibkd_point(lambda), config, observer);
}

double objective_value(const JointPMF& source, const Encoder& encoder,
                       const HyperparameterPoint& hp, LogUnit unit) {
    hp.validate();
    const ComposeResult joints = compose(source, encoder);
    const double i_ty = exact_mi(joints.ty, unit);
    const double i_xt = exact_mi(joints.xt, unit);
    switch (hp.variant) {
        case IbVariant::Classical:
            return i_xt - hp.lambda() * i_ty;
        case IbVariant::Deterministic: {
            const std::vector<double> pt = joints.xt.marginal_v();
            const double h_t = exact_entropy(pt, unit);
            const double h_t_given_x =
                exact_cond_entropy(joints.xt, CondDirection::VGivenU, unit);
            return h_t - hp.gamma() * h_t_given_x - hp.beta() * i_ty;
        }
        case IbVariant::Ibkd:
            return -i_ty + hp.lambda() * i_xt;
    }
    throw OutOfRange("unknown hyperparameter variant");
}

namespace {

std::vector<double> log_spaced(double lo, double hi, std::size_t count) {
    if (!(lo > 0.0) || !(hi > 0.0)) throw OutOfRange("log-spaced axis needs positive endpoints");
    if (hi < lo) throw OutOfRange("log-spaced axis needs hi >= lo");
    if (count < 1) throw OutOfRange("log-spaced axis needs count >= 1");
    if (count == 1) return {lo};
    if (hi == lo) throw OutOfRange("log-spaced axis with count > 1 needs hi > lo");
    std::vector<double> out(count);
    const double llo = std::log(lo);
    const double lhi = std::log(hi);
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = std::exp(llo + (lhi - llo) * static_cast<double>(i) /
                                    static_cast<double>(count - 1));
    }
    out.front() = lo;
    out.back() = hi;
    return out;
}

std::string axis_label(double lo, double hi, std::size_t count) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "log:%g:%g:%zu", lo, hi, count);
    return buf;
}

}  // namespace

CandidateGrid log_spaced_grid(IbVariant variant, double lo, double hi, std::size_t count) {
    if (variant == IbVariant::Deterministic) {
        throw OutOfRange("deterministic grids need two axes; use log_spaced_grid_2d");
    }
    CandidateGrid grid;
    grid.provenance = axis_label(lo, hi, count);
    for (double v : log_spaced(lo, hi, count)) {
        grid.points.push_back({variant, {v}});
        grid.points.back().validate();
    }
    return grid;
}

CandidateGrid log_spaced_grid_2d(double gamma_lo, double gamma_hi, std::size_t gamma_count,
                                 double beta_lo, double beta_hi, std::size_t beta_count) {
    CandidateGrid grid;
    grid.provenance = axis_label(gamma_lo, gamma_hi, gamma_count) + " x " +
                      axis_label(beta_lo, beta_hi, beta_count);
    const std::vector<double> gammas = log_spaced(gamma_lo, gamma_hi, gamma_count);
    const std::vector<double> betas = log_spaced(beta_lo, beta_hi, beta_count);
    for (double g : gammas) {
        for (double b : betas) {
            grid.points.push_back(deterministic_point(g, b));
            grid.points.back().validate();
        }
    }
    return grid;
}

Encoder solve_point(const JointPMF& source, const HyperparameterPoint& hp,
                    const SolverConfig& config) {
    hp.validate();
    switch (hp.variant) {
        case IbVariant::Classical:
            return solve_classical(source, hp.lambda(), config);
        case IbVariant::Deterministic:
            return solve_deterministic(source, hp.gamma(), hp.beta(), config);
        case IbVariant::Ibkd:
            return solve_ibkd(source, hp.lambda(), config);
    }
    throw OutOfRange("unknown hyperparameter variant");
}

std::vector<Encoder> train_grid(const JointPMF& source, const CandidateGrid& grid,
                                const SolverConfig& config, unsigned workers) {
    if (grid.points.empty()) throw EmptyInput("candidate grid is empty");
    std::vector<Encoder> out(grid.points.size());
    parallel_for_indexed(grid.points.size(), workers, [&](std::size_t i) {
        SolverConfig point_cfg = config;
        point_cfg.seed = derive_seed(config.seed, "grid_point", i);
        out[i] = solve_point(source, grid.points[i], point_cfg);
    });
    return out;
}

}  // namespace ibcal
