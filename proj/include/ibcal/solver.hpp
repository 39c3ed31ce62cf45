#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ibcal/prob.hpp"

namespace ibcal {

struct SolverConfig {
    std::size_t t_size = 2;          // |T|
    std::size_t max_iters = 2000;
    double conv_tol = 1e-8;          // max absolute row-entry change
    std::size_t restarts = 5;
    double init_concentration = 1.0; // Dirichlet concentration for row init
    std::uint64_t seed = 0;
};

// Called with the encoder rows after every full update; used by tests to
// audit per-iteration behavior.
using IterationObserver = std::function<void(std::size_t iter, const Mat& rows)>;

/**
 * Self-consistent iterations for the objective I(X;T) - lambda I(T;Y):
 *
 *   q(t)   <- sum_x p(x) q(t|x)
 *   q(y|t) <- sum_x p(x,y) q(t|x) / q(t)
 *   q(t|x) ~  q(t) exp(-lambda KL(p(y|x) || q(y|t)))
 *
 * run to convergence or max_iters, best of `restarts` Dirichlet-initialized
 * runs by the exact objective on the source distribution. Clusters whose
 * marginal drops below 1e-12 get a uniform q(y|t) for the update step, which
 * keeps the iteration finite without deleting them.
 */
Encoder solve_classical(const JointPMF& source, double lambda,
                        const SolverConfig& config,
                        const IterationObserver& observer = {});

/**
 * Generalized update for the objective H(T) - gamma H(T|X) - beta I(T;Y):
 *
 *   q(t|x) ~ exp( (1/gamma) [ log q(t) - beta KL(p(y|x) || q(y|t)) ] ).
 *
 * gamma = 1 shares every fixed point (and every iterate) with
 * solve_classical at lambda = beta; gamma -> 0 sharpens rows toward
 * deterministic assignments.
 */
Encoder solve_deterministic(const JointPMF& source, double gamma, double beta,
                            const SolverConfig& config,
                            const IterationObserver& observer = {});

// Minimizes -I(T;Y) + lambda I(X;T), which shares minimizers with the
// classical objective at multiplier 1/lambda; delegates accordingly.
Encoder solve_ibkd(const JointPMF& source, double lambda,
                   const SolverConfig& config,
                   const IterationObserver& observer = {});

// Exact objective of `encoder` on `source` under the point's variant.
double objective_value(const JointPMF& source, const Encoder& encoder,
                       const HyperparameterPoint& hp, LogUnit unit = LogUnit::Nats);

// Pre-selected candidate set; must be built without access to calibration
// data for the downstream statistical guarantees to hold.
struct CandidateGrid {
    std::vector<HyperparameterPoint> points;
    std::string provenance;
};

// count log-spaced one-parameter points in [lo, hi] (classical or ibkd).
CandidateGrid log_spaced_grid(IbVariant variant, double lo, double hi,
                              std::size_t count);

// Cartesian product of log-spaced gamma and beta axes, gamma-major order.
CandidateGrid log_spaced_grid_2d(double gamma_lo, double gamma_hi,
                                 std::size_t gamma_count, double beta_lo,
                                 double beta_hi, std::size_t beta_count);

Encoder solve_point(const JointPMF& source, const HyperparameterPoint& hp,
                    const SolverConfig& config);

// One encoder per grid point, each solved with a seed derived from
// (config.seed, point index); safe to parallelize, identical results for
// any worker count.
std::vector<Encoder> train_grid(const JointPMF& source, const CandidateGrid& grid,
                                const SolverConfig& config, unsigned workers = 1);

}  // namespace ibcal
