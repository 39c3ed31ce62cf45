#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ibcal/prob.hpp"
#include "ibcal/unit.hpp"

namespace ibcal {

// Per-candidate record accumulated by the selection pipeline. The *_opt
// estimates come from the optimization split, the *_mht fields from the
// testing split, and the *_true fields hold exact ground-truth values when
// the caller knows the source distribution.
struct CandidateEvaluation {
    HyperparameterPoint hp;
    std::size_t grid_index = 0;
    double i_ty_opt = 0.0;
    double i_xt_opt = 0.0;
    std::optional<double> i_ty_mht;
    std::optional<double> i_xt_mht;
    std::optional<double> p_val;
    std::optional<double> i_ty_true;
    std::optional<double> i_xt_true;
};

struct SelectionAudit {
    double alpha = 0.0;
    double delta = 0.0;
    std::size_t n_opt = 0;
    std::size_t n_mht = 0;
    std::uint64_t seed = 0;
    LogUnit unit = LogUnit::Nats;
};

struct SelectionOutcome {
    std::vector<CandidateEvaluation> ordered_front;  // tested order
    std::size_t rejected_count = 0;                  // prefix of ordered_front
    std::optional<std::size_t> chosen;               // index into ordered_front
    SelectionAudit audit;

    bool abstained() const { return !chosen.has_value(); }
    const CandidateEvaluation& chosen_eval() const;
};

// Rollout on `samples`, then plug-in MI of the (T,Y) and (X,T) histograms.
// Returns {I(T;Y) estimate, I(X;T) estimate}.
std::pair<double, double> estimate_pair(const Encoder& encoder,
                                        const SampleSet& samples,
                                        std::uint64_t seed,
                                        LogUnit unit = LogUnit::Nats);

/**
 * Indices (in input order) of the candidates not dominated in the plane
 * (i_ty_opt maximize, i_xt_opt minimize). A candidate is dominated when
 * another one is at least as informative and at most as costly, strictly
 * better in one of the two; exact duplicates are all retained.
 */
std::vector<std::size_t> pareto_front(std::span<const CandidateEvaluation> evals);

// Sorts by i_ty_opt descending; ties by i_xt_opt ascending, then by grid
// index ascending.
std::vector<CandidateEvaluation> order_candidates(std::vector<CandidateEvaluation> front);

// Length of the maximal prefix whose members all satisfy p <= delta;
// testing stops at the first failure.
std::size_t fixed_sequence_test(std::span<const CandidateEvaluation> ordered,
                                double delta);

/**
 * Full selection pipeline over a pre-trained encoder family:
 *
 *  1. estimate (I(T;Y), I(X;T)) pairs for every encoder on d_opt;
 *  2. Pareto-filter and order the candidates using only those estimates;
 *  3. for each front member, one fresh rollout on d_mht supplies both the
 *     I(T;Y) estimate behind its p-value (alphabet sizes (|T|,|Y|),
 *     n = |d_mht|) and the I(X;T) estimate used for the final choice;
 *  4. fixed sequence testing at level delta yields the rejected prefix;
 *  5. the prefix member with the smallest I(X;T) estimate wins (ties:
 *     smaller p-value, then earlier position); an empty prefix means the
 *     procedure abstains.
 *
 * The ordering never looks at d_mht, and the whole run is a pure function
 * of (encoders, d_opt, d_mht, alpha, delta, seed).
 */
SelectionOutcome mht_select(std::span<const Encoder> encoders, const SampleSet& d_opt,
                            const SampleSet& d_mht, double alpha, double delta,
                            std::uint64_t seed, LogUnit unit = LogUnit::Nats);

// Baseline selector: estimates both MIs per encoder on the full data set,
// then picks the smallest I(X;T) estimate among candidates whose I(T;Y)
// estimate clears alpha. No statistical safeguard.
struct ConventionalResult {
    std::optional<std::size_t> chosen;  // index into `evals` == grid index
    std::vector<CandidateEvaluation> evals;

    bool abstained() const { return !chosen.has_value(); }
};

ConventionalResult select_conventional(std::span<const Encoder> encoders,
                                       const SampleSet& data, double alpha,
                                       std::uint64_t seed,
                                       LogUnit unit = LogUnit::Nats);

}  // namespace ibcal
