#include "ibcal/select.hpp"

#include <algorithm>
#include <limits>

#include "ibcal/mi_bound.hpp"
#include "ibcal/rng.hpp"

namespace ibcal {

const CandidateEvaluation& SelectionOutcome::chosen_eval() const {
    if (!chosen) throw EmptyInput("selection abstained; no chosen candidate");
    return ordered_front[*chosen];
}

std::pair<double, double> estimate_pair(const Encoder& encoder, const SampleSet& samples,
                                        std::uint64_t seed, LogUnit unit) {
    const RolloutResult r = rollout(samples, encoder, seed);
    return {plugin_mi(histogram(r.ty), unit), plugin_mi(histogram(r.xt), unit)};
}

std::vector<std::size_t> pareto_front(std::span<const CandidateEvaluation> evals) {
    if (evals.empty()) throw EmptyInput("pareto_front needs at least one candidate");
    std::vector<std::size_t> order(evals.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (evals[a].i_ty_opt != evals[b].i_ty_opt) {
            return evals[a].i_ty_opt > evals[b].i_ty_opt;
        }
        return evals[a].i_xt_opt < evals[b].i_xt_opt;
    });
    std::vector<std::size_t> kept;
    // Sweep groups of equal informativeness. A member survives when it
    // matches its group's minimum cost and strictly beats the best cost
    // among strictly more informative candidates.
    double best_above = std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        double group_min = std::numeric_limits<double>::infinity();
        while (j < order.size() &&
               evals[order[j]].i_ty_opt == evals[order[i]].i_ty_opt) {
            group_min = std::min(group_min, evals[order[j]].i_xt_opt);
            ++j;
        }
        for (std::size_t k = i; k < j; ++k) {
            const double cost = evals[order[k]].i_xt_opt;
            if (cost == group_min && cost < best_above) kept.push_back(order[k]);
        }
        best_above = std::min(best_above, group_min);
        i = j;
    }
    std::sort(kept.begin(), kept.end());
    return kept;
}

std::vector<CandidateEvaluation> order_candidates(std::vector<CandidateEvaluation> front) {
    std::sort(front.begin(), front.end(),
              [](const CandidateEvaluation& a, const CandidateEvaluation& b) {
                  if (a.i_ty_opt != b.i_ty_opt) return a.i_ty_opt > b.i_ty_opt;
                  if (a.i_xt_opt != b.i_xt_opt) return a.i_xt_opt < b.i_xt_opt;
                  return a.grid_index < b.grid_index;
              });
    return front;
}

std::size_t fixed_sequence_test(std::span<const CandidateEvaluation> ordered,
                                double delta) {
    if (!(delta > 0.0 && delta < 1.0)) {
        throw OutOfRange("fixed_sequence_test needs delta in (0, 1)");
    }
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        if (!ordered[i].p_val) {
            throw MissingPValue("ordered candidate " + std::to_string(i) +
                                " carries no p-value");
        }
        if (*ordered[i].p_val > delta) return i;
    }
    return ordered.size();
}

SelectionOutcome mht_select(std::span<const Encoder> encoders, const SampleSet& d_opt,
                            const SampleSet& d_mht, double alpha, double delta,
                            std::uint64_t seed, LogUnit unit) {
    if (encoders.empty()) throw EmptyInput("mht_select needs at least one encoder");
    if (alpha < 0.0) throw OutOfRange("mht_select needs alpha >= 0");
    if (!(delta > 0.0 && delta < 1.0)) throw OutOfRange("mht_select needs delta in (0, 1)");
    if (d_opt.nu != d_mht.nu || d_opt.nv != d_mht.nv) {
        throw DimensionMismatch("optimization and testing splits disagree on alphabets");
    }

    std::vector<CandidateEvaluation> evals(encoders.size());
    for (std::size_t i = 0; i < encoders.size(); ++i) {
        evals[i].hp = encoders[i].hp;
        evals[i].grid_index = i;
        const auto pair =
            estimate_pair(encoders[i], d_opt, derive_seed(seed, "opt_rollout", i), unit);
        evals[i].i_ty_opt = pair.first;
        evals[i].i_xt_opt = pair.second;
    }

    std::vector<CandidateEvaluation> front;
    for (std::size_t idx : pareto_front(evals)) front.push_back(evals[idx]);
    std::vector<CandidateEvaluation> ordered = order_candidates(std::move(front));

    for (CandidateEvaluation& ev : ordered) {
        const Encoder& enc = encoders[ev.grid_index];
        // One feature draw per data point serves both estimates.
        const RolloutResult r =
            rollout(d_mht, enc, derive_seed(seed, "mht_rollout", ev.grid_index));
        ev.i_ty_mht = plugin_mi(histogram(r.ty), unit);
        ev.i_xt_mht = plugin_mi(histogram(r.xt), unit);
        const BoundParams bp{d_mht.size(), enc.nt(), d_mht.nv, unit};
        ev.p_val = p_value(*ev.i_ty_mht, alpha, bp);
    }

    const std::size_t prefix = fixed_sequence_test(ordered, delta);
    std::optional<std::size_t> chosen;
    for (std::size_t i = 0; i < prefix; ++i) {
        if (!chosen) {
            chosen = i;
            continue;
        }
        const CandidateEvaluation& cur = ordered[i];
        const CandidateEvaluation& best = ordered[*chosen];
        if (*cur.i_xt_mht < *best.i_xt_mht ||
            (*cur.i_xt_mht == *best.i_xt_mht && *cur.p_val < *best.p_val)) {
            chosen = i;
        }
    }

    SelectionOutcome out;
    out.ordered_front = std::move(ordered);
    out.rejected_count = prefix;
    out.chosen = chosen;
    out.audit = {alpha, delta, d_opt.size(), d_mht.size(), seed, unit};
    return out;
}

ConventionalResult select_conventional(std::span<const Encoder> encoders,
                                       const SampleSet& data, double alpha,
                                       std::uint64_t seed, LogUnit unit) {
    if (encoders.empty()) throw EmptyInput("select_conventional needs at least one encoder");
    if (alpha < 0.0) throw OutOfRange("select_conventional needs alpha >= 0");
    ConventionalResult out;
    out.evals.resize(encoders.size());
    for (std::size_t i = 0; i < encoders.size(); ++i) {
        CandidateEvaluation& ev = out.evals[i];
        ev.hp = encoders[i].hp;
        ev.grid_index = i;
        const auto pair =
            estimate_pair(encoders[i], data, derive_seed(seed, "conv_rollout", i), unit);
        ev.i_ty_opt = pair.first;
        ev.i_xt_opt = pair.second;
        if (ev.i_ty_opt < alpha) continue;
        if (!out.chosen || ev.i_xt_opt < out.evals[*out.chosen].i_xt_opt) {
            out.chosen = i;
        }
    }
    return out;
}

}  // namespace ibcal
