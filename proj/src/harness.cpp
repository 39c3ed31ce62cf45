#include "ibcal/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ibcal/mi_bound.hpp"
#include "ibcal/parallel.hpp"
#include "ibcal/rng.hpp"

namespace ibcal {

JointPMF SourceSpec::realize() const {
    switch (kind) {
        case Kind::Dsbs:
            return dsbs(crossover);
        case Kind::Dirichlet:
            return random_joint(nu, nv, concentration, seed);
        case Kind::Matrix:
            return JointPMF::from_matrix(mass);
    }
    throw OutOfRange("unknown source kind");
}

CandidateGrid GridSpec::realize() const {
    if (variant == IbVariant::Deterministic) {
        return log_spaced_grid_2d(axis.lo, axis.hi, axis.count, beta_axis.lo,
                                  beta_axis.hi, beta_axis.count);
    }
    return log_spaced_grid(variant, axis.lo, axis.hi, axis.count);
}

const char* trial_mode_name(TrialMode m) {
    return m == TrialMode::ResplitFixedCalibration ? "resplit" : "redraw";
}

TrialMode parse_trial_mode(std::string_view s) {
    if (s == "resplit") return TrialMode::ResplitFixedCalibration;
    if (s == "redraw") return TrialMode::RedrawCalibration;
    throw SchemaError("unknown trial mode: '" + std::string(s) +
                      "' (expected resplit or redraw)");
}

std::size_t ExperimentConfig::n_opt() const {
    if (!(opt_fraction > 0.0 && opt_fraction < 1.0)) {
        throw OutOfRange("opt_fraction must lie strictly inside (0, 1)");
    }
    const auto n = static_cast<std::size_t>(
        std::floor(static_cast<double>(n_cal) * opt_fraction + 0.5));
    if (n < 1 || n >= n_cal) {
        throw OutOfRange("split leaves an empty calibration subset");
    }
    return n;
}

std::size_t ExperimentConfig::n_mht() const { return n_cal - n_opt(); }

ExperimentConfig reference_config() {
    ExperimentConfig cfg;
    cfg.source.kind = SourceSpec::Kind::Dirichlet;
    cfg.source.nu = 8;
    cfg.source.nv = 4;
    cfg.source.concentration = 1.0;
    cfg.source.seed = 7;
    cfg.grid.variant = IbVariant::Classical;
    cfg.grid.axis = {1e-3, 31.622776601683793, 30};
    cfg.solver.t_size = 4;
    cfg.n_cal = 20000;
    cfg.opt_fraction = 0.5;
    cfg.alpha.reset();  // midpoint of the achievable exact range
    cfg.delta = 0.1;
    cfg.trials = 200;
    cfg.mode = TrialMode::RedrawCalibration;
    cfg.master_seed = 1234;
    cfg.unit = LogUnit::Nats;
    return cfg;
}

ExperimentPlan prepare_experiment(const ExperimentConfig& config, unsigned workers) {
    if (config.trials < 1) throw OutOfRange("experiment needs trials >= 1");
    if (!(config.delta > 0.0 && config.delta < 1.0)) {
        throw OutOfRange("experiment needs delta in (0, 1)");
    }
    (void)config.n_opt();  // validates the split sizes

    ExperimentPlan plan{config.source.realize(), {}, {}, 0.0};
    SolverConfig solver = config.solver;
    solver.seed = derive_seed(config.master_seed, "train_grid", 0);
    if (config.n_train > 0) {
        // Solvers only see the empirical training distribution; exact MI
        // audits below still use the true source.
        const SampleSet training = sample_pairs(
            plan.source, config.n_train,
            derive_seed(config.master_seed, "train_draw", 0));
        plan.encoders =
            train_grid(normalized(histogram(training)), config.grid.realize(), solver,
                       workers);
    } else {
        plan.encoders = train_grid(plan.source, config.grid.realize(), solver, workers);
    }

    plan.exact_pairs.reserve(plan.encoders.size());
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const Encoder& enc : plan.encoders) {
        const ComposeResult joints = compose(plan.source, enc);
        const double ty = exact_mi(joints.ty, config.unit);
        const double xt = exact_mi(joints.xt, config.unit);
        plan.exact_pairs.emplace_back(ty, xt);
        lo = std::min(lo, ty);
        hi = std::max(hi, ty);
    }
    plan.alpha = config.alpha ? *config.alpha : 0.5 * (lo + hi);
    if (plan.alpha < 0.0) throw OutOfRange("resolved alpha is negative");
    return plan;
}

namespace {

SampleSet take(const SampleSet& all, const std::uint32_t* idx, std::size_t count) {
    SampleSet out;
    out.nu = all.nu;
    out.nv = all.nv;
    out.seed = all.seed;
    out.pairs.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.pairs.push_back(all.pairs[idx[i]]);
    return out;
}

MethodResult fill_method(const std::optional<std::size_t>& grid_index,
                         const std::optional<HyperparameterPoint>& hp,
                         const ExperimentPlan& plan) {
    MethodResult m;
    if (!grid_index) return m;
    m.abstained = false;
    m.grid_index = *grid_index;
    m.hp = hp;
    m.exact_i_ty = plan.exact_pairs[*grid_index].first;
    m.exact_i_xt = plan.exact_pairs[*grid_index].second;
    m.violated = m.exact_i_ty < plan.alpha;
    return m;
}

// Streaming accumulator (Welford) for one method.
struct MethodAccumulator {
    std::size_t trials = 0;
    std::size_t abstentions = 0;
    std::size_t violations = 0;
    std::size_t kept = 0;
    double mean_ty = 0.0, m2_ty = 0.0;
    double mean_xt = 0.0, m2_xt = 0.0;

    void add(const MethodResult& r) {
        ++trials;
        if (r.abstained) {
            ++abstentions;
            return;
        }
        if (r.violated) ++violations;
        ++kept;
        const double k = static_cast<double>(kept);
        double d = r.exact_i_ty - mean_ty;
        mean_ty += d / k;
        m2_ty += d * (r.exact_i_ty - mean_ty);
        d = r.exact_i_xt - mean_xt;
        mean_xt += d / k;
        m2_xt += d * (r.exact_i_xt - mean_xt);
    }

    MethodSummary finish() const {
        MethodSummary s;
        s.trials = trials;
        s.abstentions = abstentions;
        s.violations = violations;
        s.outage_rate = kept == 0 ? 0.0
                                  : static_cast<double>(violations) /
                                        static_cast<double>(kept);
        s.abstention_rate = trials == 0 ? 0.0
                                        : static_cast<double>(abstentions) /
                                              static_cast<double>(trials);
        if (kept > 0) {
            s.mean_i_ty = mean_ty;
            s.mean_i_xt = mean_xt;
            s.std_i_ty = std::sqrt(m2_ty / static_cast<double>(kept));
            s.std_i_xt = std::sqrt(m2_xt / static_cast<double>(kept));
        }
        return s;
    }
};

MethodSummary recompute_method(std::span<const TrialRecord> records, bool mht_side) {
    MethodSummary s;
    s.trials = records.size();
    std::vector<double> ty;
    std::vector<double> xt;
    for (const TrialRecord& r : records) {
        const MethodResult& m = mht_side ? r.mht : r.conventional;
        if (m.abstained) {
            ++s.abstentions;
            continue;
        }
        if (m.violated) ++s.violations;
        ty.push_back(m.exact_i_ty);
        xt.push_back(m.exact_i_xt);
    }
    const std::size_t kept = ty.size();
    s.outage_rate =
        kept == 0 ? 0.0 : static_cast<double>(s.violations) / static_cast<double>(kept);
    s.abstention_rate = s.trials == 0 ? 0.0
                                      : static_cast<double>(s.abstentions) /
                                            static_cast<double>(s.trials);
    if (kept > 0) {
        const double n = static_cast<double>(kept);
        s.mean_i_ty = std::accumulate(ty.begin(), ty.end(), 0.0) / n;
        s.mean_i_xt = std::accumulate(xt.begin(), xt.end(), 0.0) / n;
        double acc_ty = 0.0;
        double acc_xt = 0.0;
        for (std::size_t i = 0; i < kept; ++i) {
            acc_ty += (ty[i] - s.mean_i_ty) * (ty[i] - s.mean_i_ty);
            acc_xt += (xt[i] - s.mean_i_xt) * (xt[i] - s.mean_i_xt);
        }
        s.std_i_ty = std::sqrt(acc_ty / n);
        s.std_i_xt = std::sqrt(acc_xt / n);
    }
    return s;
}

}  // namespace

CalibrationSplit draw_calibration(const ExperimentConfig& config, const JointPMF& source,
                                  std::size_t trial_index) {
    const std::size_t n_opt = config.n_opt();
    CalibrationSplit split;
    if (config.mode == TrialMode::RedrawCalibration) {
        // Fresh i.i.d. draw per trial; a prefix split of an i.i.d. draw is
        // itself a uniform disjoint split.
        split.cal_seed = derive_seed(config.master_seed, "cal_draw", trial_index);
        const SampleSet all = sample_pairs(source, config.n_cal, split.cal_seed);
        std::vector<std::uint32_t> idx(config.n_cal);
        std::iota(idx.begin(), idx.end(), 0u);
        split.opt = take(all, idx.data(), n_opt);
        split.mht = take(all, idx.data() + n_opt, config.n_cal - n_opt);
        return split;
    }
    // Fixed calibration set; only the partition varies across trials.
    split.cal_seed = derive_seed(config.master_seed, "cal_draw", 0);
    const SampleSet all = sample_pairs(source, config.n_cal, split.cal_seed);
    split.split_seed = derive_seed(config.master_seed, "resplit", trial_index);
    std::vector<std::uint32_t> idx(config.n_cal);
    std::iota(idx.begin(), idx.end(), 0u);
    Rng rng(split.split_seed);
    for (std::size_t i = config.n_cal - 1; i > 0; --i) {
        const std::size_t j = rng.below(i + 1);
        std::swap(idx[i], idx[j]);
    }
    split.opt = take(all, idx.data(), n_opt);
    split.mht = take(all, idx.data() + n_opt, config.n_cal - n_opt);
    split.opt.seed = split.split_seed;
    split.mht.seed = split.split_seed;
    return split;
}

TrialRecord run_trial(const ExperimentConfig& config, const ExperimentPlan& plan,
                      std::size_t trial_index) {
    TrialRecord rec;
    rec.index = trial_index;
    const CalibrationSplit split = draw_calibration(config, plan.source, trial_index);
    rec.cal_seed = split.cal_seed;
    rec.split_seed = split.split_seed;

    rec.mht_seed = derive_seed(config.master_seed, "mht_run", trial_index);
    const SelectionOutcome outcome =
        mht_select(plan.encoders, split.opt, split.mht, plan.alpha, config.delta,
                   rec.mht_seed, config.unit);
    if (outcome.chosen) {
        const CandidateEvaluation& ev = outcome.chosen_eval();
        rec.mht = fill_method(ev.grid_index, ev.hp, plan);
    }

    rec.conv_seed = derive_seed(config.master_seed, "conv_run", trial_index);
    SampleSet full = split.opt;
    full.pairs.insert(full.pairs.end(), split.mht.pairs.begin(), split.mht.pairs.end());
    const ConventionalResult conv =
        select_conventional(plan.encoders, full, plan.alpha, rec.conv_seed, config.unit);
    if (conv.chosen) {
        rec.conventional =
            fill_method(conv.chosen, conv.evals[*conv.chosen].hp, plan);
    }
    return rec;
}

ExperimentResult run_experiment(const ExperimentConfig& config, unsigned workers) {
    const ExperimentPlan plan = prepare_experiment(config, workers);
    ExperimentResult result;
    result.records.resize(config.trials);
    parallel_for_indexed(config.trials, workers, [&](std::size_t i) {
        result.records[i] = run_trial(config, plan, i);
    });

    // Deterministic fold over trial index order.
    MethodAccumulator mht_acc;
    MethodAccumulator conv_acc;
    for (const TrialRecord& rec : result.records) {
        mht_acc.add(rec.mht);
        conv_acc.add(rec.conventional);
    }
    result.summary.mht = mht_acc.finish();
    result.summary.conventional = conv_acc.finish();
    result.summary.alpha = plan.alpha;
    result.summary.delta = config.delta;
    result.summary.trials = config.trials;
    result.summary.unit = config.unit;
    result.alpha = plan.alpha;
    result.encoders = plan.encoders;
    result.exact_pairs = plan.exact_pairs;
    return result;
}

SummaryStats summarize(std::span<const TrialRecord> records, double alpha, double delta,
                       LogUnit unit) {
    SummaryStats s;
    s.mht = recompute_method(records, true);
    s.conventional = recompute_method(records, false);
    s.alpha = alpha;
    s.delta = delta;
    s.trials = records.size();
    s.unit = unit;
    return s;
}

double coverage_check(const JointPMF& source, const Encoder& encoder, double epsilon,
                      std::size_t n, std::size_t trials, std::uint64_t seed) {
    if (trials < 100) throw OutOfRange("coverage_check needs at least 100 trials");
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw OutOfRange("coverage_check needs epsilon in (0, 1)");
    }
    const JointPMF ty = compose(source, encoder).ty;
    const double exact = exact_mi(ty);
    const BoundParams bp{n, ty.nu(), ty.nv(), LogUnit::Nats};
    const double bound = delta_i_envelope(theta(epsilon, bp), bp);
    std::size_t violations = 0;
    for (std::size_t r = 0; r < trials; ++r) {
        const SampleSet s = sample_pairs(ty, n, derive_seed(seed, "coverage", r));
        if (plugin_mi(histogram(s)) - exact > bound) ++violations;
    }
    return static_cast<double>(violations) / static_cast<double>(trials);
}

std::vector<double> pvalue_validity_check(const JointPMF& source, const Encoder& encoder,
                                          double alpha, std::size_t n, std::size_t trials,
                                          std::span<const double> levels,
                                          std::uint64_t seed) {
    if (trials < 1) throw OutOfRange("pvalue_validity_check needs trials >= 1");
    const JointPMF ty = compose(source, encoder).ty;
    const double exact = exact_mi(ty);
    if (exact >= alpha) {
        throw NotANull("encoder's exact I(T;Y) already meets alpha; not a null case");
    }
    const BoundParams bp{n, ty.nu(), ty.nv(), LogUnit::Nats};
    std::vector<std::size_t> hits(levels.size(), 0);
    for (std::size_t r = 0; r < trials; ++r) {
        const SampleSet s = sample_pairs(ty, n, derive_seed(seed, "pvalue_null", r));
        const double p = p_value(plugin_mi(histogram(s)), alpha, bp);
        for (std::size_t i = 0; i < levels.size(); ++i) {
            if (p <= levels[i]) ++hits[i];
        }
    }
    std::vector<double> rates(levels.size());
    for (std::size_t i = 0; i < levels.size(); ++i) {
        rates[i] = static_cast<double>(hits[i]) / static_cast<double>(trials);
    }
    return rates;
}

}  // namespace ibcal
