#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ibcal/prob.hpp"
#include "ibcal/select.hpp"
#include "ibcal/solver.hpp"

namespace ibcal {

// Synthetic source descriptor; realize() is a pure function of the fields.
struct SourceSpec {
    enum class Kind { Dsbs, Dirichlet, Matrix };
    Kind kind = Kind::Dsbs;
    double crossover = 0.1;      // dsbs
    std::size_t nu = 2;          // dirichlet
    std::size_t nv = 2;
    double concentration = 1.0;
    std::uint64_t seed = 0;
    Mat mass;                    // matrix

    JointPMF realize() const;
};

// One axis of a hyperparameter grid, log-spaced.
struct GridAxis {
    double lo = 1e-4;
    double hi = 1.0;
    std::size_t count = 10;
};

struct GridSpec {
    IbVariant variant = IbVariant::Classical;
    GridAxis axis;        // lambda, or gamma for the deterministic variant
    GridAxis beta_axis;   // deterministic only

    CandidateGrid realize() const;
};

enum class TrialMode { ResplitFixedCalibration, RedrawCalibration };

const char* trial_mode_name(TrialMode m);
TrialMode parse_trial_mode(std::string_view s);

struct ExperimentConfig {
    SourceSpec source;
    GridSpec grid;
    SolverConfig solver;           // solver.seed is ignored; derived from master_seed
    std::size_t n_train = 0;       // 0: solvers see the exact source distribution;
                                   // otherwise they see a training draw of this size
    std::size_t n_cal = 20000;
    double opt_fraction = 0.5;     // share of the calibration set used for ordering
    std::optional<double> alpha;   // empty -> midpoint of the achievable exact range
    double delta = 0.1;
    std::size_t trials = 200;
    TrialMode mode = TrialMode::RedrawCalibration;
    std::uint64_t master_seed = 0;
    LogUnit unit = LogUnit::Nats;

    std::size_t n_opt() const;  // validated split sizes
    std::size_t n_mht() const;
};

// Pinned desk-scale validation setup: 8x4 Dirichlet(1) source, |T| = 4,
// 30 log-spaced lambdas spanning [1e-3, 10^1.5], 20k calibration pairs split
// evenly, delta = 0.1, alpha at the midpoint of the trained grid's exact
// achievable range, 200 redraw trials.
ExperimentConfig reference_config();

struct MethodResult {
    bool abstained = true;
    std::optional<HyperparameterPoint> hp;
    std::size_t grid_index = 0;
    double exact_i_ty = 0.0;
    double exact_i_xt = 0.0;
    bool violated = false;  // exact_i_ty < alpha; meaningful only when not abstained
};

struct TrialRecord {
    std::size_t index = 0;
    MethodResult mht;
    MethodResult conventional;
    std::uint64_t cal_seed = 0;
    std::uint64_t split_seed = 0;
    std::uint64_t mht_seed = 0;
    std::uint64_t conv_seed = 0;
};

struct MethodSummary {
    std::size_t trials = 0;
    std::size_t abstentions = 0;
    std::size_t violations = 0;   // among non-abstaining trials
    double outage_rate = 0.0;     // violations / non-abstaining (0 when none)
    double abstention_rate = 0.0;
    double mean_i_ty = 0.0;       // exact values of the chosen encoders
    double std_i_ty = 0.0;        // population std; 0 when fewer than one value
    double mean_i_xt = 0.0;
    double std_i_xt = 0.0;
};

struct SummaryStats {
    MethodSummary mht;
    MethodSummary conventional;
    double alpha = 0.0;
    double delta = 0.0;
    std::size_t trials = 0;
    LogUnit unit = LogUnit::Nats;
};

// Everything fixed before the trial loop: the realized source, the encoder
// family trained once from the derived seed, their exact MI pairs, and the
// resolved threshold.
struct ExperimentPlan {
    JointPMF source;
    std::vector<Encoder> encoders;
    std::vector<std::pair<double, double>> exact_pairs;  // (I(T;Y), I(X;T)) per encoder
    double alpha = 0.0;
};

ExperimentPlan prepare_experiment(const ExperimentConfig& config, unsigned workers = 1);

struct CalibrationSplit {
    SampleSet opt;
    SampleSet mht;
    std::uint64_t cal_seed = 0;
    std::uint64_t split_seed = 0;
};

// Redraw mode draws a fresh calibration set per trial; resplit mode reuses
// one fixed draw and only permutes the partition.
CalibrationSplit draw_calibration(const ExperimentConfig& config, const JointPMF& source,
                                  std::size_t trial_index);

TrialRecord run_trial(const ExperimentConfig& config, const ExperimentPlan& plan,
                      std::size_t trial_index);

struct ExperimentResult {
    std::vector<TrialRecord> records;
    SummaryStats summary;       // streamed aggregation over trial order
    double alpha = 0.0;         // resolved threshold
    std::vector<Encoder> encoders;
    std::vector<std::pair<double, double>> exact_pairs;
};

ExperimentResult run_experiment(const ExperimentConfig& config, unsigned workers = 1);

// Independent two-pass recomputation of the summary from the records; must
// agree with the streamed aggregation to 1e-12.
SummaryStats summarize(std::span<const TrialRecord> records, double alpha, double delta,
                       LogUnit unit);

// Fraction of `trials` simulated datasets of size n, drawn from the exact
// feature joint, whose plug-in estimate overshoots the true value by more
// than the bound at level epsilon. Must come out <= epsilon.
double coverage_check(const JointPMF& source, const Encoder& encoder, double epsilon,
                      std::size_t n, std::size_t trials, std::uint64_t seed);

// Per-level exceedance rates Pr[p <= u] for a true-null encoder; throws
// NotANull when the encoder's exact I(T;Y) already clears alpha.
std::vector<double> pvalue_validity_check(const JointPMF& source, const Encoder& encoder,
                                          double alpha, std::size_t n, std::size_t trials,
                                          std::span<const double> levels,
                                          std::uint64_t seed);

}  // namespace ibcal
