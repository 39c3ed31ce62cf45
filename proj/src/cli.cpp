#include "ibcal/cli.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>

#include "CLI11.hpp"
#include "json.hpp"

#include "ibcal/harness.hpp"
#include "ibcal/io.hpp"
#include "ibcal/parallel.hpp"
#include "ibcal/rng.hpp"
#include "ibcal/version.hpp"

namespace ibcal::cli {

namespace {

using nlohmann::json;

int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const NonFinite& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
}

std::uint64_t hash_json(const json& j) { return io::hash_bytes(j.dump()); }

void print_source_stats(const JointPMF& pmf, LogUnit unit) {
    const char* u = unit_name(unit);
    std::printf("I(X;Y) = %.6f %s\n", exact_mi(pmf, unit), u);
    std::printf("H(X) = %.6f %s\n", exact_entropy(pmf.marginal_u(), unit), u);
    std::printf("H(Y) = %.6f %s\n", exact_entropy(pmf.marginal_v(), unit), u);
}

// Same grammar as the run-config grid axes, with errors tied to the flag.
GridAxis parse_axis_flag(const std::string& spec, const char* flag) {
    if (spec.rfind("log:", 0) != 0) {
        throw SchemaError(std::string(flag) + " must look like log:<lo>:<hi>:<count>");
    }
    std::vector<std::string> parts;
    std::size_t start = 4;
    while (true) {
        const std::size_t pos = spec.find(':', start);
        if (pos == std::string::npos) {
            parts.push_back(spec.substr(start));
            break;
        }
        parts.push_back(spec.substr(start, pos - start));
        start = pos + 1;
    }
    if (parts.size() != 3) {
        throw SchemaError(std::string(flag) + " must look like log:<lo>:<hi>:<count>");
    }
    GridAxis axis;
    axis.lo = io::parse_double(parts[0], flag);
    axis.hi = io::parse_double(parts[1], flag);
    const double count = io::parse_double(parts[2], flag);
    if (count < 1.0 || count != std::floor(count)) {
        throw SchemaError(std::string(flag) + ": count must be a positive integer");
    }
    axis.count = static_cast<std::size_t>(count);
    return axis;
}

}  // namespace

int cmd_gen_source(const GenSourceOptions& opt) {
    return guarded([&] {
        const LogUnit unit = parse_unit(opt.unit);
        SourceSpec spec;
        if (opt.kind == "dsbs") {
            if (!opt.p) throw SchemaError("gen-source --kind dsbs requires --p");
            spec.kind = SourceSpec::Kind::Dsbs;
            spec.crossover = *opt.p;
        } else if (opt.kind == "dirichlet") {
            if (!opt.sizes) throw SchemaError("gen-source --kind dirichlet requires --sizes");
            if (!opt.seed) {
                throw SchemaError("gen-source --kind dirichlet requires --seed "
                                  "(field 'seed' has no default)");
            }
            spec.kind = SourceSpec::Kind::Dirichlet;
            const auto comma = opt.sizes->find(',');
            if (comma == std::string::npos) {
                throw SchemaError("--sizes must look like <|U|>,<|V|>");
            }
            spec.nu = static_cast<std::size_t>(
                io::parse_double(opt.sizes->substr(0, comma), "--sizes"));
            spec.nv = static_cast<std::size_t>(
                io::parse_double(opt.sizes->substr(comma + 1), "--sizes"));
            spec.concentration = opt.concentration;
            spec.seed = *opt.seed;
        } else if (opt.kind == "matrix") {
            if (!opt.matrix) throw SchemaError("gen-source --kind matrix requires --matrix");
            spec.kind = SourceSpec::Kind::Matrix;
            spec.mass = io::load_pmf_csv(*opt.matrix).matrix();
        } else {
            throw SchemaError("unknown source kind: '" + opt.kind + "'");
        }

        const JointPMF pmf = spec.realize();
        io::FileMeta meta;
        meta.unit = unit;
        meta.config_hash = hash_json(json{{"cmd", "gen-source"},
                                          {"kind", opt.kind},
                                          {"p", opt.p ? json(*opt.p) : json(nullptr)},
                                          {"sizes", opt.sizes ? json(*opt.sizes) : json(nullptr)},
                                          {"concentration", opt.concentration},
                                          {"seed", opt.seed ? json(*opt.seed) : json(nullptr)},
                                          {"unit", opt.unit}});
        if (opt.seed) meta.seeds.emplace_back("source", *opt.seed);
        io::write_pmf_csv(opt.out, pmf, meta);
        print_source_stats(pmf, unit);
        return kExitOk;
    });
}

int cmd_gen_samples(const GenSamplesOptions& opt) {
    return guarded([&] {
        const LogUnit unit = parse_unit(opt.unit);
        const JointPMF pmf = io::load_source(opt.source);
        const SampleSet samples = sample_pairs(pmf, opt.n, opt.seed);
        io::FileMeta meta;
        meta.unit = unit;
        meta.config_hash = hash_json(json{{"cmd", "gen-samples"},
                                          {"source", opt.source.string()},
                                          {"n", opt.n},
                                          {"seed", opt.seed}});
        meta.seeds.emplace_back("draw", opt.seed);
        io::write_samples_csv(opt.out, samples, meta);
        std::printf("wrote %zu pairs over %zux%zu alphabets\n", samples.size(),
                    samples.nu, samples.nv);
        return kExitOk;
    });
}

int cmd_train_grid(const TrainGridOptions& opt) {
    return guarded([&] {
        const LogUnit unit = parse_unit(opt.unit);
        const JointPMF source = io::load_source(opt.source);
        const IbVariant variant = parse_variant(opt.variant);

        CandidateGrid grid;
        if (variant == IbVariant::Deterministic) {
            if (!opt.gamma_grid || !opt.beta_grid) {
                throw SchemaError("deterministic training requires --gamma-grid and --beta-grid");
            }
            const GridAxis g = parse_axis_flag(*opt.gamma_grid, "--gamma-grid");
            const GridAxis b = parse_axis_flag(*opt.beta_grid, "--beta-grid");
            grid = log_spaced_grid_2d(g.lo, g.hi, g.count, b.lo, b.hi, b.count);
        } else {
            if (!opt.grid) throw SchemaError("training requires --grid");
            const GridAxis a = parse_axis_flag(*opt.grid, "--grid");
            grid = log_spaced_grid(variant, a.lo, a.hi, a.count);
        }

        SolverConfig cfg;
        cfg.t_size = opt.t_size;
        cfg.max_iters = opt.max_iters;
        cfg.conv_tol = opt.conv_tol;
        cfg.restarts = opt.restarts;
        cfg.init_concentration = opt.init_concentration;
        cfg.seed = opt.seed;

        std::vector<Encoder> encoders =
            train_grid(source, grid, cfg, opt.workers == 0 ? default_workers() : opt.workers);
        // Diagnostics are computed in nats; the file carries the stamped unit.
        for (Encoder& e : encoders) e.diag.final_objective *= unit_factor(unit);

        io::FileMeta meta;
        meta.unit = unit;
        meta.config_hash = hash_json(json{{"cmd", "train-grid"},
                                          {"variant", opt.variant},
                                          {"grid", grid.provenance},
                                          {"t_size", opt.t_size},
                                          {"max_iters", opt.max_iters},
                                          {"conv_tol", opt.conv_tol},
                                          {"restarts", opt.restarts},
                                          {"init_concentration", opt.init_concentration},
                                          {"seed", opt.seed}});
        meta.seeds.emplace_back("solver", opt.seed);
        io::write_encoder_grid(opt.out, encoders, grid.provenance, meta);
        std::printf("trained %zu encoders (|X|=%zu, |T|=%zu)\n", encoders.size(),
                    encoders.front().nx(), encoders.front().nt());
        return kExitOk;
    });
}

int cmd_calibrate(const CalibrateOptions& opt) {
    return guarded([&] {
        const LogUnit unit = parse_unit(opt.unit);
        const JointPMF source = io::load_source(opt.source);
        const io::EncoderGridFile grid = io::load_encoder_grid(opt.grid);
        const SampleSet d_opt = io::load_samples_csv(opt.opt_samples);
        const SampleSet d_mht = io::load_samples_csv(opt.mht_samples);

        SelectionOutcome outcome = mht_select(grid.encoders, d_opt, d_mht, opt.alpha,
                                              opt.delta, opt.seed, unit);
        // Exact ground truth for the audit trail; the source is known here.
        for (CandidateEvaluation& ev : outcome.ordered_front) {
            const ComposeResult joints = compose(source, grid.encoders[ev.grid_index]);
            ev.i_ty_true = exact_mi(joints.ty, unit);
            ev.i_xt_true = exact_mi(joints.xt, unit);
        }

        std::optional<ConventionalResult> baseline;
        if (opt.baseline) {
            if (*opt.baseline != "conventional") {
                throw SchemaError("unknown baseline: '" + *opt.baseline + "'");
            }
            SampleSet full = d_opt;
            full.pairs.insert(full.pairs.end(), d_mht.pairs.begin(), d_mht.pairs.end());
            baseline = select_conventional(grid.encoders, full, opt.alpha,
                                           derive_seed(opt.seed, "baseline", 0), unit);
        }

        io::FileMeta meta;
        meta.unit = unit;
        meta.config_hash = hash_json(json{{"cmd", "calibrate"},
                                          {"alpha", opt.alpha},
                                          {"delta", opt.delta},
                                          {"seed", opt.seed},
                                          {"n_opt", d_opt.size()},
                                          {"n_mht", d_mht.size()},
                                          {"unit", opt.unit}});
        meta.seeds.emplace_back("selection", opt.seed);
        io::write_outcome_json(opt.out, outcome, baseline ? &*baseline : nullptr, meta);
        if (opt.csv) io::write_candidates_csv(*opt.csv, outcome, meta);

        if (baseline) {
            if (baseline->chosen) {
                std::printf("conventional baseline: %s\n",
                            baseline->evals[*baseline->chosen].hp.label().c_str());
            } else {
                std::printf("conventional baseline: abstained\n");
            }
        }
        if (outcome.abstained()) {
            std::printf("selection abstained: no candidate survived testing "
                        "(rejected set is empty)\n");
            return kExitAbstain;
        }
        std::printf("selected %s (p=%.6g, I(X;T) estimate %.6f %s)\n",
                    outcome.chosen_eval().hp.label().c_str(),
                    *outcome.chosen_eval().p_val, *outcome.chosen_eval().i_xt_mht,
                    unit_name(unit));
        return kExitOk;
    });
}

int cmd_simulate(const SimulateOptions& opt) {
    return guarded([&] {
        io::RunConfig rc = io::load_run_config(opt.config);
        if (opt.trials) rc.experiment.trials = *opt.trials;
        if (opt.mode) rc.experiment.mode = parse_trial_mode(*opt.mode);
        if (opt.workers) rc.workers = *opt.workers;
        if (opt.out_dir) rc.out_dir = *opt.out_dir;
        // Hash the effective experiment so overrides show up in artifacts;
        // worker counts and output paths stay out of it.
        rc.config_hash = io::config_hash(rc.experiment);

        const unsigned workers = rc.workers == 0 ? default_workers() : rc.workers;
        const ExperimentResult result = run_experiment(rc.experiment, workers);

        io::FileMeta meta;
        meta.unit = rc.experiment.unit;
        meta.config_hash = rc.config_hash;
        meta.seeds.emplace_back("master", rc.experiment.master_seed);

        io::write_trials_csv(rc.out_dir / "trials.csv", result.records, meta);
        io::write_summary_json(rc.out_dir / "summary.json", result.summary,
                               rc.experiment.mode, rc.experiment.master_seed, meta);
        io::write_scatter_csv(rc.out_dir / "scatter.csv", result.records, meta);

        if (!opt.quiet) {
            std::fputs(io::render_summary_table(result.summary).c_str(), stdout);
            std::printf("artifacts: %s\n", rc.out_dir.string().c_str());
        }
        return kExitOk;
    });
}

int cmd_report(const ReportOptions& opt) {
    return guarded([&] {
        const std::vector<TrialRecord> records = io::load_trials_csv(opt.trials);
        // Unknown unless a stored summary supplies them; the violated flags
        // in the records are authoritative either way.
        double alpha = std::numeric_limits<double>::quiet_NaN();
        double delta = std::numeric_limits<double>::quiet_NaN();
        LogUnit unit = LogUnit::Nats;
        std::optional<SummaryStats> stored;
        if (opt.summary) {
            stored = io::load_summary_json(*opt.summary);
            alpha = stored->alpha;
            delta = stored->delta;
            unit = stored->unit;
        }
        const SummaryStats recomputed = summarize(records, alpha, delta, unit);
        std::fputs(io::render_summary_table(recomputed).c_str(), stdout);
        if (stored) {
            auto mismatch = [](const char* name, double a, double b) -> const char* {
                return std::abs(a - b) > 1e-9 ? name : nullptr;
            };
            const MethodSummary* ours[2] = {&recomputed.mht, &recomputed.conventional};
            const MethodSummary* theirs[2] = {&stored->mht, &stored->conventional};
            for (int side = 0; side < 2; ++side) {
                const char* bad = nullptr;
                if (!bad) bad = mismatch("outage_rate", ours[side]->outage_rate, theirs[side]->outage_rate);
                if (!bad) bad = mismatch("abstention_rate", ours[side]->abstention_rate, theirs[side]->abstention_rate);
                if (!bad) bad = mismatch("mean_i_ty", ours[side]->mean_i_ty, theirs[side]->mean_i_ty);
                if (!bad) bad = mismatch("std_i_ty", ours[side]->std_i_ty, theirs[side]->std_i_ty);
                if (!bad) bad = mismatch("mean_i_xt", ours[side]->mean_i_xt, theirs[side]->mean_i_xt);
                if (!bad) bad = mismatch("std_i_xt", ours[side]->std_i_xt, theirs[side]->std_i_xt);
                if (ours[side]->trials != theirs[side]->trials) bad = "trials";
                if (ours[side]->abstentions != theirs[side]->abstentions) bad = "abstentions";
                if (ours[side]->violations != theirs[side]->violations) bad = "violations";
                if (bad) {
                    throw SchemaError(std::string("stored summary disagrees with the trial "
                                                  "records on field '") +
                                      bad + "' for method " +
                                      (side == 0 ? "mht" : "conventional"));
                }
            }
            std::printf("stored summary matches the trial records\n");
        }
        return kExitOk;
    });
}

int run(int argc, char** argv) {
    CLI::App app{"discrete information bottleneck solvers with statistically "
                 "safeguarded hyperparameter selection"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    GenSourceOptions gen_source;
    auto* gs = app.add_subcommand("gen-source", "write a source PMF file");
    gs->add_option("--kind", gen_source.kind, "dsbs | dirichlet | matrix")->required();
    gs->add_option("--p", gen_source.p, "dsbs crossover probability");
    gs->add_option("--sizes", gen_source.sizes, "dirichlet alphabet sizes, e.g. 8,4");
    gs->add_option("--concentration", gen_source.concentration, "dirichlet concentration");
    gs->add_option("--seed", gen_source.seed, "dirichlet seed");
    gs->add_option("--matrix", gen_source.matrix, "input CSV for kind=matrix");
    gs->add_option("--out", gen_source.out, "output PMF file")->required();
    gs->add_option("--unit", gen_source.unit, "nats | bits");

    GenSamplesOptions gen_samples;
    auto* gp = app.add_subcommand("gen-samples", "draw i.i.d. pairs from a source PMF");
    gp->add_option("--source", gen_samples.source, "source PMF file")->required();
    gp->add_option("--n", gen_samples.n, "number of pairs")->required();
    gp->add_option("--seed", gen_samples.seed, "draw seed")->required();
    gp->add_option("--out", gen_samples.out, "output sample CSV")->required();
    gp->add_option("--unit", gen_samples.unit, "nats | bits");

    TrainGridOptions train;
    auto* tg = app.add_subcommand("train-grid", "train one encoder per grid point");
    tg->add_option("--source", train.source, "source PMF file")->required();
    tg->add_option("--variant", train.variant, "classical | deterministic | ibkd");
    tg->add_option("--grid", train.grid, "lambda axis, log:<lo>:<hi>:<count>");
    tg->add_option("--gamma-grid", train.gamma_grid, "gamma axis (deterministic)");
    tg->add_option("--beta-grid", train.beta_grid, "beta axis (deterministic)");
    tg->add_option("--t-size", train.t_size, "|T|")->required();
    tg->add_option("--max-iters", train.max_iters, "iteration cap");
    tg->add_option("--tol", train.conv_tol, "convergence tolerance");
    tg->add_option("--restarts", train.restarts, "random restarts");
    tg->add_option("--init-concentration", train.init_concentration,
                   "Dirichlet init concentration");
    tg->add_option("--seed", train.seed, "solver seed")->required();
    tg->add_option("--workers", train.workers, "parallel workers (0 = auto)");
    tg->add_option("--out", train.out, "output encoder grid JSON")->required();
    tg->add_option("--unit", train.unit, "nats | bits");

    CalibrateOptions cal;
    auto* cb = app.add_subcommand("calibrate",
                                  "run the selection pipeline on calibration samples");
    cb->add_option("--source", cal.source, "source PMF file")->required();
    cb->add_option("--grid", cal.grid, "encoder grid JSON")->required();
    cb->add_option("--opt-samples", cal.opt_samples, "ordering split CSV")->required();
    cb->add_option("--mht-samples", cal.mht_samples, "testing split CSV")->required();
    cb->add_option("--alpha", cal.alpha, "informativeness threshold")->required();
    cb->add_option("--delta", cal.delta, "outage level in (0,1)")->required();
    cb->add_option("--seed", cal.seed, "rollout seed")->required();
    cb->add_option("--out", cal.out, "outcome JSON")->required();
    cb->add_option("--csv", cal.csv, "flat per-candidate CSV");
    cb->add_option("--baseline", cal.baseline, "also run a baseline: conventional");
    cb->add_option("--unit", cal.unit, "nats | bits");

    SimulateOptions sim;
    auto* sm = app.add_subcommand("simulate", "Monte Carlo guarantee validation");
    sm->add_option("--config", sim.config, "run config JSON")->required();
    sm->add_option("--trials", sim.trials, "override trial count");
    sm->add_option("--mode", sim.mode, "override mode: resplit | redraw");
    sm->add_option("--workers", sim.workers, "parallel workers (0 = auto)");
    sm->add_option("--out-dir", sim.out_dir, "override output directory");
    sm->add_flag("--quiet", sim.quiet, "suppress the summary table");

    ReportOptions rep;
    auto* rp = app.add_subcommand("report", "recompute a summary from a trials CSV");
    rp->add_option("--trials", rep.trials, "trials CSV")->required();
    rp->add_option("--summary", rep.summary, "stored summary JSON to cross-check");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    if (gs->parsed()) return cmd_gen_source(gen_source);
    if (gp->parsed()) return cmd_gen_samples(gen_samples);
    if (tg->parsed()) return cmd_train_grid(train);
    if (cb->parsed()) return cmd_calibrate(cal);
    if (sm->parsed()) return cmd_simulate(sim);
    if (rp->parsed()) return cmd_report(rep);
    return kExitConfig;
}

}  // namespace ibcal::cli
