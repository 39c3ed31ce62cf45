// Acceptance suite: every criterion prints one [PASS]/[FAIL] line with its
// measured detail and runtime. The process exits nonzero if any line fails.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "ibcal/cli.hpp"
#include "ibcal/harness.hpp"
#include "ibcal/io.hpp"
#include "ibcal/mi_bound.hpp"
#include "ibcal/rng.hpp"
#include "ibcal/select.hpp"
#include "ibcal/solver.hpp"

using namespace ibcal;
namespace fs = std::filesystem;

namespace {

struct Criterion {
    int id;
    const char* name;
    double time_limit_s;
    std::function<bool(std::string&)> run;
};

// ---- shared fixtures ----

// The reference experiment backs criteria 6 and 7; run it once.
const ExperimentResult& reference_run() {
    static const ExperimentResult result = run_experiment(reference_config(), 1);
    return result;
}

// Independent plug-in oracle (column-major summation, no shared code).
double plugin_oracle(const Histogram2D& h) {
    const double n = static_cast<double>(h.n);
    std::vector<double> pu(h.nu, 0.0), pv(h.nv, 0.0);
    for (std::size_t u = 0; u < h.nu; ++u) {
        for (std::size_t v = 0; v < h.nv; ++v) {
            pu[u] += h.at(u, v) / n;
            pv[v] += h.at(u, v) / n;
        }
    }
    double acc = 0.0;
    for (std::size_t v = 0; v < h.nv; ++v) {
        for (std::size_t u = 0; u < h.nu; ++u) {
            const double p = h.at(u, v) / n;
            if (p > 0.0) acc += p * std::log(p / (pu[u] * pv[v]));
        }
    }
    return acc;
}

// Blend of the uninformative encoder and the identity, tuned so the exact
// composed I(T;Y) lands on `target`.
Encoder boundary_null_encoder(const JointPMF& source, double target) {
    auto blend = [&](double s) {
        Mat rows(2, 2);
        rows(0, 0) = (1.0 - s) * 0.5 + s;
        rows(0, 1) = (1.0 - s) * 0.5;
        rows(1, 0) = (1.0 - s) * 0.5;
        rows(1, 1) = (1.0 - s) * 0.5 + s;
        return make_encoder(std::move(rows));
    };
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double got = exact_mi(compose(source, blend(mid)).ty);
        (got < target ? lo : hi) = mid;
    }
    return blend(0.5 * (lo + hi));
}

bool criterion1(std::string& detail) {
    Rng rng(81);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        Histogram2D h;
        h.nu = 2 + rng.below(5);
        h.nv = 2 + rng.below(5);
        h.counts.assign(h.nu * h.nv, 0);
        h.n = 0;
        for (auto& c : h.counts) {
            c = rng.below(30);
            h.n += c;
        }
        if (h.n == 0) {
            h.counts[0] = 1;
            h.n = 1;
        }
        worst = std::max(worst, std::abs(plugin_mi(h) - plugin_oracle(h)));
    }
    std::ostringstream os;
    os << "max |plugin - oracle| = " << worst;
    detail = os.str();
    return worst <= 1e-12;
}

bool criterion2(std::string& detail) {
    double worst = 0.0;
    for (double p = 0.05; p < 0.46; p += 0.05) {
        const double closed = std::numbers::ln2 -
                              (-p * std::log(p) - (1.0 - p) * std::log(1.0 - p));
        worst = std::max(worst, std::abs(exact_mi(dsbs(p)) - closed));
    }
    bool ok = worst <= 1e-12;

    const JointPMF src = dsbs(0.1);
    const double ident_gap =
        std::abs(exact_mi(compose(src, identity_encoder(2)).ty) - exact_mi(src));
    const ComposeResult blind = compose(src, constant_encoder(2, {0.5, 0.5}));
    const double const_ty = std::abs(exact_mi(blind.ty));
    const double const_xt = std::abs(exact_mi(blind.xt));
    ok = ok && ident_gap == 0.0 && const_ty <= 1e-12 && const_xt <= 1e-12;

    std::ostringstream os;
    os << "closed-form gap " << worst << ", identity gap " << ident_gap
       << ", constant-encoder MI " << std::max(const_ty, const_xt);
    detail = os.str();
    return ok;
}

bool criterion3(std::string& detail) {
    const JointPMF src = dsbs(0.1);
    const Encoder ident = identity_encoder(2);
    std::ostringstream os;
    bool ok = true;
    for (double eps : {0.05, 0.1, 0.3}) {
        const double rate = coverage_check(src, ident, eps, 500, 1000, 606);
        os << "eps=" << eps << " rate=" << rate << " ";
        ok = ok && rate <= eps;
    }
    detail = os.str();
    return ok;
}

bool criterion4(std::string& detail) {
    const JointPMF src = dsbs(0.1);
    const double alpha = 0.2;
    const Encoder null_enc = boundary_null_encoder(src, alpha - 0.01);
    const double exact = exact_mi(compose(src, null_enc).ty);
    if (std::abs(exact - (alpha - 0.01)) > 1e-9) {
        detail = "boundary construction missed its target";
        return false;
    }
    const double levels[] = {0.05, 0.1, 0.2};
    const auto rates = pvalue_validity_check(src, null_enc, alpha, 5000, 2000, levels, 4242);
    std::ostringstream os;
    os << "exact I(T;Y)=" << exact << "; ";
    bool ok = true;
    for (std::size_t i = 0; i < 3; ++i) {
        const double slack = 3.0 * std::sqrt(levels[i] * (1.0 - levels[i]) / 2000.0);
        os << "u=" << levels[i] << " rate=" << rates[i] << " ";
        ok = ok && rates[i] <= levels[i] + slack;
    }
    detail = os.str();
    return ok;
}

bool criterion5(std::string& detail) {
    Rng rng(515);
    // front vs brute force on 1000 random candidate sets
    for (int round = 0; round < 1000; ++round) {
        const std::size_t n = 1 + rng.below(60);
        std::vector<CandidateEvaluation> evals(n);
        for (std::size_t i = 0; i < n; ++i) {
            evals[i].grid_index = i;
            evals[i].i_ty_opt = rng.below(10) / 5.0;
            evals[i].i_xt_opt = rng.below(10) / 5.0;
        }
        std::vector<std::size_t> brute;
        for (std::size_t i = 0; i < n; ++i) {
            bool dominated = false;
            for (std::size_t j = 0; j < n && !dominated; ++j) {
                if (j == i) continue;
                dominated = evals[j].i_ty_opt >= evals[i].i_ty_opt &&
                            evals[j].i_xt_opt <= evals[i].i_xt_opt &&
                            (evals[j].i_ty_opt > evals[i].i_ty_opt ||
                             evals[j].i_xt_opt < evals[i].i_xt_opt);
            }
            if (!dominated) brute.push_back(i);
        }
        if (pareto_front(evals) != brute) {
            detail = "front mismatch against the brute-force filter";
            return false;
        }
    }
    // FST: always a prefix, all rejected p-values <= delta
    for (int round = 0; round < 500; ++round) {
        const std::size_t n = 1 + rng.below(20);
        std::vector<CandidateEvaluation> ordered(n);
        for (std::size_t i = 0; i < n; ++i) {
            ordered[i].grid_index = i;
            ordered[i].p_val = rng.below(100) / 99.0;
        }
        const double delta = 0.05 + 0.9 * (rng.below(100) / 99.0) * 0.5;
        const std::size_t prefix = fixed_sequence_test(ordered, delta);
        for (std::size_t i = 0; i < prefix; ++i) {
            if (*ordered[i].p_val > delta) {
                detail = "rejected candidate above delta";
                return false;
            }
        }
        if (prefix < n && *ordered[prefix].p_val <= delta) {
            detail = "testing stopped before the first failure";
            return false;
        }
    }
    // ordering is invariant to the testing split
    const JointPMF src = random_joint(6, 3, 1.0, 91);
    std::vector<Encoder> encoders;
    for (double keep : {0.95, 0.8, 0.6, 0.45}) {
        Mat rows(6, 6, (1.0 - keep) / 5.0);
        for (std::size_t i = 0; i < 6; ++i) rows(i, i) = keep;
        encoders.push_back(make_encoder(std::move(rows), classical_point(keep)));
    }
    const SampleSet d_opt = sample_pairs(src, 2000, 1);
    const SelectionOutcome a =
        mht_select(encoders, d_opt, sample_pairs(src, 2000, 2), 0.01, 0.1, 9);
    const SelectionOutcome b =
        mht_select(encoders, d_opt, sample_pairs(src, 2000, 999), 0.01, 0.1, 9);
    if (a.ordered_front.size() != b.ordered_front.size()) {
        detail = "front size changed with the testing split";
        return false;
    }
    for (std::size_t i = 0; i < a.ordered_front.size(); ++i) {
        if (a.ordered_front[i].grid_index != b.ordered_front[i].grid_index) {
            detail = "ordering changed with the testing split";
            return false;
        }
    }
    detail = "1000 fronts, 500 testing sequences, ordering invariant";
    return true;
}

bool criterion6(std::string& detail) {
    const ExperimentResult& r = reference_run();
    const double bound = 0.1 + 3.0 * std::sqrt(0.1 * 0.9 / 200.0);
    const std::size_t kept = r.summary.mht.trials - r.summary.mht.abstentions;
    std::ostringstream os;
    os << "alpha=" << r.alpha << " outage=" << r.summary.mht.outage_rate
       << " (non-abstaining " << kept << "/200, abstention rate "
       << r.summary.mht.abstention_rate << "), bound " << bound;
    detail = os.str();
    return r.summary.mht.outage_rate <= bound;
}

bool criterion7(std::string& detail) {
    const ExperimentResult& r = reference_run();
    const MethodSummary& m = r.summary.mht;
    const MethodSummary& c = r.summary.conventional;
    std::ostringstream os;
    os << "outage conv=" << c.outage_rate << " vs mht=" << m.outage_rate
       << "; std I(X;T) conv=" << c.std_i_xt << " vs mht=" << m.std_i_xt;
    detail = os.str();
    return c.outage_rate >= m.outage_rate && m.std_i_xt <= c.std_i_xt;
}

bool criterion8(std::string& detail) {
    Rng rng(808);
    // objective nonincreasing on 100 random sources
    for (int round = 0; round < 100; ++round) {
        const JointPMF src = random_joint(2 + rng.below(4), 2 + rng.below(3), 1.0,
                                          9000 + round);
        SolverConfig cfg;
        cfg.t_size = 2 + rng.below(2);
        cfg.max_iters = 150;
        cfg.restarts = 1;
        cfg.seed = round;
        const double lambda = std::pow(10.0, -1.0 + 0.03 * rng.below(100));
        const HyperparameterPoint hp = classical_point(lambda);
        double prev = std::numeric_limits<double>::infinity();
        bool monotone = true;
        solve_classical(src, lambda, cfg, [&](std::size_t, const Mat& rows) {
            const double obj = objective_value(src, make_encoder(rows, hp), hp);
            if (obj > prev + 1e-8) monotone = false;
            prev = obj;
        });
        if (!monotone) {
            detail = "objective increased during iteration";
            return false;
        }
    }
    // gamma = 1 equivalence
    const JointPMF src = random_joint(6, 4, 1.0, 99);
    SolverConfig cfg;
    cfg.t_size = 3;
    cfg.max_iters = 400;
    cfg.restarts = 3;
    cfg.seed = 17;
    const Encoder a = solve_classical(src, 0.7, cfg);
    const Encoder b = solve_deterministic(src, 1.0, 0.7, cfg);
    double gap = 0.0;
    for (std::size_t i = 0; i < a.rows.data.size(); ++i) {
        gap = std::max(gap, std::abs(a.rows.data[i] - b.rows.data[i]));
    }
    if (gap > 1e-10) {
        detail = "gamma=1 and classical solves diverged";
        return false;
    }
    // informativeness-dominated solve on the binary source
    const JointPMF bin = dsbs(0.1);
    SolverConfig strong;
    strong.t_size = 2;
    strong.max_iters = 2000;
    strong.restarts = 5;
    strong.seed = 3;
    const Encoder sharp = solve_classical(bin, 1e3, strong);
    const double achieved = exact_mi(compose(bin, sharp).ty);
    const double target = exact_mi(bin);
    std::ostringstream os;
    os << "gamma gap " << gap << ", I(T;Y) " << achieved << " vs I(X;Y) " << target;
    detail = os.str();
    return achieved >= 0.98 * target;
}

bool criterion9(std::string& detail) {
    const fs::path dir = fs::temp_directory_path() /
                         ("ibcal_accept9_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "run.json");
        out << R"({
  "unit": "nats",
  "seed": 77,
  "source": {"kind": "dirichlet", "sizes": [5, 3], "concentration": 1.0, "seed": 6},
  "solver": {"variant": "classical", "t_size": 3, "max_iters": 200, "restarts": 2},
  "grid": {"lambda": "log:0.01:10:6"},
  "calibration": {"n_cal": 1000, "opt_fraction": 0.5},
  "mht": {"alpha": "midrange", "delta": 0.1},
  "experiment": {"trials": 8, "mode": "redraw"},
  "output": {"dir": ")" << (dir / "out1").string() << R"("}
})";
    }
    cli::SimulateOptions first;
    first.config = dir / "run.json";
    first.workers = 1u;
    first.quiet = true;
    cli::SimulateOptions second = first;
    second.workers = 4u;
    second.out_dir = dir / "out2";
    if (cli::cmd_simulate(first) != cli::kExitOk || cli::cmd_simulate(second) != cli::kExitOk) {
        detail = "simulate run failed";
        return false;
    }
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string{std::istreambuf_iterator<char>(in),
                           std::istreambuf_iterator<char>()};
    };
    const bool same_trials =
        slurp(dir / "out1" / "trials.csv") == slurp(dir / "out2" / "trials.csv");
    const bool same_summary =
        slurp(dir / "out1" / "summary.json") == slurp(dir / "out2" / "summary.json");
    const bool same_scatter =
        slurp(dir / "out1" / "scatter.csv") == slurp(dir / "out2" / "scatter.csv");
    fs::remove_all(dir);
    detail = "trials/summary/scatter byte-identical across 1 and 4 workers";
    return same_trials && same_summary && same_scatter;
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "plug-in estimator agrees with the direct-summation oracle", 1.0, criterion1},
        {2, "closed forms: binary source MI, identity/constant compose", 1.0, criterion2},
        {3, "confidence bound coverage at eps in {0.05, 0.1, 0.3}", 30.0, criterion3},
        {4, "p-value super-uniformity at a boundary null", 120.0, criterion4},
        {5, "Pareto front, testing prefix, ordering invariance", 10.0, criterion5},
        {6, "end-to-end outage control on the reference experiment", 600.0, criterion6},
        {7, "baseline comparison: outage and objective stability", 600.0, criterion7},
        {8, "solver sanity: monotone objective, gamma=1 match, sharp solve", 60.0, criterion8},
        {9, "simulate is byte-identical across reruns and worker counts", 120.0, criterion9},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = false;
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
            ok = false;
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (elapsed > c.time_limit_s) {
            ok = false;
            detail += " [exceeded " + std::to_string(c.time_limit_s) + "s limit]";
        }
        std::printf("[%s] criterion %d: %s — %s (%.2fs)\n", ok ? "PASS" : "FAIL", c.id,
                    c.name, detail.c_str(), elapsed);
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    if (failures > 0) {
        std::printf("%d criterion(s) failed\n", failures);
        return 1;
    }
    std::printf("all %zu criteria passed\n", criteria.size());
    return 0;
}
