#include "ibcal/prob.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ibcal/rng.hpp"

namespace ibcal {

namespace {

constexpr double kRejectDrift = 1e-9;
constexpr double kKeepDrift = 1e-12;

// Clamp the tiny negative totals that cancellation can produce; anything
// below -1e-9 is a real bug and is passed through for tests to catch.
inline double clamp_information(double v) {
    return (v < 0.0 && v > -1e-9) ? 0.0 : v;
}

}  // namespace

JointPMF JointPMF::from_matrix(Mat mass) {
    if (mass.rows < 2 || mass.cols < 2) {
        throw DegenerateAlphabet("joint distribution needs both alphabet sizes >= 2, got " +
                                 std::to_string(mass.rows) + "x" + std::to_string(mass.cols));
    }
    if (mass.data.size() != mass.rows * mass.cols) {
        throw DimensionMismatch("matrix storage does not match its declared shape");
    }
    double total = 0.0;
    for (double m : mass.data) {
        if (!std::isfinite(m)) throw NonFinite("joint mass entries must be finite");
        if (m < 0.0) throw NegativeMass("joint mass entries must be nonnegative");
        total += m;
    }
    const double drift = std::abs(total - 1.0);
    if (drift > kRejectDrift) {
        throw NotNormalized("joint mass sums to " + std::to_string(total) +
                            ", more than 1e-9 away from 1");
    }
    if (drift > kKeepDrift) {
        for (double& m : mass.data) m /= total;
    }
    return JointPMF(std::move(mass));
}

std::vector<double> JointPMF::marginal_u() const {
    std::vector<double> out(nu(), 0.0);
    for (std::size_t u = 0; u < nu(); ++u) {
        for (std::size_t v = 0; v < nv(); ++v) out[u] += mass_(u, v);
    }
    return out;
}

std::vector<double> JointPMF::marginal_v() const {
    std::vector<double> out(nv(), 0.0);
    for (std::size_t u = 0; u < nu(); ++u) {
        for (std::size_t v = 0; v < nv(); ++v) out[v] += mass_(u, v);
    }
    return out;
}

void validate_encoder_rows(const Mat& rows) {
    if (rows.rows == 0 || rows.cols == 0) {
        throw DimensionMismatch("encoder must have at least one row and one column");
    }
    for (std::size_t x = 0; x < rows.rows; ++x) {
        double sum = 0.0;
        for (std::size_t t = 0; t < rows.cols; ++t) {
            const double q = rows(x, t);
            if (!std::isfinite(q)) throw NonFinite("encoder entries must be finite");
            if (q < 0.0) throw NegativeMass("encoder entries must be nonnegative");
            sum += q;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            throw NotNormalized("encoder row " + std::to_string(x) + " sums to " +
                                std::to_string(sum));
        }
    }
}

Encoder make_encoder(Mat rows, HyperparameterPoint hp, Encoder::Diagnostics diag) {
    validate_encoder_rows(rows);
    return Encoder{std::move(rows), std::move(hp), diag};
}

Encoder identity_encoder(std::size_t n) {
    Mat rows(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) rows(i, i) = 1.0;
    return make_encoder(std::move(rows));
}

Encoder constant_encoder(std::size_t nx, std::vector<double> row) {
    Mat rows(nx, row.size());
    for (std::size_t x = 0; x < nx; ++x) {
        for (std::size_t t = 0; t < row.size(); ++t) rows(x, t) = row[t];
    }
    return make_encoder(std::move(rows));
}

JointPMF dsbs(double crossover) {
    if (!(crossover > 0.0 && crossover < 0.5)) {
        throw OutOfRange("dsbs crossover must lie strictly inside (0, 0.5)");
    }
    Mat m(2, 2);
    m(0, 0) = m(1, 1) = (1.0 - crossover) / 2.0;
    m(0, 1) = m(1, 0) = crossover / 2.0;
    return JointPMF::from_matrix(std::move(m));
}

JointPMF random_joint(std::size_t nu, std::size_t nv, double concentration,
                      std::uint64_t seed) {
    if (nu < 2 || nv < 2) throw OutOfRange("random_joint needs both alphabet sizes >= 2");
    if (!(concentration > 0.0)) throw OutOfRange("Dirichlet concentration must be positive");
    Rng rng(seed);
    Mat m(nu, nv);
    double total = 0.0;
    for (double& cell : m.data) {
        cell = rng.gamma(concentration);
        total += cell;
    }
    if (!(total > 0.0)) {  // all draws underflowed; fall back to uniform
        std::fill(m.data.begin(), m.data.end(), 1.0);
        total = static_cast<double>(m.data.size());
    }
    for (double& cell : m.data) cell /= total;
    return JointPMF::from_matrix(std::move(m));
}

SampleSet sample_pairs(const JointPMF& joint, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw OutOfRange("sample_pairs needs n >= 1");
    const std::size_t cells = joint.nu() * joint.nv();
    std::vector<double> cdf(cells);
    double acc = 0.0;
    for (std::size_t i = 0; i < cells; ++i) {
        acc += joint.matrix().data[i];
        cdf[i] = acc;
    }
    Rng rng(seed);
    SampleSet out;
    out.nu = joint.nu();
    out.nv = joint.nv();
    out.seed = seed;
    out.pairs.reserve(n);
    const auto nv = static_cast<std::uint32_t>(joint.nv());
    for (std::size_t k = 0; k < n; ++k) {
        const double u = rng.uniform() * acc;
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        std::size_t idx = static_cast<std::size_t>(it - cdf.begin());
        if (idx >= cells) idx = cells - 1;
        out.pairs.push_back({static_cast<std::uint32_t>(idx / nv),
                             static_cast<std::uint32_t>(idx % nv)});
    }
    return out;
}

Histogram2D histogram(const SampleSet& samples) {
    if (samples.nu < 1 || samples.nv < 1) {
        throw DimensionMismatch("sample set has no declared alphabet sizes");
    }
    Histogram2D h;
    h.nu = samples.nu;
    h.nv = samples.nv;
    h.counts.assign(samples.nu * samples.nv, 0);
    for (const auto& p : samples.pairs) {
        if (p.u >= samples.nu || p.v >= samples.nv) {
            throw OutOfRange("sample index outside its declared alphabet");
        }
        ++h.counts[p.u * samples.nv + p.v];
    }
    h.n = samples.pairs.size();
    return h;
}

JointPMF normalized(const Histogram2D& hist) {
    if (hist.n == 0) throw EmptyHistogram("cannot normalize an empty histogram");
    Mat m(hist.nu, hist.nv);
    const double n = static_cast<double>(hist.n);
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        m.data[i] = static_cast<double>(hist.counts[i]) / n;
    }
    return JointPMF::from_matrix(std::move(m));
}

double exact_entropy(std::span<const double> pmf, LogUnit unit) {
    double total = 0.0;
    double acc = 0.0;
    for (double p : pmf) {
        if (!std::isfinite(p)) throw NonFinite("pmf entries must be finite");
        if (p < 0.0) throw NegativeMass("pmf entries must be nonnegative");
        total += p;
        if (p > 0.0) acc -= p * std::log(p);
    }
    if (std::abs(total - 1.0) > kRejectDrift) {
        throw NotNormalized("pmf sums to " + std::to_string(total));
    }
    return clamp_information(acc) * unit_factor(unit);
}

double exact_cond_entropy(const JointPMF& joint, CondDirection direction, LogUnit unit) {
    const std::vector<double> cond =
        direction == CondDirection::UGivenV ? joint.marginal_v() : joint.marginal_u();
    double acc = 0.0;
    for (std::size_t u = 0; u < joint.nu(); ++u) {
        for (std::size_t v = 0; v < joint.nv(); ++v) {
            const double p = joint(u, v);
            if (p <= 0.0) continue;
            const double m = direction == CondDirection::UGivenV ? cond[v] : cond[u];
            acc -= p * std::log(p / m);
        }
    }
    return clamp_information(acc) * unit_factor(unit);
}

double exact_mi(const JointPMF& joint, LogUnit unit) {
    const std::vector<double> pu = joint.marginal_u();
    const std::vector<double> pv = joint.marginal_v();
    double acc = 0.0;
    for (std::size_t u = 0; u < joint.nu(); ++u) {
        if (pu[u] <= 0.0) continue;
        for (std::size_t v = 0; v < joint.nv(); ++v) {
            const double p = joint(u, v);
            if (p <= 0.0) continue;
            acc += p * std::log(p / (pu[u] * pv[v]));
        }
    }
    return clamp_information(acc) * unit_factor(unit);
}

ComposeResult compose(const JointPMF& source, const Encoder& encoder) {
    if (encoder.nx() != source.nu()) {
        throw DimensionMismatch("encoder has " + std::to_string(encoder.nx()) +
                                " rows but source |X| is " + std::to_string(source.nu()));
    }
    const std::size_t nx = source.nu();
    const std::size_t ny = source.nv();
    const std::size_t nt = encoder.nt();
    Mat ty(nt, ny, 0.0);
    Mat xt(nx, nt, 0.0);
    const std::vector<double> px = source.marginal_u();
    for (std::size_t x = 0; x < nx; ++x) {
        for (std::size_t t = 0; t < nt; ++t) {
            const double q = encoder.rows(x, t);
            xt(x, t) = px[x] * q;
            if (q == 0.0) continue;
            for (std::size_t y = 0; y < ny; ++y) {
                ty(t, y) += source(x, y) * q;
            }
        }
    }
    return {JointPMF::from_matrix(std::move(ty)), JointPMF::from_matrix(std::move(xt))};
}

RolloutResult rollout(const SampleSet& xy, const Encoder& encoder, std::uint64_t seed) {
    if (xy.nu != encoder.nx()) {
        throw DimensionMismatch("sample |X| alphabet does not match encoder rows");
    }
    const std::size_t nt = encoder.nt();
    const std::size_t nx = encoder.nx();
    // Per-row cumulative distributions over T.
    std::vector<double> cdf(nx * nt);
    for (std::size_t x = 0; x < nx; ++x) {
        double acc = 0.0;
        for (std::size_t t = 0; t < nt; ++t) {
            acc += encoder.rows(x, t);
            cdf[x * nt + t] = acc;
        }
    }
    Rng rng(seed);
    RolloutResult out;
    out.ty.nu = nt;
    out.ty.nv = xy.nv;
    out.ty.seed = seed;
    out.xt.nu = xy.nu;
    out.xt.nv = nt;
    out.xt.seed = seed;
    out.ty.pairs.reserve(xy.size());
    out.xt.pairs.reserve(xy.size());
    for (const auto& p : xy.pairs) {
        if (p.u >= nx) throw OutOfRange("sample index outside encoder alphabet");
        const double* row = cdf.data() + p.u * nt;
        const double total = row[nt - 1];
        const double u = rng.uniform() * total;
        std::size_t t = 0;
        while (t + 1 < nt && row[t] <= u) ++t;
        out.ty.pairs.push_back({static_cast<std::uint32_t>(t), p.v});
        out.xt.pairs.push_back({p.u, static_cast<std::uint32_t>(t)});
    }
    return out;
}

}  // namespace ibcal
