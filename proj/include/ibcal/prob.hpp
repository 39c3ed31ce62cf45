#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ibcal/hyperparameter.hpp"
#include "ibcal/unit.hpp"

namespace ibcal {

// Dense row-major matrix of doubles; the only array shape used throughout.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/**
 * Exact joint distribution over a pair of finite alphabets (|U| x |V|).
 *
 * Construction validates: entries nonnegative and finite, both alphabet
 * sizes >= 2, and total mass within 1e-9 of one. Drift below 1e-12 is kept
 * as-is, drift in (1e-12, 1e-9] is renormalized away, anything larger is
 * rejected. Instances are immutable.
 */
class JointPMF {
public:
    static JointPMF from_matrix(Mat mass);

    std::size_t nu() const { return mass_.rows; }
    std::size_t nv() const { return mass_.cols; }
    double operator()(std::size_t u, std::size_t v) const { return mass_(u, v); }
    const Mat& matrix() const { return mass_; }

    std::vector<double> marginal_u() const;
    std::vector<double> marginal_v() const;

private:
    explicit JointPMF(Mat m) : mass_(std::move(m)) {}
    Mat mass_;
};

// i.i.d. integer-coded pairs drawn from a joint distribution.
struct SampleSet {
    struct Pair {
        std::uint32_t u = 0;
        std::uint32_t v = 0;
        bool operator==(const Pair&) const = default;
    };
    std::vector<Pair> pairs;
    std::size_t nu = 0;
    std::size_t nv = 0;
    std::uint64_t seed = 0;  // provenance of the draw or split

    std::size_t size() const { return pairs.size(); }
};

struct Histogram2D {
    std::vector<std::uint64_t> counts;  // row-major nu x nv
    std::size_t nu = 0;
    std::size_t nv = 0;
    std::uint64_t n = 0;

    std::uint64_t at(std::size_t u, std::size_t v) const { return counts[u * nv + v]; }
    std::uint64_t& at(std::size_t u, std::size_t v) { return counts[u * nv + v]; }
};

// Row-stochastic conditional distribution of the feature T given input X.
struct Encoder {
    Mat rows;  // |X| x |T|, each row sums to 1 within 1e-9
    HyperparameterPoint hp;
    struct Diagnostics {
        std::size_t iterations = 0;
        double final_objective = 0.0;  // nats
        std::size_t restart_index = 0;
    } diag;

    std::size_t nx() const { return rows.rows; }
    std::size_t nt() const { return rows.cols; }
};

// Throws unless `rows` is row-stochastic within 1e-9 with finite,
// nonnegative entries.
void validate_encoder_rows(const Mat& rows);

Encoder make_encoder(Mat rows, HyperparameterPoint hp = {},
                     Encoder::Diagnostics diag = {});
Encoder identity_encoder(std::size_t n);
Encoder constant_encoder(std::size_t nx, std::vector<double> row);

// ---- operations ----

inline JointPMF joint_from_matrix(Mat mass) { return JointPMF::from_matrix(std::move(mass)); }

// Doubly symmetric binary source: uniform X through a binary symmetric
// channel with crossover probability p in (0, 0.5).
JointPMF dsbs(double crossover);

// Joint PMF drawn from a symmetric Dirichlet over all |U|*|V| cells.
JointPMF random_joint(std::size_t nu, std::size_t nv, double concentration,
                      std::uint64_t seed);

// n i.i.d. pairs via inverse-CDF over the flattened cells.
SampleSet sample_pairs(const JointPMF& joint, std::size_t n, std::uint64_t seed);

Histogram2D histogram(const SampleSet& samples);

// Empirical joint distribution counts/n as a validated JointPMF.
JointPMF normalized(const Histogram2D& hist);

double exact_entropy(std::span<const double> pmf, LogUnit unit = LogUnit::Nats);

enum class CondDirection { UGivenV, VGivenU };
double exact_cond_entropy(const JointPMF& joint, CondDirection direction,
                          LogUnit unit = LogUnit::Nats);

// Mutual information of an exact joint distribution, 0*log(0) = 0.
double exact_mi(const JointPMF& joint, LogUnit unit = LogUnit::Nats);

struct ComposeResult {
    JointPMF ty;  // P(t,y) = sum_x P(x,y) q(t|x)
    JointPMF xt;  // P(x,t) = P(x) q(t|x)
};

// Pushes the source through an encoder, yielding the exact feature joints.
ComposeResult compose(const JointPMF& source, const Encoder& encoder);

struct RolloutResult {
    SampleSet ty;
    SampleSet xt;
};

/**
 * Draws one t_i ~ q(.|x_i) per data point and emits both induced sample
 * sets. The same t_i feeds (t_i, y_i) and (x_i, t_i), so each output is a
 * genuine i.i.d. sample from the corresponding composed joint.
 */
RolloutResult rollout(const SampleSet& xy, const Encoder& encoder,
                      std::uint64_t seed);

}  // namespace ibcal
