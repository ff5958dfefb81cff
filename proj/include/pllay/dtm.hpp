#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "pllay/data.hpp"
#include "pllay/kdtree.hpp"
#include "pllay/parallel.hpp"

namespace pllay {

struct DtmParams {
    double m0 = 0.05;  // mass parameter in (0, 1)
    double r = 2.0;    // distance exponent >= 1

    void validate() const {
        if (!(m0 > 0.0 && m0 < 1.0)) throw std::invalid_argument("DtmParams: m0 must be in (0,1)");
        if (!(r >= 1.0)) throw std::invalid_argument("DtmParams: r must be >= 1");
    }
};

enum class DtmMode { PointsAsData, PointsAsWeights };

enum class KnnBackend { Auto, BruteForce, KdTree };

// Per-query record of the mass cut. `neighbors` lists the cut set N_k sorted
// by (distance, index); the last entry is the k-th neighbor, which carries
// only the leftover mass m0*W - mass(N_{k-1}). dist_k / dist_next allow
// callers to detect a tie at the cut with their own tolerance.
struct DtmProvenance {
    std::vector<std::uint32_t> neighbors;
    double leftover = 0.0;
    double receiver_weight = 0.0;  // full weight of the k-th neighbor
    double dist_k = 0.0;
    double dist_next = std::numeric_limits<double>::infinity();
};

struct DtmField {
    DtmMode mode = DtmMode::PointsAsData;
    DtmParams params;
    std::vector<double> values;
    std::vector<DtmProvenance> provenance;  // empty unless requested

    bool has_provenance() const { return !provenance.empty(); }
};

struct DtmOptions {
    bool keep_provenance = true;
    KnnBackend backend = KnnBackend::Auto;
    unsigned threads = 0;
};

namespace detail {

inline double pow_r(double base, double r) {
    if (r == 2.0) return base * base;
    if (r == 1.0) return base;
    return std::pow(base, r);
}

struct DtmEvalResult {
    double value;
    DtmProvenance prov;
};

// Walk neighbors in (distance, index) order accumulating weighted r-th
// powers of distances until the mass target m0*W is reached; the neighbor
// crossing the target gets only the leftover mass. This is the empirical
// DTM in its standard form, (1/m0) * integral of the r-th power of the
// empirical quantile function.
template <typename NextNeighbor>
DtmEvalResult dtm_eval(NextNeighbor&& next, std::span<const double> weights, double total_weight,
                       const DtmParams& params, bool keep_provenance) {
    const double target = params.m0 * total_weight;
    DtmEvalResult out;
    double acc = 0.0;   // sum of w_i * dist_i^r over fully-counted neighbors
    double mass = 0.0;  // mass consumed so far
    std::vector<std::uint32_t> members;
    Neighbor nb = next();
    for (;;) {
        double w = weights[nb.index];
        Neighbor after = next();
        // mass accumulates in distance order while the total sums in index
        // order; with m0 near 1 their roundings can differ by a few ulps
        // and the target can land past the last neighbor. The last neighbor
        // then absorbs the remainder.
        bool is_cut = mass + w >= target || after.index == SIZE_MAX;
        if (keep_provenance) members.push_back(static_cast<std::uint32_t>(nb.index));
        double dist = std::sqrt(nb.dist2);
        if (is_cut) {
            double leftover = std::min(target - mass, w);
            acc += leftover * pow_r(dist, params.r);
            out.value = std::pow(acc / target, 1.0 / params.r);
            out.prov.leftover = leftover;
            out.prov.receiver_weight = w;
            out.prov.dist_k = dist;
            out.prov.dist_next = after.index == SIZE_MAX
                                     ? std::numeric_limits<double>::infinity()
                                     : std::sqrt(after.dist2);
            out.prov.neighbors = std::move(members);
            return out;
        }
        mass += w;
        acc += w * pow_r(dist, params.r);
        nb = after;
    }
}

// Streaming neighbor sources. Both must deliver the exact same (dist2,
// index) sequence; the k-d tree source re-queries with a doubled k when the
// mass target outruns the current batch.
class BruteStream {
public:
    BruteStream(std::span<const double> coords, std::size_t dim, std::span<const double> q)
        : all_(brute_force_knn(coords, dim, q, coords.size() / dim)) {}

    Neighbor operator()() {
        if (pos_ >= all_.size()) return Neighbor{0.0, SIZE_MAX};
        return all_[pos_++];
    }

private:
    std::vector<Neighbor> all_;
    std::size_t pos_ = 0;
};

class KdStream {
public:
    KdStream(const KdTree& tree, std::span<const double> q, std::size_t k_hint)
        : tree_(tree), q_(q), k_(std::max<std::size_t>(k_hint, 4)) {
        batch_ = tree_.knn(q_, std::min(k_, tree_.size()));
    }

    Neighbor operator()() {
        if (pos_ >= batch_.size()) {
            if (batch_.size() >= tree_.size()) return Neighbor{0.0, SIZE_MAX};
            k_ = std::min(tree_.size(), k_ * 2);
            batch_ = tree_.knn(q_, k_);
        }
        return batch_[pos_++];
    }

private:
    const KdTree& tree_;
    std::span<const double> q_;
    std::size_t k_;
    std::vector<Neighbor> batch_;
    std::size_t pos_ = 0;
};

inline DtmField dtm_impl(std::span<const double> coords, std::size_t dim,
                         std::span<const double> weights, std::span<const double> queries,
                         const DtmParams& params, const DtmOptions& opts, DtmMode mode) {
    params.validate();
    const std::size_t n = dim > 0 ? coords.size() / dim : 0;
    if (n == 0) throw std::invalid_argument("dtm: empty data");
    if (queries.size() % dim != 0)
        throw std::invalid_argument("dtm: query/data dimension mismatch");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw std::invalid_argument("dtm: negative weight");
        total += w;
    }
    if (!(total > 0.0)) throw std::invalid_argument("dtm: total weight must be positive");

    bool use_tree = opts.backend == KnnBackend::KdTree ||
                    (opts.backend == KnnBackend::Auto && dim <= 3 && n >= 128);
    KdTree tree;
    if (use_tree) tree = KdTree(coords, dim);
    // Mass target typically falls inside the first ~m0*n neighbors; the
    // stream doubles k if weights are uneven.
    std::size_t k_hint = static_cast<std::size_t>(params.m0 * double(n) * 1.5) + 2;

    const std::size_t nq = queries.size() / dim;
    DtmField field;
    field.mode = mode;
    field.params = params;
    field.values.resize(nq);
    if (opts.keep_provenance) field.provenance.resize(nq);

    parallel_for(
        nq,
        [&](std::size_t qi) {
            std::span<const double> q{queries.data() + qi * dim, dim};
            DtmEvalResult res =
                use_tree ? dtm_eval(KdStream(tree, q, k_hint), weights, total, params,
                                    opts.keep_provenance)
                         : dtm_eval(BruteStream(coords, dim, q), weights, total, params,
                                    opts.keep_provenance);
            field.values[qi] = res.value;
            if (opts.keep_provenance) field.provenance[qi] = std::move(res.prov);
        },
        opts.threads);
    return field;
}

}  // namespace detail

// Empirical DTM with the input interpreted as data points carrying weights.
// Queries are flat vectors in the data's dimension.
inline DtmField dtm_points(const PointCloud& data, std::span<const double> queries,
                           const DtmParams& params, const DtmOptions& opts = {}) {
    data.validate();
    return detail::dtm_impl(data.coords, data.dim, data.weights, queries, params, opts,
                            DtmMode::PointsAsData);
}

// Overload stating the query dimension explicitly; rejects a mismatch.
inline DtmField dtm_points(const PointCloud& data, std::span<const double> queries,
                           std::size_t query_dim, const DtmParams& params,
                           const DtmOptions& opts = {}) {
    if (query_dim != data.dim)
        throw std::invalid_argument("dtm_points: query/data dimension mismatch");
    return dtm_points(data, queries, params, opts);
}

// Empirical DTM with the input interpreted as weights on fixed grid points.
// Zero weights are allowed (corruption produces them); the total must be
// positive.
inline DtmField dtm_weights(std::span<const double> grid_points, std::size_t dim,
                            std::span<const double> weights, std::span<const double> queries,
                            const DtmParams& params, const DtmOptions& opts = {}) {
    if (dim == 0) throw std::invalid_argument("dtm_weights: dimension must be >= 1");
    if (weights.size() != grid_points.size() / dim)
        throw std::invalid_argument("dtm_weights: weights size mismatch");
    return detail::dtm_impl(grid_points, dim, weights, queries, params, opts,
                            DtmMode::PointsAsWeights);
}

// Gradient results carry a non-differentiability flag instead of throwing:
// ties at the mass cut, a vanishing DTM value, or a cut sitting exactly on a
// weight boundary are measure-zero configurations where only a subgradient
// (zero) is returned.
struct DtmGradient {
    std::vector<double> grad;  // n*dim for the points variant, n for weights
    double value = 0.0;
    bool nondifferentiable = false;
};

namespace detail {

// Differentiability in the data POSITIONS fails when the neighbor order can
// swap across the cut, i.e. at a distance tie between the k-th and (k+1)-th
// neighbors. Mass boundaries are harmless there: the weights are fixed.
inline bool cut_is_generic_points(const DtmProvenance& p, double value, double tol) {
    if (value <= tol) return false;
    if (p.dist_next - p.dist_k <= tol) return false;
    return true;
}

// Differentiability in the WEIGHTS fails when the mass target sits exactly
// on a cumulative-weight boundary (the receiver identity flips). Distance
// ties are harmless there: the (distance, index) order never moves.
inline bool cut_is_generic_weights(const DtmProvenance& p, double value, double tol) {
    if (value <= tol) return false;
    if (p.receiver_weight - p.leftover <= tol * std::max(1.0, p.receiver_weight)) return false;
    if (p.leftover <= tol * std::max(1.0, p.receiver_weight)) return false;
    return true;
}

}  // namespace detail

// Accumulates scale * d(dtm)/d(position of X_j) into out (n*dim entries)
// for a query whose forward cut is already known. Nonzero only on the cut
// set; the j-th point contributes with its effective mass (full weight
// below the cut, leftover on the receiver). Returns false (and accumulates
// nothing) at non-generic configurations.
inline bool accumulate_dtm_points_grad(const PointCloud& data, std::span<const double> query,
                                       const DtmProvenance& p, double value, double total_weight,
                                       const DtmParams& params, double scale,
                                       std::span<double> out, double tol = 1e-9) {
    if (!detail::cut_is_generic_points(p, value, tol)) return false;
    if (params.r == 1.0) {
        // r == 1 with a coincident neighbor has no defined direction.
        for (std::size_t j : p.neighbors)
            if (dist2(data.point(j), query) == 0.0) return false;
    }
    const double denom = std::pow(value, params.r - 1.0) * params.m0 * total_weight;
    for (std::size_t a = 0; a < p.neighbors.size(); ++a) {
        std::size_t j = p.neighbors[a];
        double eff = (a + 1 == p.neighbors.size()) ? p.leftover : data.weights[j];
        auto xj = data.point(j);
        double dist = std::sqrt(dist2(xj, query));
        double coef;
        if (params.r == 2.0) {
            coef = eff / denom;
        } else if (dist == 0.0) {
            continue;  // r > 1: magnitude ~ dist^{r-1} -> 0
        } else {
            coef = eff * std::pow(dist, params.r - 2.0) / denom;
        }
        for (std::size_t c = 0; c < data.dim; ++c)
            out[j * data.dim + c] += scale * coef * (xj[c] - query[c]);
    }
    return true;
}

// Accumulates scale * d(dtm)/d(weight X_j) into out (n entries), exact for
// the leftover-mass convention implemented above. Fully-counted neighbors
// trade their own distance against the receiver's; every point additionally
// carries the background term coming from the mass target m0*sum(X).
// Summing X_j * grad_j over all j gives 0, matching the scale invariance of
// the weights-variant DTM.
inline bool accumulate_dtm_weights_grad(std::span<const double> grid_points, std::size_t dim,
                                        std::span<const double> query, const DtmProvenance& p,
                                        double value, double total_weight,
                                        const DtmParams& params, double scale,
                                        std::span<double> out, double tol = 1e-9) {
    if (!detail::cut_is_generic_weights(p, value, tol)) return false;
    const std::size_t n = out.size();
    const double denom =
        params.r * std::pow(value, params.r - 1.0) * params.m0 * total_weight;
    const double dk_r = detail::pow_r(p.dist_k, params.r);
    const double background = params.m0 * (dk_r - detail::pow_r(value, params.r));
    for (std::size_t j = 0; j < n; ++j) out[j] += scale * background / denom;
    for (std::size_t a = 0; a + 1 < p.neighbors.size(); ++a) {
        std::size_t j = p.neighbors[a];
        double dj = std::sqrt(dist2({grid_points.data() + j * dim, dim}, query));
        out[j] += scale * (detail::pow_r(dj, params.r) - dk_r) / denom;
    }
    return true;
}

// d(dtm)/d(position of X_j) at a single query.
inline DtmGradient dtm_points_grad(const PointCloud& data, std::span<const double> query,
                                   const DtmParams& params, double tol = 1e-9) {
    DtmOptions opts;
    opts.backend = KnnBackend::BruteForce;
    DtmField f = dtm_points(data, query, params, opts);
    double total = 0.0;
    for (double w : data.weights) total += w;
    DtmGradient out;
    out.value = f.values[0];
    out.grad.assign(data.coords.size(), 0.0);
    out.nondifferentiable = !accumulate_dtm_points_grad(data, query, f.provenance[0], f.values[0],
                                                        total, params, 1.0, out.grad, tol);
    return out;
}

// d(dtm)/d(weight X_j) at a single query.
inline DtmGradient dtm_weights_grad(std::span<const double> grid_points, std::size_t dim,
                                    std::span<const double> weights,
                                    std::span<const double> query, const DtmParams& params,
                                    double tol = 1e-9) {
    DtmOptions opts;
    opts.backend = KnnBackend::BruteForce;
    DtmField f = dtm_weights(grid_points, dim, weights, query, params, opts);
    double total = 0.0;
    for (double w : weights) total += w;
    DtmGradient out;
    out.value = f.values[0];
    out.grad.assign(weights.size(), 0.0);
    out.nondifferentiable =
        !accumulate_dtm_weights_grad(grid_points, dim, query, f.provenance[0], f.values[0], total,
                                     params, 1.0, out.grad, tol);
    return out;
}

}  // namespace pllay
