#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pllay/complex.hpp"
#include "pllay/dtm.hpp"
#include "pllay/landscape.hpp"
#include "pllay/persistence.hpp"
#include "pllay/rng.hpp"

namespace pllay {

enum class GKind { Affine, Logarithmic };

// Readout map g applied to the sampled weighted landscape. Affine:
// sigma^T (v - mu) with sigma, mu in R^m. Logarithmic: exp(-sigma *
// ||v - mu||_2) with scalar sigma > 0.
struct GTheta {
    GKind kind = GKind::Affine;
    std::vector<double> sigma;
    std::vector<double> mu;

    void validate(std::size_t m) const {
        if (mu.size() != m) throw std::invalid_argument("GTheta: mu size != m");
        if (kind == GKind::Affine) {
            if (sigma.size() != m) throw std::invalid_argument("GTheta: sigma size != m");
        } else {
            if (sigma.size() != 1 || !(sigma[0] > 0.0))
                throw std::invalid_argument("GTheta: logarithmic sigma must be a positive scalar");
        }
    }
};

inline double g_eval(const GTheta& g, std::span<const double> v) {
    g.validate(v.size());
    if (g.kind == GKind::Affine) {
        double s = 0.0;
        for (std::size_t l = 0; l < v.size(); ++l) s += g.sigma[l] * (v[l] - g.mu[l]);
        return s;
    }
    double n2 = 0.0;
    for (std::size_t l = 0; l < v.size(); ++l) {
        double d = v[l] - g.mu[l];
        n2 += d * d;
    }
    return std::exp(-g.sigma[0] * std::sqrt(n2));
}

struct GGrad {
    double value = 0.0;
    std::vector<double> d_v;      // dS/dv_l
    std::vector<double> d_sigma;  // same shape as sigma
    std::vector<double> d_mu;
    bool flagged = false;  // logarithmic g at v == mu (norm kink)
};

inline GGrad g_eval_grad(const GTheta& g, std::span<const double> v) {
    g.validate(v.size());
    const std::size_t m = v.size();
    GGrad out;
    out.d_v.assign(m, 0.0);
    out.d_mu.assign(m, 0.0);
    if (g.kind == GKind::Affine) {
        out.d_sigma.assign(m, 0.0);
        double s = 0.0;
        for (std::size_t l = 0; l < m; ++l) {
            s += g.sigma[l] * (v[l] - g.mu[l]);
            out.d_v[l] = g.sigma[l];
            out.d_mu[l] = -g.sigma[l];
            out.d_sigma[l] = v[l] - g.mu[l];
        }
        out.value = s;
        return out;
    }
    double n2 = 0.0;
    for (std::size_t l = 0; l < m; ++l) {
        double d = v[l] - g.mu[l];
        n2 += d * d;
    }
    double norm = std::sqrt(n2);
    out.value = std::exp(-g.sigma[0] * norm);
    out.d_sigma.assign(1, 0.0);
    if (norm == 0.0) {
        out.flagged = true;  // subgradient 0
        return out;
    }
    out.d_sigma[0] = -norm * out.value;
    double coef = -g.sigma[0] * out.value / norm;
    for (std::size_t l = 0; l < m; ++l) {
        double d = v[l] - g.mu[l];
        out.d_v[l] = coef * d;
        out.d_mu[l] = -coef * d;
    }
    return out;
}

// ||.||_inf Lipschitz constant of g: the inf->1 operator norm sum|sigma_l|
// for the affine map; sigma * sqrt(m) for the logarithmic one (sigma-
// Lipschitz in the 2-norm, ||.||_2 <= sqrt(m) ||.||_inf).
inline double lipschitz_bound(const GTheta& g) {
    if (g.kind == GKind::Affine) {
        double s = 0.0;
        for (double x : g.sigma) s += std::abs(x);
        return s;
    }
    return g.sigma[0] * std::sqrt(static_cast<double>(g.mu.size()));
}

inline std::vector<double> softmax(std::span<const double> logits) {
    double mx = logits[0];
    for (double x : logits) mx = std::max(mx, x);
    double sum = 0.0;
    std::vector<double> out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        sum += out[i];
    }
    for (double& x : out) x /= sum;
    return out;
}

// One structure element: g_theta composed with the omega-weighted landscape.
// omega lives as free logits passed through softmax, so positivity and the
// simplex constraint hold by construction.
struct StructureElement {
    GTheta g;
    std::vector<double> logits;  // length k_max
};

struct FiltrationBinding {
    enum class Kind { DtmWeights, DtmPoints, RawFunction };
    Kind kind = Kind::DtmWeights;
    DtmParams dtm;
    GridSpec grid;            // evaluation grid for DtmPoints
    bool auto_domain = false;  // DtmPoints: take the cloud's bounding box
};

struct PLLayLayer {
    std::vector<StructureElement> elements;
    LandscapeParams landscape;
    int dim = 1;
    FiltrationBinding binding;
    InfPolicy inf_policy = InfPolicy::Drop;

    std::size_t n_h() const { return elements.size(); }

    void validate() const {
        landscape.validate();
        if (elements.empty()) throw std::invalid_argument("PLLayLayer: n_h must be >= 1");
        if (dim != 0 && dim != 1) throw std::invalid_argument("PLLayLayer: dim must be 0 or 1");
        for (const auto& e : elements) {
            e.g.validate(landscape.samples);
            if (e.logits.size() != landscape.k_max)
                throw std::invalid_argument("PLLayLayer: logits size != k_max");
        }
    }
};

// Uniform omega (zero logits); affine sigma ~ U(-1/m, 1/m) * sigma_scale
// with mu = 0, logarithmic sigma = 1 with mu = 0.01.
inline PLLayLayer make_layer(std::size_t n_h, GKind kind, const LandscapeParams& lp, int dim,
                             const FiltrationBinding& binding, std::uint64_t seed,
                             double sigma_scale = 1.0) {
    PLLayLayer layer;
    layer.landscape = lp;
    layer.dim = dim;
    layer.binding = binding;
    Rng rng(seed);
    const double lim = sigma_scale / double(lp.samples);
    for (std::size_t i = 0; i < n_h; ++i) {
        StructureElement e;
        e.g.kind = kind;
        e.g.mu.assign(lp.samples, kind == GKind::Affine ? 0.0 : 0.01);
        if (kind == GKind::Affine) {
            e.g.sigma.resize(lp.samples);
            for (auto& s : e.g.sigma) s = rng.uniform(-lim, lim);
        } else {
            e.g.sigma.assign(1, 1.0);
        }
        e.logits.assign(lp.k_max, 0.0);
        layer.elements.push_back(std::move(e));
    }
    layer.validate();
    return layer;
}

// Everything the backward pass needs from one forward evaluation.
struct ForwardCache {
    enum class InputKind { Grid, Cloud };
    InputKind input_kind = InputKind::Grid;

    GridFunction grid_in;           // weights / raw bindings
    PointCloud cloud_in;            // points binding
    std::vector<double> queries;    // DTM query positions (flat 2-d)
    double total_weight = 0.0;      // sum of DTM masses
    DtmField field;                 // with provenance (dtm bindings)
    FilteredComplex complex;
    PersistenceDiagram diagram;
    LandscapeMatrix lm;
    std::vector<std::vector<double>> omegas;  // per element
    std::vector<std::vector<double>> vs;      // per element, weighted landscape
    std::vector<double> outputs;              // per element
};

namespace detail {

inline void finish_forward(const PLLayLayer& layer, ForwardCache& cache) {
    cache.diagram = compute_persistence(cache.complex, /*keep_pairing=*/true);
    cache.lm = landscape(cache.diagram, layer.landscape, layer.dim, layer.inf_policy);
    for (const auto& e : layer.elements) {
        std::vector<double> omega = softmax(e.logits);
        std::vector<double> v = weighted_landscape(cache.lm, omega);
        cache.outputs.push_back(g_eval(e.g, v));
        cache.omegas.push_back(std::move(omega));
        cache.vs.push_back(std::move(v));
    }
}

}  // namespace detail

// Grid input: DtmWeights or RawFunction bindings.
inline ForwardCache forward(const PLLayLayer& layer, const GridFunction& x,
                            const DtmOptions& dtm_opts = {}) {
    layer.validate();
    if (layer.binding.kind == FiltrationBinding::Kind::DtmPoints)
        throw std::invalid_argument("forward: DtmPoints binding expects a point cloud");
    x.validate();
    ForwardCache cache;
    cache.input_kind = ForwardCache::InputKind::Grid;
    cache.grid_in = x;
    if (layer.binding.kind == FiltrationBinding::Kind::DtmWeights) {
        cache.queries = grid_vertices(x);
        DtmOptions opts = dtm_opts;
        opts.keep_provenance = true;
        cache.field = dtm_weights(cache.queries, 2, x.values, cache.queries, layer.binding.dtm,
                                  opts);
        for (double w : x.values) cache.total_weight += w;
        cache.complex = cubical_sublevel(x.width, x.height, cache.field.values);
    } else {
        cache.complex = cubical_sublevel(x.width, x.height, x.values);
    }
    detail::finish_forward(layer, cache);
    return cache;
}

// Cloud input: DtmPoints binding.
inline ForwardCache forward(const PLLayLayer& layer, const PointCloud& x,
                            const DtmOptions& dtm_opts = {}) {
    layer.validate();
    if (layer.binding.kind != FiltrationBinding::Kind::DtmPoints)
        throw std::invalid_argument("forward: only the DtmPoints binding accepts a point cloud");
    x.validate();
    ForwardCache cache;
    cache.input_kind = ForwardCache::InputKind::Cloud;
    cache.cloud_in = x;
    GridSpec grid = layer.binding.grid;
    if (layer.binding.auto_domain) grid.domain = bounding_box(x);
    cache.queries = grid_vertices(grid.width, grid.height, grid.domain);
    DtmOptions opts = dtm_opts;
    opts.keep_provenance = true;
    cache.field = dtm_points(x, cache.queries, layer.binding.dtm, opts);
    for (double w : x.weights) cache.total_weight += w;
    cache.complex = cubical_sublevel(grid.width, grid.height, cache.field.values);
    detail::finish_forward(layer, cache);
    return cache;
}

// Gradients of every structure element for one forward pass.
struct GradientTape {
    std::vector<std::vector<double>> d_input;   // per element, input-shaped (optional)
    std::vector<std::vector<double>> d_sigma;   // per element
    std::vector<std::vector<double>> d_mu;      // per element
    std::vector<std::vector<double>> d_logits;  // per element
    std::size_t nongeneric_flags = 0;
};

struct BackwardOptions {
    bool want_input_grad = true;
    // Proximity threshold for the non-generic detectors (DTM cut ties,
    // pairing swaps, landscape kinks). Finite-difference harnesses widen it
    // to a few multiples of their step.
    double nongeneric_tol = 1e-9;
};

namespace detail {

// Cells whose argmax vertex could switch under perturbation (two vertices
// of the cell within tol of the max) make the lower-star route one-sided.
inline bool argmax_is_stable(const Cell& c, std::span<const double> vertex_values, double tol) {
    if (c.vertex_set.size() < 2) return true;
    double best = -std::numeric_limits<double>::infinity();
    double second = best;
    for (std::uint32_t v : c.vertex_set) {
        double val = vertex_values[v];
        if (val > best) {
            second = best;
            best = val;
        } else if (val > second) {
            second = val;
        }
    }
    return best - second > tol;
}

// A birth/death cell on the active gradient route whose value ties (within
// tol) with another same-dimension cell of different argmax vertex can swap
// pairing identity under perturbation; the diagram values stay continuous
// but the argmax routing jumps. Cells off the active route cannot affect
// the input gradient, so only active cells are checked.
class PairingAmbiguityDetector {
public:
    explicit PairingAmbiguityDetector(const FilteredComplex& k) {
        for (const Cell& c : k.cells) {
            if (c.dim >= by_dim_.size()) continue;
            by_dim_[c.dim].push_back({c.value, c.argmax_vertex});
        }
        for (auto& v : by_dim_) std::sort(v.begin(), v.end());
    }

    bool ambiguous(const Cell& c, double tol) const {
        const auto& vals = by_dim_[c.dim];
        auto lo = std::lower_bound(vals.begin(), vals.end(),
                                   std::pair<double, std::int64_t>{c.value - tol, -1});
        for (auto it = lo; it != vals.end() && it->first <= c.value + tol; ++it)
            if (it->second != c.argmax_vertex) return true;
        return false;
    }

private:
    std::array<std::vector<std::pair<double, std::int64_t>>, 3> by_dim_;
};

}  // namespace detail

// Input gradients through the pairing map:
//   dS/dX_j = sum_i df(beta_i)/dX_j * dS/db_i + sum_i df(delta_i)/dX_j * dS/dd_i,
// with dS/d{b,d} assembled from the landscape branch provenance and the g
// gradient, and df/dX routed through each cell's argmax vertex (lower-star)
// into the DTM derivative of the bound filtration. Parameter gradients
// (sigma, mu, omega-logits via the softmax Jacobian) come along for free.
inline GradientTape backward(const PLLayLayer& layer, const ForwardCache& cache,
                             const BackwardOptions& opts = {}) {
    layer.validate();
    const std::size_t n_h = layer.n_h();
    const std::size_t m = layer.landscape.samples;
    const std::size_t k_max = layer.landscape.k_max;
    const double tol = opts.nongeneric_tol;

    GradientTape tape;
    // Shared non-generic detectors (independent of the element).
    if (cache.lm.min_selection_gap <= tol) ++tape.nongeneric_flags;
    if (cache.lm.min_branch_margin <= tol) ++tape.nongeneric_flags;
    // Pairing-identity ambiguity for every cell on the active route (any
    // pair the landscape provenance touches).
    detail::PairingAmbiguityDetector ambiguity(cache.complex);
    std::vector<char> pair_active(cache.lm.source_pairs.size(), 0);
    for (const auto& s : cache.lm.slots)
        if (s.pair != kNoPair) pair_active[static_cast<std::size_t>(s.pair)] = 1;
    for (std::size_t local = 0; local < pair_active.size(); ++local) {
        if (!pair_active[local]) continue;
        for (std::int64_t cid : cache.diagram.pairing.at(cache.lm.source_pairs[local])) {
            if (cid == kNoCell) continue;
            if (ambiguity.ambiguous(cache.complex.cells[static_cast<std::size_t>(cid)], tol))
                ++tape.nongeneric_flags;
        }
    }

    const bool dtm_bound = layer.binding.kind != FiltrationBinding::Kind::RawFunction;
    std::size_t input_size = 0;
    if (opts.want_input_grad) {
        input_size = cache.input_kind == ForwardCache::InputKind::Grid
                         ? cache.grid_in.values.size()
                         : cache.cloud_in.coords.size();
    }

    // df(cell)/dX accumulation, shared by births and deaths.
    auto route_cell = [&](std::int64_t cell_id, double coeff, std::span<double> out) {
        if (cell_id == kNoCell || coeff == 0.0) return;
        const Cell& cell = cache.complex.cells[static_cast<std::size_t>(cell_id)];
        std::span<const double> vertex_values =
            dtm_bound ? std::span<const double>(cache.field.values)
                      : std::span<const double>(cache.grid_in.values);
        if (!detail::argmax_is_stable(cell, vertex_values, tol)) {
            ++tape.nongeneric_flags;
            return;
        }
        const auto q = static_cast<std::size_t>(cell.argmax_vertex);
        switch (layer.binding.kind) {
            case FiltrationBinding::Kind::RawFunction:
                out[q] += coeff;
                break;
            case FiltrationBinding::Kind::DtmWeights: {
                std::span<const double> query{cache.queries.data() + q * 2, 2};
                if (!accumulate_dtm_weights_grad(cache.queries, 2, query, cache.field.provenance[q],
                                                 cache.field.values[q], cache.total_weight,
                                                 layer.binding.dtm, coeff, out, tol))
                    ++tape.nongeneric_flags;
                break;
            }
            case FiltrationBinding::Kind::DtmPoints: {
                std::span<const double> query{cache.queries.data() + q * 2, 2};
                if (!accumulate_dtm_points_grad(cache.cloud_in, query, cache.field.provenance[q],
                                                cache.field.values[q], cache.total_weight,
                                                layer.binding.dtm, coeff, out, tol))
                    ++tape.nongeneric_flags;
                break;
            }
        }
    };

    const std::size_t n_local = cache.lm.source_pairs.size();
    for (std::size_t ei = 0; ei < n_h; ++ei) {
        const auto& elem = layer.elements[ei];
        const auto& omega = cache.omegas[ei];
        GGrad gg = g_eval_grad(elem.g, cache.vs[ei]);
        if (gg.flagged) ++tape.nongeneric_flags;
        tape.d_sigma.push_back(std::move(gg.d_sigma));
        tape.d_mu.push_back(std::move(gg.d_mu));

        // dS/d(omega_k) and dS/d(b_p, d_p) off the landscape provenance.
        std::vector<double> d_omega(k_max, 0.0);
        std::vector<double> d_birth(n_local, 0.0), d_death(n_local, 0.0);
        for (std::size_t k = 0; k < k_max; ++k) {
            for (std::size_t l = 0; l < m; ++l) {
                double lambda = cache.lm.at(k, l);
                d_omega[k] += gg.d_v[l] * lambda;
                const LandscapeSlot& s = cache.lm.slot(k, l);
                if (s.pair == kNoPair) continue;
                double w = omega[k] * gg.d_v[l];
                if (s.branch == Branch::Ascending) d_birth[s.pair] -= w;
                else if (s.branch == Branch::Descending) d_death[s.pair] += w;
            }
        }

        // Softmax Jacobian: d logits_j = omega_j * (d_omega_j - sum_k omega_k d_omega_k).
        double inner = 0.0;
        for (std::size_t k = 0; k < k_max; ++k) inner += omega[k] * d_omega[k];
        std::vector<double> d_logits(k_max);
        for (std::size_t k = 0; k < k_max; ++k) d_logits[k] = omega[k] * (d_omega[k] - inner);
        tape.d_logits.push_back(std::move(d_logits));

        if (!opts.want_input_grad) continue;
        std::vector<double> dx(input_size, 0.0);
        for (std::size_t p = 0; p < n_local; ++p) {
            if (d_birth[p] == 0.0 && d_death[p] == 0.0) continue;
            std::uint32_t dp = cache.lm.source_pairs[p];
            const auto& cells = cache.diagram.pairing.at(dp);
            route_cell(cells[0], d_birth[p], dx);
            route_cell(cells[1], d_death[p], dx);
        }
        tape.d_input.push_back(std::move(dx));
    }
    return tape;
}

// Structure-element evaluation straight from a diagram (the stability
// harness compares elements across diagrams without any filtration).
inline double structure_element(const GTheta& g, std::span<const double> omega,
                                const LandscapeParams& lp, const PersistenceDiagram& d, int dim,
                                InfPolicy inf_policy = InfPolicy::Drop) {
    LandscapeMatrix lm = landscape(d, lp, dim, inf_policy);
    std::vector<double> v = weighted_landscape(lm, omega);
    return g_eval(g, v);
}

// Landscape matrix of the bound filtration only, the parameter-independent
// part of the pipeline. With the layer at the input this is all that needs
// caching across training epochs; element parameters enter afterwards.
inline LandscapeMatrix layer_landscape(const PLLayLayer& layer, const GridFunction& x,
                                       DtmOptions opts = {}) {
    layer.validate();
    x.validate();
    FilteredComplex complex;
    if (layer.binding.kind == FiltrationBinding::Kind::DtmWeights) {
        opts.keep_provenance = false;
        std::vector<double> queries = grid_vertices(x);
        DtmField field = dtm_weights(queries, 2, x.values, queries, layer.binding.dtm, opts);
        complex = cubical_sublevel(x.width, x.height, field.values);
    } else if (layer.binding.kind == FiltrationBinding::Kind::RawFunction) {
        complex = cubical_sublevel(x.width, x.height, x.values);
    } else {
        throw std::invalid_argument("layer_landscape: DtmPoints binding expects a point cloud");
    }
    PersistenceDiagram d = compute_persistence(complex, /*keep_pairing=*/false);
    return landscape(d, layer.landscape, layer.dim, layer.inf_policy);
}

inline LandscapeMatrix layer_landscape(const PLLayLayer& layer, const PointCloud& x,
                                       DtmOptions opts = {}) {
    layer.validate();
    x.validate();
    if (layer.binding.kind != FiltrationBinding::Kind::DtmPoints)
        throw std::invalid_argument("layer_landscape: only DtmPoints accepts a point cloud");
    opts.keep_provenance = false;
    GridSpec grid = layer.binding.grid;
    if (layer.binding.auto_domain) grid.domain = bounding_box(x);
    std::vector<double> queries = grid_vertices(grid.width, grid.height, grid.domain);
    DtmField field = dtm_points(x, queries, layer.binding.dtm, opts);
    FilteredComplex complex = cubical_sublevel(grid.width, grid.height, field.values);
    PersistenceDiagram d = compute_persistence(complex, /*keep_pairing=*/false);
    return landscape(d, layer.landscape, layer.dim, layer.inf_policy);
}

// Forward value and parameter gradients of one element over a cached
// landscape matrix (no input route).
struct ElementGrad {
    double value = 0.0;
    std::vector<double> d_sigma;
    std::vector<double> d_mu;
    std::vector<double> d_logits;
};

inline ElementGrad element_forward_backward(const StructureElement& e, const LandscapeMatrix& lm) {
    std::vector<double> omega = softmax(e.logits);
    std::vector<double> v = weighted_landscape(lm, omega);
    GGrad gg = g_eval_grad(e.g, v);
    ElementGrad out;
    out.value = gg.value;
    out.d_sigma = std::move(gg.d_sigma);
    out.d_mu = std::move(gg.d_mu);
    const std::size_t k_max = lm.params.k_max;
    std::vector<double> d_omega(k_max, 0.0);
    for (std::size_t k = 0; k < k_max; ++k)
        for (std::size_t l = 0; l < lm.params.samples; ++l)
            d_omega[k] += gg.d_v[l] * lm.at(k, l);
    double inner = 0.0;
    for (std::size_t k = 0; k < k_max; ++k) inner += omega[k] * d_omega[k];
    out.d_logits.resize(k_max);
    for (std::size_t k = 0; k < k_max; ++k) out.d_logits[k] = omega[k] * (d_omega[k] - inner);
    return out;
}

inline double element_value(const StructureElement& e, const LandscapeMatrix& lm) {
    std::vector<double> omega = softmax(e.logits);
    return g_eval(e.g, weighted_landscape(lm, omega));
}

}  // namespace pllay
