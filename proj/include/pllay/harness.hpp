#pragma once

// Reusable verification harnesses behind the gradcheck / stability / orbit
// experiment commands and the acceptance suite.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pllay/datasets.hpp"
#include "pllay/layer.hpp"
#include "pllay/metrics.hpp"
#include "pllay/nn.hpp"

namespace pllay {

namespace detail {

inline double rel_err_floor(double a, double b, double floor = 1e-6) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Gradient fidelity: full-chain central differences against backward(), plus
// DTM-only derivative checks for both input conventions.
// ---------------------------------------------------------------------------

struct GradcheckConfig {
    std::size_t n_inputs = 10;
    std::size_t grid_w = 8, grid_h = 8;
    double m0 = 0.05;
    double fd_step = 1e-5;
    double chain_tol = 1e-4;
    double dtm_tol = 1e-5;
    std::size_t dtm_configs = 20;
    std::uint64_t seed = 0;
    bool broken_sign = false;  // test hook: negate analytic gradients
};

struct GradcheckReport {
    double max_rel_chain = 0.0;
    double max_rel_dtm = 0.0;
    std::size_t chain_evaluated = 0;
    std::size_t chain_flagged = 0;
    std::size_t chain_compared = 0;
    std::size_t dtm_evaluated = 0;
    std::size_t dtm_flagged = 0;
    bool pass = false;
    double seconds = 0.0;
};

// Random grid input with genuine topological content: a mass ring at a
// random center and radius plus a detached blob, with per-pixel random
// weights. Both homology dimensions carry pairs with workable persistence.
inline GridFunction random_topological_grid(Rng& rng, std::size_t w, std::size_t h) {
    GridFunction g;
    g.width = w;
    g.height = h;
    g.domain = Box2{-1, -1, 1, 1};
    g.values.assign(w * h, 0.0);
    double side = double(std::min(w, h));
    double cx = rng.uniform(2.6, double(w) - 3.6);
    double cy = rng.uniform(2.6, double(h) - 3.6);
    double rad = rng.uniform(0.24 * side, 0.31 * side);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            double d = std::hypot(double(x) - cx, double(y) - cy);
            double v = 0.02 + 0.02 * rng.uniform01();
            if (std::abs(d - rad) < 0.9) v = rng.uniform(0.55, 1.0);
            g.values[y * w + x] = v;
        }
    std::size_t bx = cx < double(w) / 2.0 ? w - 1 : 0;
    std::size_t by = cy < double(h) / 2.0 ? h - 1 : 0;
    g.values[by * w + bx] = rng.uniform(0.7, 1.0);
    return g;
}

inline GradcheckReport run_gradcheck(const GradcheckConfig& cfg) {
    double t0 = detail::now_seconds();
    GradcheckReport rep;
    const double h = cfg.fd_step;
    const double sign = cfg.broken_sign ? -1.0 : 1.0;
    Rng rng(derive_seed(cfg.seed, 0x96AD));

    // Full chain over the weights-convention DTM filtration.
    LandscapeParams lp{2, 0.0, 0.8, 9};
    for (GKind kind : {GKind::Affine, GKind::Logarithmic}) {
        for (int dim : {0, 1}) {
            for (std::size_t input = 0; input < cfg.n_inputs; ++input) {
                FiltrationBinding binding;
                binding.kind = FiltrationBinding::Kind::DtmWeights;
                binding.dtm = DtmParams{cfg.m0, 2.0};
                PLLayLayer layer =
                    make_layer(2, kind, lp, dim, binding,
                               derive_seed(cfg.seed, 1000 + input + (dim ? 100 : 0)), 1.0);
                GridFunction x = random_topological_grid(rng, cfg.grid_w, cfg.grid_h);

                ForwardCache cache = forward(layer, x);
                BackwardOptions opts;
                opts.nongeneric_tol = 5.0 * h;
                GradientTape tape = backward(layer, cache, opts);
                if (tape.nongeneric_flags > 0) {
                    ++rep.chain_flagged;
                    continue;
                }
                ++rep.chain_evaluated;
                for (std::size_t j = 0; j < x.values.size(); ++j) {
                    GridFunction xp = x, xm = x;
                    xp.values[j] += h;
                    xm.values[j] -= h;
                    ForwardCache cp = forward(layer, xp);
                    ForwardCache cm = forward(layer, xm);
                    for (std::size_t e = 0; e < layer.n_h(); ++e) {
                        double fd = (cp.outputs[e] - cm.outputs[e]) / (2.0 * h);
                        double an = sign * tape.d_input[e][j];
                        if (std::abs(fd) < 1e-8 && std::abs(an) < 1e-8) continue;
                        rep.max_rel_chain =
                            std::max(rep.max_rel_chain, detail::rel_err_floor(an, fd));
                        ++rep.chain_compared;
                    }
                }
            }
        }
    }

    // DTM-only derivative checks, both conventions, step 1e-6.
    const double hd = 1e-6;
    Rng drng(derive_seed(cfg.seed, 0xD73));
    for (std::size_t trial = 0; trial < cfg.dtm_configs; ++trial) {
        PointCloud pc;
        pc.dim = 2;
        for (int i = 0; i < 12; ++i) {
            pc.coords.push_back(drng.uniform01());
            pc.coords.push_back(drng.uniform01());
            pc.weights.push_back(drng.uniform(0.5, 2.0));
        }
        DtmParams params{drng.uniform(0.15, 0.45), 2.0};
        std::vector<double> q{drng.uniform01(), drng.uniform01()};
        DtmGradient g = dtm_points_grad(pc, q, params);
        if (g.nondifferentiable) {
            ++rep.dtm_flagged;
            continue;
        }
        ++rep.dtm_evaluated;
        for (std::size_t j = 0; j < pc.coords.size(); ++j) {
            PointCloud p2 = pc, p3 = pc;
            p2.coords[j] += hd;
            p3.coords[j] -= hd;
            double fd = (dtm_points(p2, q, params).values[0] -
                         dtm_points(p3, q, params).values[0]) /
                        (2.0 * hd);
            double an = sign * g.grad[j];
            if (std::abs(fd) < 1e-9 && std::abs(an) < 1e-9) continue;
            rep.max_rel_dtm = std::max(rep.max_rel_dtm, detail::rel_err_floor(an, fd, 1e-4));
        }
    }
    for (std::size_t trial = 0; trial < cfg.dtm_configs; ++trial) {
        std::vector<double> Y, X;
        for (int i = 0; i < 12; ++i) {
            Y.push_back(drng.uniform01());
            Y.push_back(drng.uniform01());
            X.push_back(drng.uniform(0.5, 2.0));
        }
        DtmParams params{drng.uniform(0.15, 0.45), 2.0};
        std::vector<double> q{drng.uniform01(), drng.uniform01()};
        DtmGradient g = dtm_weights_grad(Y, 2, X, q, params);
        if (g.nondifferentiable) {
            ++rep.dtm_flagged;
            continue;
        }
        ++rep.dtm_evaluated;
        for (std::size_t j = 0; j < X.size(); ++j) {
            std::vector<double> X2 = X, X3 = X;
            X2[j] += hd;
            X3[j] -= hd;
            double fd = (dtm_weights(Y, 2, X2, q, params).values[0] -
                         dtm_weights(Y, 2, X3, q, params).values[0]) /
                        (2.0 * hd);
            double an = sign * g.grad[j];
            if (std::abs(fd) < 1e-9 && std::abs(an) < 1e-9) continue;
            rep.max_rel_dtm = std::max(rep.max_rel_dtm, detail::rel_err_floor(an, fd, 1e-4));
        }
    }

    rep.pass = rep.max_rel_chain <= cfg.chain_tol && rep.max_rel_dtm <= cfg.dtm_tol &&
               rep.chain_evaluated > 0 && rep.dtm_evaluated > 0 && rep.chain_compared > 0;
    rep.seconds = detail::now_seconds() - t0;
    return rep;
}

// ---------------------------------------------------------------------------
// Stability: |S(D) - S(D')| <= L_g * d_B, sampled landscape sup <= d_B, and
// d_B <= W_1, over random diagram pairs and random readouts.
// ---------------------------------------------------------------------------

struct StabilityConfig {
    std::size_t trials = 100;
    std::uint64_t seed = 0;
};

struct StabilityReport {
    std::size_t violations_element = 0;
    std::size_t violations_landscape = 0;
    std::size_t violations_db_w1 = 0;
    double max_ratio = 0.0;  // |dS| / (L_g * d_B) over d_B > 0
    std::size_t evaluated = 0;
    std::size_t skipped_degenerate = 0;
    bool pass = false;
    double seconds = 0.0;
};

inline StabilityReport run_stability(const StabilityConfig& cfg) {
    double t0 = detail::now_seconds();
    StabilityReport rep;
    Rng rng(derive_seed(cfg.seed, 0x57AB));
    LandscapeParams lp{3, 0.0, 3.0, 21};
    // Allowance for floating-point roundoff on mathematically exact bounds.
    const double fp_slack = 1e-12;

    for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
        std::vector<PersistencePair> A, B;
        std::size_t na = 2 + rng.uniform_index(11), nb = 2 + rng.uniform_index(11);
        for (std::size_t i = 0; i < na; ++i) {
            double b = rng.uniform(0.0, 2.0);
            A.push_back({b, b + rng.uniform(0.05, 1.5), 1});
        }
        if (trial % 5 == 0) {
            B = A;  // perturbed copy
            for (auto& p : B) {
                p.birth += rng.uniform(-0.05, 0.05);
                p.death += rng.uniform(-0.05, 0.05);
                if (p.death <= p.birth) p.death = p.birth + 0.01;
            }
        } else {
            for (std::size_t i = 0; i < nb; ++i) {
                double b = rng.uniform(0.0, 2.0);
                B.push_back({b, b + rng.uniform(0.05, 1.5), 1});
            }
        }

        GTheta g;
        if (trial % 2 == 0) {
            g.kind = GKind::Affine;
            g.sigma.resize(lp.samples);
            g.mu.assign(lp.samples, 0.0);
            for (auto& s : g.sigma) s = rng.uniform(-1.0, 1.0);
            for (auto& u : g.mu) u = rng.uniform(0.0, 0.3);
        } else {
            g.kind = GKind::Logarithmic;
            g.sigma = {rng.uniform(0.5, 2.0)};
            g.mu.assign(lp.samples, 0.0);
            for (auto& u : g.mu) u = rng.uniform(0.0, 0.3);
        }
        std::vector<double> logits(lp.k_max);
        for (auto& v : logits) v = rng.uniform(-1.0, 1.0);
        std::vector<double> omega = softmax(logits);

        PersistenceDiagram da, db;
        da.pairs = A;
        db.pairs = B;
        double sa = structure_element(g, omega, lp, da, 1);
        double sb = structure_element(g, omega, lp, db, 1);
        double d_b = bottleneck(A, B).first;
        double w1 = wasserstein(A, B, 1.0);
        double lg = lipschitz_bound(g);

        LandscapeMatrix la = landscape(da, lp, 1);
        LandscapeMatrix lb = landscape(db, lp, 1);
        double sup = 0.0;
        for (std::size_t i = 0; i < la.values.size(); ++i)
            sup = std::max(sup, std::abs(la.values[i] - lb.values[i]));

        ++rep.evaluated;
        if (sup > d_b + fp_slack) ++rep.violations_landscape;
        if (d_b > w1 + fp_slack) ++rep.violations_db_w1;
        if (std::abs(sa - sb) > lg * d_b * (1.0 + 1e-10) + fp_slack) ++rep.violations_element;
        if (d_b > 0.0 && lg > 0.0) {
            rep.max_ratio = std::max(rep.max_ratio, std::abs(sa - sb) / (lg * d_b));
        } else {
            ++rep.skipped_degenerate;
        }
    }
    rep.pass = rep.violations_element == 0 && rep.violations_landscape == 0 &&
               rep.violations_db_w1 == 0;
    rep.seconds = detail::now_seconds() - t0;
    return rep;
}

// ---------------------------------------------------------------------------
// Scaled orbit classification: raw-coordinate MLP against the same MLP fed
// by a PLLay layer over the points-convention DTM filtration.
// ---------------------------------------------------------------------------

struct OrbitExperimentConfig {
    std::size_t per_class = 200;
    std::size_t n_points = 300;
    std::size_t grid = 40;
    double m0 = 0.01;
    std::size_t k_max = 2;
    double t_min = 0.03, t_max = 0.1;
    std::size_t samples = 17;
    std::size_t n_h = 64;
    std::size_t hidden = 32;
    std::size_t epochs = 150;
    std::size_t batch = 16;
    double lr = 1e-3;
    double train_frac = 0.7;
    int dim = 1;  // loop structure separates the orbit classes
    double sigma_scale = 10.0;
    PllayTrainMode mode = PllayTrainMode::EndToEnd;
    std::vector<std::uint64_t> seeds{1, 2, 3};
    unsigned threads = 0;
};

struct OrbitSeedResult {
    std::uint64_t seed = 0;
    double raw_acc = 0.0;
    double pllay_acc = 0.0;
    std::vector<double> pllay_class_acc;     // per class, on the test split
    std::vector<std::size_t> class_counts;   // test samples per class
    double seconds = 0.0;
};

struct OrbitExperimentReport {
    std::vector<OrbitSeedResult> per_seed;
    double mean_raw = 0.0;
    double mean_pllay = 0.0;
    double seconds = 0.0;
};

inline OrbitExperimentReport run_orbit_experiment(
    const OrbitExperimentConfig& cfg,
    const std::function<void(const std::string&)>& progress = {}) {
    double t0 = detail::now_seconds();
    OrbitExperimentReport rep;
    const std::size_t n_classes = orbit_r_values().size();

    for (std::uint64_t seed : cfg.seeds) {
        double ts = detail::now_seconds();
        LabeledClouds data = gen_orbit_dataset(cfg.per_class, cfg.n_points, seed);
        const std::size_t n = data.clouds.size();

        Rng split_rng(derive_seed(seed, 0x5B117));
        std::vector<std::size_t> perm = split_rng.permutation(n);
        std::size_t n_train = static_cast<std::size_t>(cfg.train_frac * double(n));
        std::vector<PointCloud> train_clouds, test_clouds;
        std::vector<int> train_labels, test_labels;
        for (std::size_t i = 0; i < n; ++i) {
            auto& dst_c = i < n_train ? train_clouds : test_clouds;
            auto& dst_l = i < n_train ? train_labels : test_labels;
            dst_c.push_back(std::move(data.clouds[perm[i]]));
            dst_l.push_back(data.labels[perm[i]]);
        }

        // Raw baseline: flattened coordinates.
        std::vector<double> Xtr, Xte;
        for (const auto& c : train_clouds) Xtr.insert(Xtr.end(), c.coords.begin(), c.coords.end());
        for (const auto& c : test_clouds) Xte.insert(Xte.end(), c.coords.begin(), c.coords.end());
        MlpSpec raw_spec;
        raw_spec.widths = {cfg.n_points * 2, cfg.hidden, n_classes};
        raw_spec.lr = cfg.lr;
        raw_spec.batch_size = cfg.batch;
        raw_spec.epochs = cfg.epochs;
        raw_spec.seed = derive_seed(seed, 0x3A3);
        TrainResult raw = train(raw_spec, Xtr, train_labels, &Xte, &test_labels);
        if (progress)
            progress("seed " + std::to_string(seed) +
                     ": raw mlp test acc = " + std::to_string(raw.test_acc));

        // PLLay-fed model.
        LandscapeParams lp{cfg.k_max, cfg.t_min, cfg.t_max, cfg.samples};
        FiltrationBinding binding;
        binding.kind = FiltrationBinding::Kind::DtmPoints;
        binding.dtm = DtmParams{cfg.m0, 2.0};
        binding.grid = GridSpec{cfg.grid, cfg.grid, Box2{0.0125, 0.0125, 0.9875, 0.9875}};
        PLLayLayer layer = make_layer(cfg.n_h, GKind::Affine, lp, cfg.dim, binding,
                                      derive_seed(seed, 0x1A7E2), cfg.sigma_scale);
        MlpSpec pllay_spec = raw_spec;
        pllay_spec.widths = {cfg.n_h, cfg.hidden, n_classes};
        pllay_spec.seed = derive_seed(seed, 0x9B1);
        PllayTrainResult pl =
            train_with_pllay(layer, pllay_spec, train_clouds, train_labels, cfg.mode,
                             &test_clouds, &test_labels, cfg.threads);
        if (progress)
            progress("seed " + std::to_string(seed) +
                     ": pllay mlp test acc = " + std::to_string(pl.test_acc));

        OrbitSeedResult res;
        res.seed = seed;
        res.raw_acc = raw.test_acc;
        res.pllay_acc = pl.test_acc;
        res.pllay_class_acc.assign(n_classes, 0.0);
        res.class_counts.assign(n_classes, 0);
        {
            std::vector<LandscapeMatrix> lms_test(test_clouds.size());
            parallel_for(
                test_clouds.size(),
                [&](std::size_t i) { lms_test[i] = layer_landscape(pl.layer, test_clouds[i]); },
                cfg.threads);
            for (std::size_t i = 0; i < test_clouds.size(); ++i) {
                std::vector<double> feat(cfg.n_h);
                for (std::size_t e = 0; e < cfg.n_h; ++e)
                    feat[e] = element_value(pl.layer.elements[e], lms_test[i]);
                auto cls = static_cast<std::size_t>(test_labels[i]);
                res.class_counts[cls] += 1;
                if (pl.model.predict(feat) == test_labels[i]) res.pllay_class_acc[cls] += 1.0;
            }
            for (std::size_t c = 0; c < n_classes; ++c)
                if (res.class_counts[c] > 0) res.pllay_class_acc[c] /= double(res.class_counts[c]);
        }
        res.seconds = detail::now_seconds() - ts;
        rep.per_seed.push_back(res);
    }
    for (const auto& r : rep.per_seed) {
        rep.mean_raw += r.raw_acc;
        rep.mean_pllay += r.pllay_acc;
    }
    rep.mean_raw /= double(rep.per_seed.size());
    rep.mean_pllay /= double(rep.per_seed.size());
    rep.seconds = detail::now_seconds() - t0;
    return rep;
}

}  // namespace pllay
