#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "pllay/datasets.hpp"
#include "pllay/layer.hpp"
#include "pllay/metrics.hpp"
#include "testutil.hpp"

using namespace pllay;

namespace {

GTheta affine_theta(std::vector<double> sigma, std::vector<double> mu) {
    GTheta g;
    g.kind = GKind::Affine;
    g.sigma = std::move(sigma);
    g.mu = std::move(mu);
    return g;
}

GTheta log_theta(double sigma, std::vector<double> mu) {
    GTheta g;
    g.kind = GKind::Logarithmic;
    g.sigma = {sigma};
    g.mu = std::move(mu);
    return g;
}

GTheta random_theta(pllay::Rng& rng, std::size_t m, bool affine) {
    if (affine) {
        std::vector<double> sigma(m), mu(m);
        for (auto& s : sigma) s = rng.uniform(-1.0, 1.0);
        for (auto& u : mu) u = rng.uniform(0.0, 0.5);
        return affine_theta(std::move(sigma), std::move(mu));
    }
    std::vector<double> mu(m);
    for (auto& u : mu) u = rng.uniform(0.0, 0.5);
    return log_theta(rng.uniform(0.5, 2.0), std::move(mu));
}

PLLayLayer small_layer(GKind kind, int dim, FiltrationBinding::Kind bk, std::uint64_t seed,
                       std::size_t n_h = 2) {
    LandscapeParams lp{2, 0.0, 0.6, 9};
    FiltrationBinding binding;
    binding.kind = bk;
    binding.dtm = DtmParams{0.12, 2.0};
    PLLayLayer layer = make_layer(n_h, kind, lp, dim, binding, seed, 1.0);
    return layer;
}

}  // namespace

TEST_CASE("g_eval worked examples", "[layer]") {
    std::vector<double> v{0.5, 1.5, -1.0};
    CHECK(g_eval(affine_theta({1, 1, 1}, {0, 0, 0}), v) == 1.0);  // sum of v
    CHECK(g_eval(affine_theta({2, -1, 4}, v), v) == 0.0);         // v == mu
    CHECK(g_eval(log_theta(3.0, v), v) == 1.0);                   // exp(0)
}

TEST_CASE("lipschitz bounds", "[layer]") {
    CHECK(lipschitz_bound(affine_theta({1, -2, 3}, {0, 0, 0})) == 6.0);
    CHECK(lipschitz_bound(affine_theta({0, 0, 0}, {0, 0, 0})) == 0.0);
    std::vector<double> mu25(25, 0.0);
    CHECK(lipschitz_bound(log_theta(2.0, mu25)) == 10.0);
}

TEST_CASE("forward on an empty diagram evaluates g at zero", "[layer]") {
    // constant grid + raw binding: only an essential H0 class, dropped
    PLLayLayer layer = small_layer(GKind::Affine, 0, FiltrationBinding::Kind::RawFunction, 5, 1);
    auto& g = layer.elements[0].g;
    for (auto& s : g.sigma) s = 0.7;
    for (auto& u : g.mu) u = 0.3;
    GridFunction x;
    x.width = x.height = 4;
    x.domain = Box2{-1, -1, 1, 1};
    x.values.assign(16, 0.25);
    ForwardCache cache = forward(layer, x);
    double expected = 0.0;
    for (std::size_t l = 0; l < layer.landscape.samples; ++l) expected += 0.7 * (0.0 - 0.3);
    CHECK_THAT(cache.outputs[0], Catch::Matchers::WithinRel(expected, 1e-12));
}

TEST_CASE("elements sharing parameters emit identical values; forward is deterministic",
          "[layer]") {
    PLLayLayer layer = small_layer(GKind::Affine, 1, FiltrationBinding::Kind::DtmWeights, 7, 2);
    layer.elements[1] = layer.elements[0];
    GridFunction x = synth_digit8(12, 12);
    ForwardCache c1 = forward(layer, x);
    ForwardCache c2 = forward(layer, x);
    CHECK(c1.outputs[0] == c1.outputs[1]);
    CHECK(c1.outputs == c2.outputs);
}

TEST_CASE("forward cross-checks the independent landscape path", "[layer]") {
    // affine sigma = 1, mu = 0, uniform omega: S equals the sampled sum of
    // the mean of the top-k landscapes computed separately.
    PLLayLayer layer = small_layer(GKind::Affine, 1, FiltrationBinding::Kind::DtmWeights, 11, 1);
    auto& e = layer.elements[0];
    std::fill(e.g.sigma.begin(), e.g.sigma.end(), 1.0);
    std::fill(e.g.mu.begin(), e.g.mu.end(), 0.0);
    std::fill(e.logits.begin(), e.logits.end(), 0.0);
    GridFunction x = synth_digit8(14, 14);
    ForwardCache cache = forward(layer, x);

    DtmFiltration filt = dtm_filtration_weights(x, layer.binding.dtm);
    PersistenceDiagram d = compute_persistence(filt.complex);
    LandscapeMatrix lm = landscape(d, layer.landscape, 1);
    double expected = 0.0;
    for (std::size_t l = 0; l < layer.landscape.samples; ++l) {
        double mean = 0.0;
        for (std::size_t k = 0; k < layer.landscape.k_max; ++k) mean += lm.at(k, l);
        expected += mean / double(layer.landscape.k_max);
    }
    CHECK_THAT(cache.outputs[0], Catch::Matchers::WithinRel(expected, 1e-12));
}

TEST_CASE("omega at a simplex corner equals the single-landscape evaluation", "[layer]") {
    PLLayLayer layer = small_layer(GKind::Affine, 1, FiltrationBinding::Kind::DtmWeights, 13, 1);
    layer.elements[0].logits = {60.0, 0.0};
    GridFunction x = synth_digit8(12, 12);
    ForwardCache cache = forward(layer, x);

    std::vector<double> row0(layer.landscape.samples);
    for (std::size_t l = 0; l < layer.landscape.samples; ++l) row0[l] = cache.lm.at(0, l);
    CHECK_THAT(cache.outputs[0],
               Catch::Matchers::WithinAbs(g_eval(layer.elements[0].g, row0), 1e-12));
}

namespace {

// Central-difference check of the full chain for one layer/input combo.
// Returns the max relative error over unflagged configurations; flagged
// configurations are skipped by the caller.
struct ChainCheck {
    double max_rel = 0.0;
    bool flagged = false;
    int compared = 0;
};

ChainCheck fd_chain_check(const PLLayLayer& layer, const GridFunction& x, double h,
                          double fd_guard) {
    ForwardCache cache = forward(layer, x);
    BackwardOptions opts;
    opts.nongeneric_tol = fd_guard;
    GradientTape tape = backward(layer, cache, opts);
    ChainCheck out;
    if (tape.nongeneric_flags > 0) {
        out.flagged = true;
        return out;
    }
    for (std::size_t j = 0; j < x.values.size(); ++j) {
        std::vector<double> fd(layer.n_h());
        GridFunction xp = x, xm = x;
        xp.values[j] += h;
        xm.values[j] -= h;
        ForwardCache cp = forward(layer, xp);
        ForwardCache cm = forward(layer, xm);
        for (std::size_t e = 0; e < layer.n_h(); ++e) {
            double fd_v = (cp.outputs[e] - cm.outputs[e]) / (2.0 * h);
            double an = tape.d_input[e][j];
            if (std::abs(fd_v) < 1e-8 && std::abs(an) < 1e-8) continue;
            out.max_rel = std::max(out.max_rel, testutil::rel_err(an, fd_v));
            ++out.compared;
        }
    }
    return out;
}

}  // namespace

TEST_CASE("full-chain gradients match finite differences (dtm-weights)", "[layer]") {
    pllay::Rng rng(401);
    const double h = 1e-5;
    for (GKind kind : {GKind::Affine, GKind::Logarithmic}) {
        for (int dim : {0, 1}) {
            int valid = 0;
            for (int trial = 0; trial < 6 && valid < 3; ++trial) {
                PLLayLayer layer = small_layer(kind, dim, FiltrationBinding::Kind::DtmWeights,
                                               500 + trial, 2);
                GridFunction x = testutil::random_grid(rng, 6, 6, 0.1, 1.0);
                ChainCheck res = fd_chain_check(layer, x, h, 5 * h);
                if (res.flagged) continue;
                ++valid;
                INFO("kind=" << int(kind) << " dim=" << dim << " compared=" << res.compared);
                CHECK(res.max_rel <= 1e-4);
            }
            CHECK(valid >= 1);
        }
    }
}

TEST_CASE("full-chain gradients match finite differences (raw function)", "[layer]") {
    pllay::Rng rng(409);
    const double h = 1e-5;
    int valid = 0;
    for (int trial = 0; trial < 6 && valid < 3; ++trial) {
        PLLayLayer layer = small_layer(GKind::Affine, 0, FiltrationBinding::Kind::RawFunction,
                                       600 + trial, 2);
        layer.landscape.t_min = 0.0;
        layer.landscape.t_max = 1.0;
        GridFunction x = testutil::random_grid(rng, 6, 6, 0.05, 1.0);
        ChainCheck res = fd_chain_check(layer, x, h, 5 * h);
        if (res.flagged) continue;
        ++valid;
        CHECK(res.max_rel <= 1e-4);
    }
    CHECK(valid >= 1);
}

TEST_CASE("full-chain gradients match finite differences (dtm-points)", "[layer]") {
    pllay::Rng rng(419);
    const double h = 1e-5;
    int valid = 0;
    for (int trial = 0; trial < 8 && valid < 3; ++trial) {
        LandscapeParams lp{2, 0.0, 0.7, 9};
        FiltrationBinding binding;
        binding.kind = FiltrationBinding::Kind::DtmPoints;
        binding.dtm = DtmParams{0.2, 2.0};
        binding.grid = GridSpec{8, 8, Box2{-0.1, -0.1, 1.1, 1.1}};
        PLLayLayer layer = make_layer(2, GKind::Affine, lp, 1, binding, 700 + trial, 1.0);

        PointCloud x = testutil::random_cloud(rng, 14, 2);
        ForwardCache cache = forward(layer, x);
        BackwardOptions opts;
        opts.nongeneric_tol = 5 * h;
        GradientTape tape = backward(layer, cache, opts);
        if (tape.nongeneric_flags > 0) continue;
        ++valid;
        double max_rel = 0.0;
        for (std::size_t j = 0; j < x.coords.size(); ++j) {
            PointCloud xp = x, xm = x;
            xp.coords[j] += h;
            xm.coords[j] -= h;
            ForwardCache cp = forward(layer, xp);
            ForwardCache cm = forward(layer, xm);
            for (std::size_t e = 0; e < layer.n_h(); ++e) {
                double fd_v = (cp.outputs[e] - cm.outputs[e]) / (2.0 * h);
                double an = tape.d_input[e][j];
                if (std::abs(fd_v) < 1e-8 && std::abs(an) < 1e-8) continue;
                max_rel = std::max(max_rel, testutil::rel_err(an, fd_v));
            }
        }
        CHECK(max_rel <= 1e-4);
    }
    CHECK(valid >= 1);
}

TEST_CASE("parameter gradients match finite differences", "[layer]") {
    pllay::Rng rng(421);
    const double h = 1e-6;
    for (GKind kind : {GKind::Affine, GKind::Logarithmic}) {
        PLLayLayer layer = small_layer(kind, 1, FiltrationBinding::Kind::DtmWeights, 800, 1);
        GridFunction x = synth_digit8(12, 12);
        ForwardCache cache = forward(layer, x);
        GradientTape tape = backward(layer, cache);
        auto& e = layer.elements[0];

        auto eval_with = [&](auto&& mutate) {
            PLLayLayer l2 = layer;
            mutate(l2.elements[0]);
            return forward(l2, x).outputs[0];
        };
        for (std::size_t i = 0; i < e.g.sigma.size(); ++i) {
            double fd = testutil::central_diff(
                [&](double s) {
                    return eval_with([&](StructureElement& el) { el.g.sigma[i] = s; });
                },
                e.g.sigma[i], h);
            CHECK(testutil::rel_err(tape.d_sigma[0][i], fd) <= 1e-5);
        }
        for (std::size_t i = 0; i < e.g.mu.size(); ++i) {
            double fd = testutil::central_diff(
                [&](double u) { return eval_with([&](StructureElement& el) { el.g.mu[i] = u; }); },
                e.g.mu[i], h);
            if (std::abs(fd) < 1e-10 && std::abs(tape.d_mu[0][i]) < 1e-10) continue;
            CHECK(testutil::rel_err(tape.d_mu[0][i], fd) <= 1e-5);
        }
        for (std::size_t i = 0; i < e.logits.size(); ++i) {
            double fd = testutil::central_diff(
                [&](double v) {
                    return eval_with([&](StructureElement& el) { el.logits[i] = v; });
                },
                e.logits[i], h);
            if (std::abs(fd) < 1e-10 && std::abs(tape.d_logits[0][i]) < 1e-10) continue;
            CHECK(testutil::rel_err(tape.d_logits[0][i], fd) <= 1e-5);
        }
    }
}

TEST_CASE("raw binding: pixels that are never an argmax get zero gradient", "[layer]") {
    pllay::Rng rng(431);
    PLLayLayer layer = small_layer(GKind::Affine, 0, FiltrationBinding::Kind::RawFunction, 900, 1);
    layer.landscape.t_max = 1.0;
    GridFunction x = testutil::random_grid(rng, 5, 5, 0.05, 1.0);
    ForwardCache cache = forward(layer, x);
    GradientTape tape = backward(layer, cache);

    std::set<std::int64_t> touched;
    for (std::size_t p = 0; p < cache.diagram.pairs.size(); ++p) {
        for (std::int64_t cid : cache.diagram.pairing[p]) {
            if (cid == kNoCell) continue;
            touched.insert(cache.complex.cells[static_cast<std::size_t>(cid)].argmax_vertex);
        }
    }
    for (std::size_t j = 0; j < x.values.size(); ++j)
        if (!touched.count(static_cast<std::int64_t>(j))) CHECK(tape.d_input[0][j] == 0.0);
}

TEST_CASE("logarithmic g at v == mu is flagged with zero gradient", "[layer]") {
    PLLayLayer layer = small_layer(GKind::Logarithmic, 0, FiltrationBinding::Kind::RawFunction,
                                   901, 1);
    // constant grid -> empty diagram -> v = 0; mu = 0 puts g at its kink
    std::fill(layer.elements[0].g.mu.begin(), layer.elements[0].g.mu.end(), 0.0);
    GridFunction x;
    x.width = x.height = 4;
    x.domain = Box2{-1, -1, 1, 1};
    x.values.assign(16, 0.5);
    ForwardCache cache = forward(layer, x);
    GradientTape tape = backward(layer, cache);
    CHECK(tape.nongeneric_flags > 0);
    for (double v : tape.d_mu[0]) CHECK(v == 0.0);
}

TEST_CASE("structure elements are Lipschitz in the bottleneck distance", "[layer]") {
    pllay::Rng rng(433);
    LandscapeParams lp{3, 0.0, 3.0, 21};
    int evaluated = 0;
    for (int trial = 0; trial < 100; ++trial) {
        auto A = testutil::random_diagram(rng, 2 + rng.uniform_index(10), 1);
        auto B = testutil::random_diagram(rng, 2 + rng.uniform_index(10), 1);
        PersistenceDiagram da, db;
        da.pairs = A;
        db.pairs = B;
        GTheta g = random_theta(rng, lp.samples, trial % 2 == 0);
        std::vector<double> logits(lp.k_max);
        for (auto& v : logits) v = rng.uniform(-1.0, 1.0);
        std::vector<double> omega = softmax(logits);

        double sa = structure_element(g, omega, lp, da, 1);
        double sb = structure_element(g, omega, lp, db, 1);
        double d_b = bottleneck(A, B).first;
        if (d_b == 0.0) continue;
        ++evaluated;
        CHECK(std::abs(sa - sb) <= lipschitz_bound(g) * d_b * (1.0 + 1e-10) + 1e-12);
    }
    CHECK(evaluated >= 95);
}

TEST_CASE("digit-8 corruption: structure element moves within the stability bound", "[layer]") {
    GridFunction clean = synth_digit8(20, 20);
    PLLayLayer layer = small_layer(GKind::Affine, 1, FiltrationBinding::Kind::DtmWeights, 940, 1);
    layer.binding.dtm.m0 = 0.05;

    ForwardCache base = forward(layer, clean);
    const auto& e = layer.elements[0];
    double lg = lipschitz_bound(e.g);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        GridFunction noisy = corrupt(clean, 0.05, seed);
        ForwardCache pert = forward(layer, noisy);
        auto d1a = base.diagram.slice(1, false);
        auto d1b = pert.diagram.slice(1, false);
        double d_b = bottleneck(d1a, d1b).first;
        CHECK(std::abs(base.outputs[0] - pert.outputs[0]) <= lg * d_b * (1.0 + 1e-10) + 1e-12);
    }
}
