#include <catch2/catch_amalgamated.hpp>

#include "pllay/dtm.hpp"
#include "pllay/metrics.hpp"
#include "testutil.hpp"

using namespace pllay;

namespace {

PointCloud cloud1d(std::initializer_list<double> xs, std::initializer_list<double> ws = {}) {
    PointCloud pc;
    pc.dim = 1;
    pc.coords = xs;
    pc.weights = ws.size() ? std::vector<double>(ws) : std::vector<double>(xs.size(), 1.0);
    return pc;
}

}  // namespace

TEST_CASE("dtm_points worked examples", "[dtm]") {
    // two unit-mass points, half the mass required
    PointCloud pc = cloud1d({0.0, 1.0});
    DtmParams params{0.5, 2.0};
    std::vector<double> q{0.5};
    CHECK_THAT(dtm_points(pc, q, params).values[0], Catch::Matchers::WithinAbs(0.5, 1e-15));
    q = {0.0};
    CHECK(dtm_points(pc, q, params).values[0] == 0.0);

    // three points, tie at the cut broken by index
    PointCloud pc3 = cloud1d({0.0, 1.0, 2.0});
    DtmParams p3{2.0 / 3.0, 2.0};
    q = {1.0};
    CHECK_THAT(dtm_points(pc3, q, p3).values[0],
               Catch::Matchers::WithinAbs(std::sqrt(0.5), 1e-12));
}

TEST_CASE("dtm_weights worked examples", "[dtm]") {
    std::vector<double> Y{0.0, 1.0};
    DtmParams params{0.25, 2.0};
    std::vector<double> X{1.0, 3.0};
    std::vector<double> q{1.0};
    CHECK(dtm_weights(Y, 1, X, q, params).values[0] == 0.0);
    q = {0.5};
    CHECK_THAT(dtm_weights(Y, 1, X, q, params).values[0], Catch::Matchers::WithinAbs(0.5, 1e-15));

    // m0 -> 1 limit: full-mass average of squared distances
    std::vector<double> Xu{1.0, 1.0};
    DtmParams near1{1.0 - 1e-12, 2.0};
    q = {0.0};
    CHECK_THAT(dtm_weights(Y, 1, Xu, q, near1).values[0],
               Catch::Matchers::WithinAbs(std::sqrt(0.5), 1e-9));
}

TEST_CASE("dtm error paths", "[dtm]") {
    PointCloud pc = cloud1d({0.0, 1.0});
    DtmParams params{0.5, 2.0};
    std::vector<double> q2{0.0, 0.0};  // 2-d query against 1-d data
    CHECK_THROWS(dtm_points(pc, q2, /*query_dim=*/2, params));
    std::vector<double> ragged{0.0, 0.5, 1.0};
    PointCloud pc2 = cloud1d({0.0, 1.0});
    pc2.dim = 2;  // 2-d data, 3 doubles of queries cannot split evenly
    pc2.weights = {1.0};
    CHECK_THROWS(dtm_points(pc2, ragged, params));

    std::vector<double> Y{0.0, 1.0};
    std::vector<double> zeros{0.0, 0.0};
    std::vector<double> q{0.5};
    CHECK_THROWS(dtm_weights(Y, 1, zeros, q, params));

    DtmParams bad{1.5, 2.0};
    CHECK_THROWS(dtm_points(pc, q, bad));
}

TEST_CASE("provenance mass cut satisfies the sandwich inequality", "[dtm]") {
    pllay::Rng rng(42);
    for (int trial = 0; trial < 20; ++trial) {
        PointCloud pc = testutil::random_cloud(rng, 30, 2, 0.0, 1.0, false);
        DtmParams params{rng.uniform(0.1, 0.6), 2.0};
        std::vector<double> q{rng.uniform01(), rng.uniform01()};
        DtmField f = dtm_points(pc, q, params);
        const auto& prov = f.provenance[0];
        double total = 0.0;
        for (double w : pc.weights) total += w;
        double below = 0.0;
        for (std::size_t a = 0; a + 1 < prov.neighbors.size(); ++a)
            below += pc.weights[prov.neighbors[a]];
        double with_k = below + prov.receiver_weight;
        CHECK(below < params.m0 * total);
        CHECK(params.m0 * total <= with_k + 1e-12);
        CHECK_THAT(prov.leftover, Catch::Matchers::WithinAbs(params.m0 * total - below, 1e-12));
    }
}

TEST_CASE("k-d tree and brute force agree bitwise", "[dtm]") {
    pllay::Rng rng(1234);
    PointCloud pc = testutil::random_cloud(rng, 300, 2);
    // duplicate a few points to force distance ties
    for (int i = 0; i < 10; ++i) {
        auto p = pc.point(rng.uniform_index(150));
        pc.push_back(p, 1.0);
    }
    DtmParams params{0.07, 2.0};
    std::vector<double> queries;
    for (int i = 0; i < 60; ++i) queries.push_back(rng.uniform01());

    DtmOptions brute, tree;
    brute.backend = KnnBackend::BruteForce;
    tree.backend = KnnBackend::KdTree;
    DtmField fb = dtm_points(pc, queries, params, brute);
    DtmField ft = dtm_points(pc, queries, params, tree);
    for (std::size_t i = 0; i < fb.values.size(); ++i) {
        REQUIRE(fb.values[i] == ft.values[i]);
        REQUIRE(fb.provenance[i].neighbors == ft.provenance[i].neighbors);
        REQUIRE(fb.provenance[i].leftover == ft.provenance[i].leftover);
    }
}

TEST_CASE("dtm is nondecreasing in m0", "[dtm]") {
    pllay::Rng rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        PointCloud pc = testutil::random_cloud(rng, 25, 2, 0.0, 1.0, false);
        std::vector<double> q{rng.uniform01(), rng.uniform01()};
        double prev = 0.0;
        for (double m0 : {0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5}) {
            DtmParams params{m0, 2.0};
            double v = dtm_points(pc, q, params).values[0];
            CHECK(v >= prev - 1e-12);
            prev = v;
        }
    }
}

TEST_CASE("unit weights with m0 = k/n reduce to k-NN averaging", "[dtm]") {
    pllay::Rng rng(11);
    PointCloud pc = testutil::random_cloud(rng, 20, 2);
    std::vector<double> q{rng.uniform01(), rng.uniform01()};
    for (std::size_t k : {1u, 3u, 7u, 12u}) {
        DtmParams params{double(k) / 20.0, 2.0};
        double v = dtm_points(pc, q, params).values[0];
        auto nb = brute_force_knn(pc.coords, 2, q, k);
        double mean = 0.0;
        for (const auto& n : nb) mean += n.dist2;
        mean /= double(k);
        CHECK_THAT(v, Catch::Matchers::WithinAbs(std::sqrt(mean), 1e-12));
    }
}

TEST_CASE("dtm stability against W2 on empirical measures", "[dtm]") {
    pllay::Rng rng(21);
    for (int trial = 0; trial < 8; ++trial) {
        std::size_t n = 20 + 5 * trial;
        PointCloud P = testutil::random_cloud(rng, n, 2);
        PointCloud Q = testutil::random_cloud(rng, n, 2);
        double m0 = trial % 2 ? 0.3 : 0.1;
        DtmParams params{m0, 2.0};
        std::vector<double> grid;
        for (int gy = 0; gy < 15; ++gy)
            for (int gx = 0; gx < 15; ++gx) {
                grid.push_back(gx / 14.0);
                grid.push_back(gy / 14.0);
            }
        DtmField fp = dtm_points(P, grid, params);
        DtmField fq = dtm_points(Q, grid, params);
        double sup = 0.0;
        for (std::size_t i = 0; i < fp.values.size(); ++i)
            sup = std::max(sup, std::abs(fp.values[i] - fq.values[i]));
        double bound = w2_empirical(P, Q) / std::sqrt(m0);
        CHECK(sup <= bound + 1e-12);
    }
}

TEST_CASE("dtm_points_grad matches finite differences", "[dtm]") {
    pllay::Rng rng(31);
    const double h = 1e-6;
    int checked = 0;
    for (int trial = 0; trial < 20; ++trial) {
        PointCloud pc = testutil::random_cloud(rng, 12, 2, 0.0, 1.0, false);
        DtmParams params{rng.uniform(0.15, 0.45), 2.0};
        std::vector<double> q{rng.uniform01(), rng.uniform01()};
        DtmGradient g = dtm_points_grad(pc, q, params);
        if (g.nondifferentiable) continue;
        ++checked;
        for (std::size_t j = 0; j < pc.size(); ++j) {
            for (std::size_t c = 0; c < 2; ++c) {
                double fd = testutil::central_diff(
                    [&](double x) {
                        PointCloud p2 = pc;
                        p2.coords[j * 2 + c] = x;
                        return dtm_points(p2, q, params).values[0];
                    },
                    pc.coords[j * 2 + c], h);
                double analytic = g.grad[j * 2 + c];
                if (std::abs(fd) < 1e-9 && std::abs(analytic) < 1e-9) continue;
                CHECK(testutil::rel_err(analytic, fd) <= 1e-5);
            }
        }
    }
    REQUIRE(checked >= 15);
}

TEST_CASE("dtm_points_grad structure: zero off the cut set, r=2 reduction", "[dtm]") {
    pllay::Rng rng(33);
    PointCloud pc = testutil::random_cloud(rng, 10, 2, 0.0, 1.0, /*unit_weights=*/false);
    DtmParams params{0.317, 2.0};  // away from cumulative-mass boundaries
    std::vector<double> q{0.5, 0.5};
    DtmGradient g = dtm_points_grad(pc, q, params);
    REQUIRE_FALSE(g.nondifferentiable);
    DtmField f = dtm_points(pc, q, params);
    const auto& members = f.provenance[0].neighbors;
    double total = 0.0;
    for (double w : pc.weights) total += w;
    for (std::size_t j = 0; j < pc.size(); ++j) {
        bool in_cut = std::find(members.begin(), members.end(), j) != members.end();
        if (!in_cut) {
            CHECK(g.grad[j * 2] == 0.0);
            CHECK(g.grad[j * 2 + 1] == 0.0);
        } else if (j != members.back()) {
            // r = 2: coefficient reduces to w_j (x_j - q) / (value * m0 * total)
            double coef = pc.weights[j] / (g.value * params.m0 * total);
            CHECK_THAT(g.grad[j * 2],
                       Catch::Matchers::WithinRel(coef * (pc.point(j)[0] - q[0]), 1e-12));
        }
    }
}

TEST_CASE("dtm_weights_grad matches finite differences", "[dtm]") {
    pllay::Rng rng(37);
    const double h = 1e-6;
    int checked = 0;
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t n = 12;
        std::vector<double> Y, X;
        for (std::size_t i = 0; i < n; ++i) {
            Y.push_back(rng.uniform01());
            Y.push_back(rng.uniform01());
            X.push_back(rng.uniform(0.5, 2.0));
        }
        DtmParams params{rng.uniform(0.15, 0.45), 2.0};
        std::vector<double> q{rng.uniform01(), rng.uniform01()};
        DtmGradient g = dtm_weights_grad(Y, 2, X, q, params);
        if (g.nondifferentiable) continue;
        ++checked;
        for (std::size_t j = 0; j < n; ++j) {
            double fd = testutil::central_diff(
                [&](double w) {
                    std::vector<double> X2 = X;
                    X2[j] = w;
                    return dtm_weights(Y, 2, X2, q, params).values[0];
                },
                X[j], h);
            if (std::abs(fd) < 1e-9 && std::abs(g.grad[j]) < 1e-9) continue;
            CHECK(testutil::rel_err(g.grad[j], fd) <= 1e-5);
        }
    }
    REQUIRE(checked >= 15);
}

TEST_CASE("dtm_weights_grad scale invariance: sum X_j dgrad_j = 0", "[dtm]") {
    pllay::Rng rng(41);
    for (int trial = 0; trial < 10; ++trial) {
        std::size_t n = 15;
        std::vector<double> Y, X;
        for (std::size_t i = 0; i < n; ++i) {
            Y.push_back(rng.uniform01());
            Y.push_back(rng.uniform01());
            X.push_back(rng.uniform(0.5, 2.0));
        }
        DtmParams params{rng.uniform(0.15, 0.45), 2.0};
        std::vector<double> q{rng.uniform01(), rng.uniform01()};
        DtmGradient g = dtm_weights_grad(Y, 2, X, q, params);
        if (g.nondifferentiable) continue;
        double dir = 0.0;
        for (std::size_t j = 0; j < n; ++j) dir += X[j] * g.grad[j];
        CHECK_THAT(dir, Catch::Matchers::WithinAbs(0.0, 1e-10));

        // scaling the weights leaves the value untouched
        std::vector<double> X2 = X;
        for (double& w : X2) w *= 3.7;
        CHECK_THAT(dtm_weights(Y, 2, X2, q, params).values[0],
                   Catch::Matchers::WithinRel(g.value, 1e-12));
    }
}

TEST_CASE("dtm_weights_grad background term off the cut set", "[dtm]") {
    // Outside N_k the exact derivative of the leftover-mass forward is
    // (dist_k^r - value^r) / (r value^{r-1} sumX); verified against FD.
    std::vector<double> Y{0.0, 0.3, 1.0, 2.0};
    std::vector<double> X{1.0, 1.0, 1.0, 1.0};
    DtmParams params{0.4, 2.0};
    std::vector<double> q{0.05};
    DtmGradient g = dtm_weights_grad(Y, 1, X, q, params);
    REQUIRE_FALSE(g.nondifferentiable);
    DtmField f = dtm_weights(Y, 1, X, q, params);
    double dk = f.provenance[0].dist_k;
    double expected = (dk * dk - g.value * g.value) / (2.0 * g.value * 4.0);
    CHECK_THAT(g.grad[3], Catch::Matchers::WithinRel(expected, 1e-12));
    double fd = testutil::central_diff(
        [&](double w) {
            std::vector<double> X2 = X;
            X2[3] = w;
            return dtm_weights(Y, 1, X2, q, params).values[0];
        },
        X[3], 1e-6);
    CHECK(testutil::rel_err(g.grad[3], fd) <= 1e-6);
}

TEST_CASE("m0 at the edge of 1 stays finite and matches the full average", "[dtm]") {
    // mass accumulates in distance order, the total in index order; this
    // pins the ulp-level mismatch path where the target can pass the last
    // neighbor.
    pllay::Rng rng(47);
    PointCloud pc;
    pc.dim = 2;
    for (int i = 0; i < 40; ++i) {
        pc.coords.push_back(rng.uniform01());
        pc.coords.push_back(rng.uniform01());
        pc.weights.push_back(std::pow(10.0, rng.uniform(-6.0, 0.0)));
    }
    DtmParams params{std::nextafter(1.0, 0.0), 2.0};
    std::vector<double> q{0.5, 0.5};
    DtmField f = dtm_points(pc, q, params);
    double total = 0.0, avg = 0.0;
    for (std::size_t i = 0; i < pc.size(); ++i) {
        total += pc.weights[i];
        avg += pc.weights[i] * dist2(pc.point(i), q);
    }
    avg /= total;
    REQUIRE(std::isfinite(f.values[0]));
    CHECK_THAT(f.values[0], Catch::Matchers::WithinRel(std::sqrt(avg), 1e-9));
}

TEST_CASE("non-generic configurations are flagged with zero gradient", "[dtm]") {
    // query equidistant from both points: tie at the cut
    PointCloud pc = cloud1d({0.0, 1.0});
    DtmParams params{0.4, 2.0};
    std::vector<double> q{0.5};
    DtmGradient g = dtm_points_grad(pc, q, params);
    CHECK(g.nondifferentiable);
    for (double v : g.grad) CHECK(v == 0.0);

    // query on a data point carrying enough mass: value 0
    std::vector<double> q0{0.0};
    DtmParams small{0.3, 2.0};
    DtmGradient g0 = dtm_points_grad(pc, q0, small);
    CHECK(g0.nondifferentiable);
}
