#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "pllay/complex.hpp"
#include "pllay/datasets.hpp"
#include "pllay/persistence.hpp"
#include "testutil.hpp"

using namespace pllay;

TEST_CASE("orbit recurrence hand iteration", "[datasets]") {
    OrbitSpec spec{3.5, 2, 0};
    PointCloud pc = orbit(spec, 0.2, 0.3);
    REQUIRE(pc.size() == 2);
    CHECK(pc.point(0)[0] == 0.2);
    CHECK(pc.point(0)[1] == 0.3);
    CHECK_THAT(pc.point(1)[0], Catch::Matchers::WithinAbs(0.935, 1e-12));
    CHECK_THAT(pc.point(1)[1], Catch::Matchers::WithinAbs(0.5127125, 1e-12));
}

TEST_CASE("orbit fixed point and determinism", "[datasets]") {
    OrbitSpec spec{4.3, 50, 9};
    PointCloud z = orbit(spec, 0.0, 0.0);
    for (std::size_t i = 0; i < z.size(); ++i) {
        CHECK(z.point(i)[0] == 0.0);
        CHECK(z.point(i)[1] == 0.0);
    }
    PointCloud a = orbit(spec, 0.37, 0.81);
    PointCloud b = orbit(spec, 0.37, 0.81);
    CHECK(a.coords == b.coords);
}

TEST_CASE("orbit points stay inside the unit square", "[datasets]") {
    for (double r : orbit_r_values()) {
        OrbitSpec spec{r, 500, 0};
        PointCloud pc = orbit(spec, 0.123, 0.456);
        for (double c : pc.coords) {
            CHECK(c >= 0.0);
            CHECK(c < 1.0);
        }
    }
}

TEST_CASE("orbit dataset is balanced with distinct initial points", "[datasets]") {
    LabeledClouds data = gen_orbit_dataset(3, 10, 77);
    REQUIRE(data.clouds.size() == 15);
    REQUIRE(data.labels.size() == 15);
    std::vector<int> counts(5, 0);
    for (int l : data.labels) counts[static_cast<std::size_t>(l)]++;
    for (int c : counts) CHECK(c == 3);

    std::set<std::pair<double, double>> initials;
    for (const auto& pc : data.clouds) initials.insert({pc.point(0)[0], pc.point(0)[1]});
    CHECK(initials.size() == 15);

    // same seed reproduces the dataset exactly
    LabeledClouds again = gen_orbit_dataset(3, 10, 77);
    for (std::size_t i = 0; i < 15; ++i) CHECK(again.clouds[i].coords == data.clouds[i].coords);
}

TEST_CASE("corrupt edge cases", "[datasets]") {
    pllay::Rng rng(83);
    GridFunction g = testutil::random_grid(rng, 6, 6, 0.2, 1.0);
    GridFunction same = corrupt(g, 0.0, 1);
    CHECK(same.values == g.values);
    GridFunction zero = corrupt(g, 1.0, 1);
    for (double v : zero.values) CHECK(v == 0.0);

    PointCloud pc = testutil::random_cloud(rng, 40, 2);
    CHECK(corrupt(pc, 0.0, 3).size() == 40);
    CHECK(corrupt(pc, 1.0, 3).size() == 0);
}

TEST_CASE("corruption counts behave binomially", "[datasets]") {
    // Binomial(784, 0.05): mean 39.2, sd 6.10; 99.9% two-sided interval is
    // mean +- 3.29 sd. With 100 deterministic seeds we allow a single
    // excursion.
    GridFunction g;
    g.width = g.height = 28;
    g.domain = Box2{-1, -1, 1, 1};
    g.values.assign(784, 1.0);
    const double mean = 784 * 0.05;
    const double sd = std::sqrt(784 * 0.05 * 0.95);
    int outside = 0;
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        GridFunction c = corrupt(g, 0.05, seed);
        int zeroed = 0;
        for (double v : c.values)
            if (v == 0.0) ++zeroed;
        total += zeroed;
        if (std::abs(zeroed - mean) > 3.29 * sd) ++outside;
    }
    CHECK(outside <= 1);
    CHECK_THAT(total / 100.0, Catch::Matchers::WithinAbs(mean, 3.0));
}

TEST_CASE("noise edge cases and counts", "[datasets]") {
    pllay::Rng rng(89);
    GridFunction g = testutil::random_grid(rng, 6, 6, 0.2, 1.0);
    GridFunction same = add_noise(g, 0.0, 4);
    CHECK(same.values == g.values);

    double mx = *std::max_element(g.values.begin(), g.values.end());
    GridFunction noisy = add_noise(g, 0.5, 4);
    for (std::size_t i = 0; i < g.values.size(); ++i) {
        CHECK(noisy.values[i] >= g.values[i]);
        CHECK(noisy.values[i] <= mx);
    }

    PointCloud pc = testutil::random_cloud(rng, 100, 2);
    CHECK(add_noise(pc, 0.1, 5).size() == 110);
    CHECK(add_noise(pc, 0.0, 5).size() == 100);
}

TEST_CASE("digit-8 mask properties", "[datasets]") {
    GridFunction g = synth_digit8(28, 28);
    for (double v : g.values) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    // left-right mirror symmetry by construction
    for (std::size_t y = 0; y < g.height; ++y)
        for (std::size_t x = 0; x < g.width; ++x)
            CHECK(g.values[y * g.width + x] == g.values[y * g.width + (g.width - 1 - x)]);
}

TEST_CASE("noisy digit-8 keeps its dominant loop", "[datasets]") {
    GridFunction g = synth_digit8(28, 28);
    DtmParams params{0.05, 2.0};
    auto dominant_pers = [&](const GridFunction& grid) {
        DtmFiltration filt = dtm_filtration_weights(grid, params);
        auto h1 = compute_persistence(filt.complex).slice(1, false);
        double best = 0.0;
        for (const auto& p : h1) best = std::max(best, p.persistence());
        return best;
    };
    double clean = dominant_pers(g);
    REQUIRE(clean > 0.0);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        GridFunction noisy = add_noise(corrupt(g, 0.05, seed), 0.05, seed + 1000);
        CHECK(dominant_pers(noisy) > 0.5 * clean);
    }
}
