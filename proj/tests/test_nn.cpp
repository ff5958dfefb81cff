#include <catch2/catch_amalgamated.hpp>

#include "pllay/datasets.hpp"
#include "pllay/nn.hpp"
#include "testutil.hpp"

using namespace pllay;

namespace {

// Two well-separated 2-d blobs.
void make_blobs(pllay::Rng& rng, std::size_t n_per, std::vector<double>& X, std::vector<int>& y) {
    for (std::size_t i = 0; i < n_per; ++i) {
        X.push_back(rng.uniform(-1.0, 0.0) - 1.0);
        X.push_back(rng.uniform(-1.0, 0.0) - 1.0);
        y.push_back(0);
        X.push_back(rng.uniform(0.0, 1.0) + 1.0);
        X.push_back(rng.uniform(0.0, 1.0) + 1.0);
        y.push_back(1);
    }
}

}  // namespace

TEST_CASE("separable blobs reach high train accuracy quickly", "[nn]") {
    pllay::Rng rng(101);
    std::vector<double> X;
    std::vector<int> y;
    make_blobs(rng, 40, X, y);
    MlpSpec spec;
    spec.widths = {2, 8, 2};
    spec.epochs = 50;
    spec.batch_size = 8;
    spec.lr = 1e-2;
    spec.seed = 3;
    TrainResult res = train(spec, X, y);
    CHECK(res.train_acc >= 0.95);
}

TEST_CASE("zero epochs returns the initial model unchanged", "[nn]") {
    pllay::Rng rng(103);
    std::vector<double> X;
    std::vector<int> y;
    make_blobs(rng, 10, X, y);
    MlpSpec spec;
    spec.widths = {2, 4, 2};
    spec.epochs = 0;
    spec.seed = 11;
    TrainResult res = train(spec, X, y);
    Mlp fresh = Mlp::init(spec.widths, spec.seed);
    CHECK(res.model.W == fresh.W);
    CHECK(res.model.b == fresh.b);
    CHECK(res.log.empty());
}

TEST_CASE("permuted labels stay near chance", "[nn]") {
    pllay::Rng rng(107);
    const int n_classes = 4;
    std::vector<double> X;
    std::vector<int> y;
    for (int i = 0; i < 160; ++i) {
        X.push_back(rng.uniform(-1, 1));
        X.push_back(rng.uniform(-1, 1));
        y.push_back(static_cast<int>(rng.uniform_index(n_classes)));
    }
    double mean_acc = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        MlpSpec spec;
        spec.widths = {2, 8, n_classes};
        spec.epochs = 20;
        spec.seed = seed;
        mean_acc += train(spec, X, y).train_acc;
    }
    mean_acc /= 5.0;
    CHECK(std::abs(mean_acc - 1.0 / n_classes) <= 0.1 + 0.1);  // chance plus slack for memorizing
}

TEST_CASE("network gradients match finite differences", "[nn]") {
    pllay::Rng rng(109);
    Mlp net = Mlp::init({3, 4, 3}, 17);
    std::vector<double> X;
    std::vector<int> y{0, 2, 1};
    for (int i = 0; i < 9; ++i) X.push_back(rng.uniform(-1, 1));

    MlpGrads grads(net);
    double scale = 1.0 / 3.0;
    for (int s = 0; s < 3; ++s) mlp_backprop(net, {X.data() + s * 3, 3}, y[s], scale, grads);

    auto batch_loss = [&](const Mlp& m) {
        double total = 0.0;
        for (int s = 0; s < 3; ++s) {
            std::vector<double> z = m.logits({X.data() + s * 3, 3});
            double mx = *std::max_element(z.begin(), z.end());
            double sum = 0.0;
            for (double v : z) sum += std::exp(v - mx);
            total += -(z[static_cast<std::size_t>(y[s])] - mx - std::log(sum));
        }
        return total / 3.0;
    };
    const double h = 1e-6;
    double max_rel = 0.0;
    for (std::size_t l = 0; l < net.n_layers(); ++l) {
        for (std::size_t i = 0; i < net.W[l].size(); ++i) {
            Mlp p = net, mn = net;
            p.W[l][i] += h;
            mn.W[l][i] -= h;
            double fd = (batch_loss(p) - batch_loss(mn)) / (2 * h);
            if (std::abs(fd) < 1e-10 && std::abs(grads.dW[l][i]) < 1e-10) continue;
            max_rel = std::max(max_rel, testutil::rel_err(grads.dW[l][i], fd));
        }
        for (std::size_t i = 0; i < net.b[l].size(); ++i) {
            Mlp p = net, mn = net;
            p.b[l][i] += h;
            mn.b[l][i] -= h;
            double fd = (batch_loss(p) - batch_loss(mn)) / (2 * h);
            if (std::abs(fd) < 1e-10 && std::abs(grads.db[l][i]) < 1e-10) continue;
            max_rel = std::max(max_rel, testutil::rel_err(grads.db[l][i], fd));
        }
    }
    CHECK(max_rel <= 1e-4);
}

TEST_CASE("full-batch logistic regression has non-increasing loss under SGD", "[nn]") {
    pllay::Rng rng(113);
    std::vector<double> X;
    std::vector<int> y;
    make_blobs(rng, 30, X, y);
    MlpSpec spec;
    spec.widths = {2, 2};  // logistic special case
    spec.optimizer = Optimizer::Sgd;
    spec.lr = 0.05;
    spec.batch_size = 60;
    spec.epochs = 40;
    spec.seed = 5;
    TrainResult res = train(spec, X, y);
    for (std::size_t e = 1; e < res.log.size(); ++e)
        CHECK(res.log[e].loss <= res.log[e - 1].loss + 1e-12);
}

TEST_CASE("nan abort carries a diagnostic", "[nn]") {
    pllay::Rng rng(127);
    std::vector<double> X;
    std::vector<int> y;
    make_blobs(rng, 10, X, y);
    X[3] = std::numeric_limits<double>::infinity();  // poisoned feature
    MlpSpec spec;
    spec.widths = {2, 2};
    spec.optimizer = Optimizer::Sgd;
    spec.lr = 0.1;
    spec.epochs = 30;
    spec.batch_size = 4;
    CHECK_THROWS_WITH(train(spec, X, y), Catch::Matchers::ContainsSubstring("NaN"));
}

namespace {

PLLayLayer orbit_like_layer(std::uint64_t seed) {
    LandscapeParams lp{2, 0.02, 0.3, 9};
    FiltrationBinding binding;
    binding.kind = FiltrationBinding::Kind::DtmPoints;
    binding.dtm = DtmParams{0.05, 2.0};
    binding.grid = GridSpec{12, 12, Box2{0.0125, 0.0125, 0.9875, 0.9875}};
    return make_layer(6, GKind::Affine, lp, 1, binding, seed, 1.0);
}

}  // namespace

TEST_CASE("frozen precompute equals end-to-end with frozen layer params", "[nn]") {
    PLLayLayer layer = orbit_like_layer(21);
    LabeledClouds data = gen_orbit_dataset(6, 60, 33);
    MlpSpec spec;
    spec.widths = {6, 8, 5};
    spec.epochs = 3;
    spec.batch_size = 8;
    spec.seed = 7;

    PllayTrainResult frozen = train_with_pllay(layer, spec, data.clouds, data.labels,
                                               PllayTrainMode::FrozenPrecompute);
    PllayTrainResult e2e_frozen =
        train_with_pllay<PointCloud>(layer, spec, data.clouds, data.labels,
                                     PllayTrainMode::EndToEnd, nullptr, nullptr, 0,
                                     /*train_layer_params=*/false);
    REQUIRE(frozen.log.size() == e2e_frozen.log.size());
    for (std::size_t e = 0; e < frozen.log.size(); ++e) {
        CHECK(frozen.log[e].loss == e2e_frozen.log[e].loss);
        CHECK(frozen.log[e].train_acc == e2e_frozen.log[e].train_acc);
    }
    CHECK(frozen.model.W == e2e_frozen.model.W);
}

TEST_CASE("end-to-end training moves theta and the omega logits", "[nn]") {
    PLLayLayer layer = orbit_like_layer(22);
    LabeledClouds data = gen_orbit_dataset(4, 60, 44);
    MlpSpec spec;
    spec.widths = {6, 8, 5};
    spec.epochs = 1;
    spec.batch_size = 8;
    spec.seed = 9;
    PllayTrainResult res =
        train_with_pllay(layer, spec, data.clouds, data.labels, PllayTrainMode::EndToEnd);
    double dtheta = 0.0, dlogits = 0.0;
    for (std::size_t e = 0; e < layer.n_h(); ++e) {
        for (std::size_t i = 0; i < layer.elements[e].g.sigma.size(); ++i)
            dtheta += std::abs(res.layer.elements[e].g.sigma[i] - layer.elements[e].g.sigma[i]);
        for (std::size_t i = 0; i < layer.elements[e].logits.size(); ++i)
            dlogits += std::abs(res.layer.elements[e].logits[i] - layer.elements[e].logits[i]);
    }
    CHECK(dtheta > 0.0);
    CHECK(dlogits > 0.0);
}
