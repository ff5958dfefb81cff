#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "pllay/layer.hpp"
#include "pllay/parallel.hpp"
#include "pllay/rng.hpp"

namespace pllay {

enum class Optimizer { Sgd, Adam };

struct MlpSpec {
    std::vector<std::size_t> widths;  // [in, hidden..., out]
    Optimizer optimizer = Optimizer::Adam;
    double lr = 1e-3;
    std::size_t batch_size = 16;
    std::size_t epochs = 100;
    std::uint64_t seed = 0;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    void validate() const {
        if (widths.size() < 2) throw std::invalid_argument("MlpSpec: need at least [in, out]");
        for (std::size_t w : widths)
            if (w < 1) throw std::invalid_argument("MlpSpec: widths must be >= 1");
        if (!(lr > 0.0)) throw std::invalid_argument("MlpSpec: lr must be positive");
        if (batch_size < 1) throw std::invalid_argument("MlpSpec: batch_size must be >= 1");
    }
};

// Plain feedforward net: ReLU hidden layers, linear output, softmax
// cross-entropy loss. Glorot-uniform weights, zero biases.
struct Mlp {
    std::vector<std::size_t> widths;
    std::vector<std::vector<double>> W;  // layer l: widths[l+1] x widths[l], row-major
    std::vector<std::vector<double>> b;

    static Mlp init(const std::vector<std::size_t>& widths, std::uint64_t seed) {
        Mlp net;
        net.widths = widths;
        for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
            std::size_t fan_in = widths[l], fan_out = widths[l + 1];
            double limit = std::sqrt(6.0 / double(fan_in + fan_out));
            Rng rng(derive_seed(seed, 0xA110C + l));
            std::vector<double> w(fan_in * fan_out);
            for (auto& x : w) x = rng.uniform(-limit, limit);
            net.W.push_back(std::move(w));
            net.b.emplace_back(fan_out, 0.0);
        }
        return net;
    }

    std::size_t n_layers() const { return W.size(); }
    std::size_t n_in() const { return widths.front(); }
    std::size_t n_out() const { return widths.back(); }

    // Logits for one sample; optionally keeps post-activation values per
    // layer for backpropagation (activations[0] == input).
    std::vector<double> logits(std::span<const double> x,
                               std::vector<std::vector<double>>* activations = nullptr) const {
        std::vector<double> a(x.begin(), x.end());
        if (activations) {
            activations->clear();
            activations->push_back(a);
        }
        for (std::size_t l = 0; l < n_layers(); ++l) {
            std::size_t in = widths[l], out = widths[l + 1];
            std::vector<double> z(out);
            for (std::size_t o = 0; o < out; ++o) {
                double s = b[l][o];
                const double* row = W[l].data() + o * in;
                for (std::size_t i = 0; i < in; ++i) s += row[i] * a[i];
                z[o] = s;
            }
            if (l + 1 < n_layers())
                for (double& v : z) v = std::max(0.0, v);
            a = std::move(z);
            if (activations) activations->push_back(a);
        }
        return a;
    }

    int predict(std::span<const double> x) const {
        std::vector<double> z = logits(x);
        int best = 0;
        for (std::size_t c = 1; c < z.size(); ++c)
            if (z[c] > z[best]) best = static_cast<int>(c);
        return best;
    }
};

struct MlpGrads {
    std::vector<std::vector<double>> dW, db;

    explicit MlpGrads(const Mlp& net) {
        for (std::size_t l = 0; l < net.n_layers(); ++l) {
            dW.emplace_back(net.W[l].size(), 0.0);
            db.emplace_back(net.b[l].size(), 0.0);
        }
    }
};

namespace detail {

inline std::vector<double> softmax_probs(std::span<const double> z) {
    double mx = z[0];
    for (double v : z) mx = std::max(mx, v);
    double sum = 0.0;
    std::vector<double> p(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        p[i] = std::exp(z[i] - mx);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

}  // namespace detail

// Cross-entropy loss of one sample plus gradient accumulation (scaled by
// `scale`); returns the loss and, if `d_input` is non-null, the gradient
// w.r.t. the input vector (needed when features are trainable).
inline double mlp_backprop(const Mlp& net, std::span<const double> x, int label, double scale,
                           MlpGrads& grads, std::vector<double>* d_input = nullptr) {
    std::vector<std::vector<double>> acts;
    std::vector<double> z = net.logits(x, &acts);
    std::vector<double> probs = detail::softmax_probs(z);
    double loss = -std::log(std::max(probs[static_cast<std::size_t>(label)], 1e-300));

    std::vector<double> delta = probs;  // dLoss/dlogits
    delta[static_cast<std::size_t>(label)] -= 1.0;
    for (std::size_t l = net.n_layers(); l-- > 0;) {
        std::size_t in = net.widths[l], out = net.widths[l + 1];
        const auto& a_prev = acts[l];
        for (std::size_t o = 0; o < out; ++o) {
            double d = delta[o] * scale;
            grads.db[l][o] += d;
            double* row = grads.dW[l].data() + o * in;
            for (std::size_t i = 0; i < in; ++i) row[i] += d * a_prev[i];
        }
        if (l == 0 && !d_input) break;
        std::vector<double> prev(in, 0.0);
        for (std::size_t o = 0; o < out; ++o) {
            const double* row = net.W[l].data() + o * in;
            for (std::size_t i = 0; i < in; ++i) prev[i] += row[i] * delta[o];
        }
        if (l > 0) {
            // ReLU mask of the previous layer's activations.
            for (std::size_t i = 0; i < in; ++i)
                if (acts[l][i] <= 0.0) prev[i] = 0.0;
            delta = std::move(prev);
        } else {
            *d_input = std::move(prev);
        }
    }
    return loss;
}

// Adam / SGD update for one parameter tensor.
class OptState {
public:
    void step(std::vector<double>& param, std::span<const double> grad, const MlpSpec& spec,
              std::size_t t) {
        if (spec.optimizer == Optimizer::Sgd) {
            for (std::size_t i = 0; i < param.size(); ++i) param[i] -= spec.lr * grad[i];
            return;
        }
        if (m_.size() != param.size()) {
            m_.assign(param.size(), 0.0);
            v_.assign(param.size(), 0.0);
        }
        double bc1 = 1.0 - std::pow(spec.beta1, double(t));
        double bc2 = 1.0 - std::pow(spec.beta2, double(t));
        for (std::size_t i = 0; i < param.size(); ++i) {
            m_[i] = spec.beta1 * m_[i] + (1.0 - spec.beta1) * grad[i];
            v_[i] = spec.beta2 * v_[i] + (1.0 - spec.beta2) * grad[i] * grad[i];
            param[i] -= spec.lr * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + spec.eps);
        }
    }

private:
    std::vector<double> m_, v_;
};

struct EpochLog {
    std::size_t epoch = 0;
    double loss = 0.0;
    double train_acc = 0.0;
    double test_acc = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
    Mlp model;
    std::vector<EpochLog> log;
    double train_acc = 0.0;
    double test_acc = std::numeric_limits<double>::quiet_NaN();
};

inline double accuracy(const Mlp& net, const std::vector<double>& X, std::size_t dim,
                       const std::vector<int>& y) {
    if (y.empty()) return 0.0;
    std::size_t hit = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (net.predict({X.data() + i * dim, dim}) == y[i]) ++hit;
    return double(hit) / double(y.size());
}

// Supervised training on a fixed feature matrix (rows flat in X).
inline TrainResult train(const MlpSpec& spec, const std::vector<double>& X,
                         const std::vector<int>& y, const std::vector<double>* X_test = nullptr,
                         const std::vector<int>* y_test = nullptr) {
    spec.validate();
    const std::size_t dim = spec.widths.front();
    const std::size_t n = y.size();
    if (X.size() != n * dim) throw std::invalid_argument("train: feature/label size mismatch");
    int n_classes = 0;
    for (int c : y) {
        if (c < 0) throw std::invalid_argument("train: negative label");
        n_classes = std::max(n_classes, c + 1);
    }
    if (n_classes < 2) throw std::invalid_argument("train: need at least 2 classes");
    if (static_cast<std::size_t>(n_classes) > spec.widths.back())
        throw std::invalid_argument("train: output width smaller than class count");

    TrainResult res;
    res.model = Mlp::init(spec.widths, spec.seed);
    std::vector<OptState> w_state(res.model.n_layers()), b_state(res.model.n_layers());
    std::size_t t = 0;

    for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(spec.seed, 0x5115FF + epoch));
        std::vector<std::size_t> order = shuffle_rng.permutation(n);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += spec.batch_size) {
            std::size_t stop = std::min(n, start + spec.batch_size);
            MlpGrads grads(res.model);
            double batch_loss = 0.0;
            double scale = 1.0 / double(stop - start);
            for (std::size_t idx = start; idx < stop; ++idx) {
                std::size_t i = order[idx];
                batch_loss += scale * mlp_backprop(res.model, {X.data() + i * dim, dim}, y[i],
                                                   scale, grads);
            }
            if (!std::isfinite(batch_loss))
                throw std::runtime_error("train: NaN loss at epoch " + std::to_string(epoch));
            ++t;
            for (std::size_t l = 0; l < res.model.n_layers(); ++l) {
                w_state[l].step(res.model.W[l], grads.dW[l], spec, t);
                b_state[l].step(res.model.b[l], grads.db[l], spec, t);
            }
            epoch_loss += batch_loss * double(stop - start);
        }
        EpochLog el;
        el.epoch = epoch + 1;
        el.loss = epoch_loss / double(n);
        el.train_acc = accuracy(res.model, X, dim, y);
        if (X_test && y_test) el.test_acc = accuracy(res.model, *X_test, dim, *y_test);
        res.log.push_back(el);
    }
    res.train_acc = accuracy(res.model, X, dim, y);
    if (X_test && y_test) res.test_acc = accuracy(res.model, *X_test, dim, *y_test);
    return res;
}

enum class PllayTrainMode { FrozenPrecompute, EndToEnd };

struct PllayTrainResult {
    Mlp model;
    PLLayLayer layer;  // final parameters (trained in end-to-end mode)
    std::vector<EpochLog> log;
    double train_acc = 0.0;
    double test_acc = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

template <typename InputT>
std::vector<LandscapeMatrix> precompute_landscapes(const PLLayLayer& layer,
                                                   const std::vector<InputT>& inputs,
                                                   unsigned threads) {
    std::vector<LandscapeMatrix> lms(inputs.size());
    parallel_for(
        inputs.size(), [&](std::size_t i) { lms[i] = layer_landscape(layer, inputs[i]); },
        threads);
    return lms;
}

inline std::vector<double> features_from(const PLLayLayer& layer,
                                         const std::vector<LandscapeMatrix>& lms) {
    std::vector<double> X(lms.size() * layer.n_h());
    for (std::size_t i = 0; i < lms.size(); ++i)
        for (std::size_t e = 0; e < layer.n_h(); ++e)
            X[i * layer.n_h() + e] = element_value(layer.elements[e], lms[i]);
    return X;
}

}  // namespace detail

// Classifier on top of PLLay features. The diagram/landscape stage does not
// depend on the element parameters, so it is computed once per sample and
// cached; end-to-end mode then trains theta and the omega-logits jointly
// with the MLP through that cache (the layer sits at the input, so input
// gradients are not consumed by anything).
template <typename InputT>
PllayTrainResult train_with_pllay(const PLLayLayer& layer_in, const MlpSpec& spec,
                                  const std::vector<InputT>& inputs, const std::vector<int>& labels,
                                  PllayTrainMode mode,
                                  const std::vector<InputT>* test_inputs = nullptr,
                                  const std::vector<int>* test_labels = nullptr,
                                  unsigned threads = 0, bool train_layer_params = true) {
    spec.validate();
    PllayTrainResult res;
    res.layer = layer_in;
    res.layer.validate();
    const std::size_t n_h = res.layer.n_h();
    if (spec.widths.front() != n_h)
        throw std::invalid_argument("train_with_pllay: widths[0] must equal n_h");
    if (inputs.size() != labels.size())
        throw std::invalid_argument("train_with_pllay: input/label size mismatch");

    std::vector<LandscapeMatrix> lms = detail::precompute_landscapes(res.layer, inputs, threads);
    std::vector<LandscapeMatrix> lms_test;
    if (test_inputs) lms_test = detail::precompute_landscapes(res.layer, *test_inputs, threads);

    if (mode == PllayTrainMode::FrozenPrecompute) {
        std::vector<double> X = detail::features_from(res.layer, lms);
        std::vector<double> X_test;
        if (test_inputs) X_test = detail::features_from(res.layer, lms_test);
        TrainResult tr = train(spec, X, labels, test_inputs ? &X_test : nullptr, test_labels);
        res.model = std::move(tr.model);
        res.log = std::move(tr.log);
        res.train_acc = tr.train_acc;
        res.test_acc = tr.test_acc;
        return res;
    }

    // End-to-end: MLP parameters and per-element (sigma, mu, logits) all
    // step together under the configured optimizer.
    const std::size_t n = labels.size();
    int n_classes = 0;
    for (int c : labels) n_classes = std::max(n_classes, c + 1);
    if (n_classes < 2) throw std::invalid_argument("train_with_pllay: need at least 2 classes");

    res.model = Mlp::init(spec.widths, spec.seed);
    std::vector<OptState> w_state(res.model.n_layers()), b_state(res.model.n_layers());
    std::vector<OptState> sig_state(n_h), mu_state(n_h), logit_state(n_h);
    std::size_t t = 0;

    std::vector<double> feat(n_h);
    for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(spec.seed, 0x5115FF + epoch));
        std::vector<std::size_t> order = shuffle_rng.permutation(n);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += spec.batch_size) {
            std::size_t stop = std::min(n, start + spec.batch_size);
            double scale = 1.0 / double(stop - start);
            MlpGrads grads(res.model);
            std::vector<std::vector<double>> d_sigma(n_h), d_mu(n_h), d_logits(n_h);
            for (std::size_t e = 0; e < n_h; ++e) {
                d_sigma[e].assign(res.layer.elements[e].g.sigma.size(), 0.0);
                d_mu[e].assign(res.layer.elements[e].g.mu.size(), 0.0);
                d_logits[e].assign(res.layer.elements[e].logits.size(), 0.0);
            }
            double batch_loss = 0.0;
            for (std::size_t idx = start; idx < stop; ++idx) {
                std::size_t i = order[idx];
                std::vector<ElementGrad> egs(n_h);
                for (std::size_t e = 0; e < n_h; ++e) {
                    egs[e] = element_forward_backward(res.layer.elements[e], lms[i]);
                    feat[e] = egs[e].value;
                }
                std::vector<double> d_feat;
                batch_loss +=
                    scale * mlp_backprop(res.model, feat, labels[i], scale, grads, &d_feat);
                for (std::size_t e = 0; e < n_h; ++e) {
                    double up = scale * d_feat[e];
                    for (std::size_t j = 0; j < d_sigma[e].size(); ++j)
                        d_sigma[e][j] += up * egs[e].d_sigma[j];
                    for (std::size_t j = 0; j < d_mu[e].size(); ++j)
                        d_mu[e][j] += up * egs[e].d_mu[j];
                    for (std::size_t j = 0; j < d_logits[e].size(); ++j)
                        d_logits[e][j] += up * egs[e].d_logits[j];
                }
            }
            if (!std::isfinite(batch_loss))
                throw std::runtime_error("train_with_pllay: NaN loss at epoch " +
                                         std::to_string(epoch));
            ++t;
            for (std::size_t l = 0; l < res.model.n_layers(); ++l) {
                w_state[l].step(res.model.W[l], grads.dW[l], spec, t);
                b_state[l].step(res.model.b[l], grads.db[l], spec, t);
            }
            if (train_layer_params) {
                for (std::size_t e = 0; e < n_h; ++e) {
                    auto& el = res.layer.elements[e];
                    sig_state[e].step(el.g.sigma, d_sigma[e], spec, t);
                    mu_state[e].step(el.g.mu, d_mu[e], spec, t);
                    logit_state[e].step(el.logits, d_logits[e], spec, t);
                }
            }
            epoch_loss += batch_loss * double(stop - start);
        }
        std::vector<double> X = detail::features_from(res.layer, lms);
        EpochLog el;
        el.epoch = epoch + 1;
        el.loss = epoch_loss / double(n);
        el.train_acc = accuracy(res.model, X, n_h, labels);
        if (test_inputs) {
            std::vector<double> X_test = detail::features_from(res.layer, lms_test);
            el.test_acc = accuracy(res.model, X_test, n_h, *test_labels);
        }
        res.log.push_back(el);
    }
    std::vector<double> X = detail::features_from(res.layer, lms);
    res.train_acc = accuracy(res.model, X, n_h, labels);
    if (test_inputs) {
        std::vector<double> X_test = detail::features_from(res.layer, lms_test);
        res.test_acc = accuracy(res.model, X_test, n_h, *test_labels);
    }
    return res;
}

}  // namespace pllay
