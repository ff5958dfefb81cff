#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pllay/data.hpp"
#include "pllay/rng.hpp"

namespace pllay {

// Canonical dynamical-system parameters; the class label of an orbit is the
// index of its r in this list.
inline const std::vector<double>& orbit_r_values() {
    static const std::vector<double> r{2.5, 3.5, 4.0, 4.1, 4.3};
    return r;
}

struct OrbitSpec {
    double r = 3.5;
    std::size_t n_points = 300;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_points < 1) throw std::invalid_argument("OrbitSpec: n_points must be >= 1");
    }
};

// Orbit of the discrete dynamical system
//   x_{n+1} = x_n + r y_n (1 - y_n)      mod 1
//   y_{n+1} = y_n + r x_{n+1} (1 - x_{n+1}) mod 1
// (the y-update uses the already-advanced x). The initial point is part of
// the cloud.
inline PointCloud orbit(const OrbitSpec& spec, double x1, double y1) {
    spec.validate();
    if (x1 < 0.0 || x1 > 1.0 || y1 < 0.0 || y1 > 1.0)
        throw std::invalid_argument("orbit: initial point must lie in [0,1]^2");
    PointCloud pc;
    pc.dim = 2;
    pc.coords.reserve(spec.n_points * 2);
    pc.weights.assign(spec.n_points, 1.0);
    double x = x1, y = y1;
    for (std::size_t n = 0; n < spec.n_points; ++n) {
        pc.coords.push_back(x);
        pc.coords.push_back(y);
        x = std::fmod(x + spec.r * y * (1.0 - y), 1.0);
        y = std::fmod(y + spec.r * x * (1.0 - x), 1.0);
    }
    return pc;
}

struct LabeledClouds {
    std::vector<PointCloud> clouds;
    std::vector<int> labels;
};

// per_class orbits for each canonical r, random initial points drawn from
// the item-derived stream so generation order does not matter.
inline LabeledClouds gen_orbit_dataset(std::size_t per_class, std::size_t n_points,
                                       std::uint64_t seed) {
    LabeledClouds out;
    const auto& rs = orbit_r_values();
    for (std::size_t c = 0; c < rs.size(); ++c) {
        for (std::size_t i = 0; i < per_class; ++i) {
            Rng rng(derive_seed(seed, c * per_class + i));
            OrbitSpec spec{rs[c], n_points, seed};
            out.clouds.push_back(orbit(spec, rng.uniform01(), rng.uniform01()));
            out.labels.push_back(static_cast<int>(c));
        }
    }
    return out;
}

// Corruption: pixels are independently zeroed, points independently dropped.
inline GridFunction corrupt(const GridFunction& g, double prob, std::uint64_t seed) {
    if (prob < 0.0 || prob > 1.0) throw std::invalid_argument("corrupt: prob must be in [0,1]");
    GridFunction out = g;
    Rng rng(derive_seed(seed, 0xC0FFEE));
    for (double& v : out.values)
        if (rng.bernoulli(prob)) v = 0.0;
    return out;
}

inline PointCloud corrupt(const PointCloud& pc, double prob, std::uint64_t seed) {
    if (prob < 0.0 || prob > 1.0) throw std::invalid_argument("corrupt: prob must be in [0,1]");
    PointCloud out;
    out.dim = pc.dim;
    Rng rng(derive_seed(seed, 0xC0FFEE));
    for (std::size_t i = 0; i < pc.size(); ++i)
        if (!rng.bernoulli(prob)) out.push_back(pc.point(i), pc.weights[i]);
    return out;
}

// Noise: pixels get uniform(0, max value) added with probability prob
// (clamped to the max); clouds get ceil(prob*n) uniform points over the
// bounding box appended.
inline GridFunction add_noise(const GridFunction& g, double prob, std::uint64_t seed) {
    if (prob < 0.0 || prob > 1.0) throw std::invalid_argument("add_noise: prob must be in [0,1]");
    GridFunction out = g;
    double mx = *std::max_element(g.values.begin(), g.values.end());
    Rng rng(derive_seed(seed, 0x9015E));
    for (double& v : out.values)
        if (rng.bernoulli(prob)) v = std::min(mx, v + rng.uniform(0.0, mx));
    return out;
}

inline PointCloud add_noise(const PointCloud& pc, double prob, std::uint64_t seed) {
    if (prob < 0.0 || prob > 1.0) throw std::invalid_argument("add_noise: prob must be in [0,1]");
    PointCloud out = pc;
    if (pc.size() == 0) return out;
    std::vector<double> lo(pc.dim), hi(pc.dim);
    for (std::size_t c = 0; c < pc.dim; ++c) lo[c] = hi[c] = pc.coords[c];
    for (std::size_t i = 1; i < pc.size(); ++i)
        for (std::size_t c = 0; c < pc.dim; ++c) {
            lo[c] = std::min(lo[c], pc.point(i)[c]);
            hi[c] = std::max(hi[c], pc.point(i)[c]);
        }
    auto n_new = static_cast<std::size_t>(std::ceil(prob * double(pc.size())));
    Rng rng(derive_seed(seed, 0x9015E));
    std::vector<double> p(pc.dim);
    for (std::size_t i = 0; i < n_new; ++i) {
        for (std::size_t c = 0; c < pc.dim; ++c) p[c] = rng.uniform(lo[c], hi[c]);
        out.push_back(p, 1.0);
    }
    return out;
}

// Figure-eight test mask: two tangent annuli rasterized as weights in
// [0, 1], with a soft edge so the loops survive mild corruption.
inline GridFunction synth_digit8(std::size_t width, std::size_t height) {
    if (width < 8 || height < 8)
        throw std::invalid_argument("synth_digit8: grid too small for two annuli");
    GridFunction g;
    g.width = width;
    g.height = height;
    g.domain = Box2{-1.0, -1.0, 1.0, 1.0};
    g.values.assign(width * height, 0.0);
    // Ring centers and radii in the unit-square coordinate of the mask. The
    // horizontal offset is computed about the center directly so the mask is
    // mirror-symmetric to the last bit.
    const double cy1 = 0.30, cy2 = 0.70;
    const double radius = 0.185, thickness = 0.075;
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            double du = (double(x) + 0.5 - 0.5 * double(width)) / double(width);
            double v = (double(y) + 0.5) / double(height);
            double d1 = std::abs(std::hypot(du, v - cy1) - radius);
            double d2 = std::abs(std::hypot(du, v - cy2) - radius);
            double d = std::min(d1, d2);
            double val = d >= thickness ? 0.0 : 1.0 - (d / thickness) * (d / thickness);
            g.values[y * width + x] = val;
        }
    }
    return g;
}

}  // namespace pllay
