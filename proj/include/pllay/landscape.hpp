#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "pllay/persistence.hpp"

namespace pllay {

struct LandscapeParams {
    std::size_t k_max = 2;
    double t_min = 0.0;
    double t_max = 1.0;
    std::size_t samples = 17;  // m

    double resolution() const { return (t_max - t_min) / double(samples - 1); }
    double t_at(std::size_t l) const { return t_min + resolution() * double(l); }

    void validate() const {
        if (k_max < 1) throw std::invalid_argument("LandscapeParams: k_max must be >= 1");
        if (samples < 2) throw std::invalid_argument("LandscapeParams: samples must be >= 2");
        if (!(t_max > t_min)) throw std::invalid_argument("LandscapeParams: t_max must exceed t_min");
    }
};

enum class Branch : std::uint8_t { Zero, Ascending, Descending };

// For each (order k, sample l): which diagram pair realized the value and on
// which side of its tent. Zero entries (padding or outside the tent) carry
// pair = kNoPair.
struct LandscapeSlot {
    std::int32_t pair = -1;
    Branch branch = Branch::Zero;
};

constexpr std::int32_t kNoPair = -1;

// How to treat essential (death = +inf) classes before landscape
// computation: drop them (default) or cap the death at t_max.
enum class InfPolicy { Drop, Cap };

struct LandscapeMatrix {
    LandscapeParams params;
    std::vector<double> values;       // k_max * samples, row-major in k
    std::vector<LandscapeSlot> slots;  // same layout
    std::vector<std::uint32_t> source_pairs;  // diagram pair index per local pair

    double at(std::size_t k, std::size_t l) const { return values[k * params.samples + l]; }
    const LandscapeSlot& slot(std::size_t k, std::size_t l) const {
        return slots[k * params.samples + l];
    }
    // Smallest gap at any selection boundary; non-generic configurations
    // (exact ties between competing tents) show up as a tiny gap here.
    double min_selection_gap = std::numeric_limits<double>::infinity();
    // Smallest distance of any selected sample to a kink of its own tent
    // (the zero boundary or the ascending/descending switch).
    double min_branch_margin = std::numeric_limits<double>::infinity();
};

// Tent function of a diagram point.
inline double tent(double b, double d, double t) {
    return std::max(0.0, std::min(t - b, d - t));
}

// Persistence landscape sampled on the params grid: values[k][l] is the
// (k+1)-th largest tent value at t_l over the finite pairs of `dim`.
// Selection ties break deterministically by lower pair index so repeated
// forward passes pick the same branch.
inline LandscapeMatrix landscape(const PersistenceDiagram& d, const LandscapeParams& params,
                                 int dim, InfPolicy inf_policy = InfPolicy::Drop) {
    params.validate();
    LandscapeMatrix lm;
    lm.params = params;
    lm.values.assign(params.k_max * params.samples, 0.0);
    lm.slots.assign(params.k_max * params.samples, LandscapeSlot{});

    std::vector<std::pair<double, double>> tents;  // (b, d) per local pair
    for (std::size_t i = 0; i < d.pairs.size(); ++i) {
        const auto& p = d.pairs[i];
        if (p.dim != dim) continue;
        double death = p.death;
        if (p.essential()) {
            if (inf_policy == InfPolicy::Drop) continue;
            death = params.t_max;
            if (death <= p.birth) continue;
        }
        tents.emplace_back(p.birth, death);
        lm.source_pairs.push_back(static_cast<std::uint32_t>(i));
    }
    if (tents.empty()) return lm;

    struct Cand {
        double value;
        std::int32_t pair;
        Branch branch;
    };
    std::vector<Cand> cands(tents.size());
    for (std::size_t l = 0; l < params.samples; ++l) {
        const double t = params.t_at(l);
        for (std::size_t i = 0; i < tents.size(); ++i) {
            auto [b, dd] = tents[i];
            double up = t - b, down = dd - t;
            double v = std::max(0.0, std::min(up, down));
            Branch br = Branch::Zero;
            if (v > 0.0) br = up <= down ? Branch::Ascending : Branch::Descending;
            cands[i] = Cand{v, static_cast<std::int32_t>(i), br};
        }
        std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
            if (a.value != b.value) return a.value > b.value;
            return a.pair < b.pair;
        });
        const std::size_t kk = std::min(params.k_max, cands.size());
        for (std::size_t k = 0; k < kk; ++k) {
            if (cands[k].value <= 0.0) break;
            lm.values[k * params.samples + l] = cands[k].value;
            lm.slots[k * params.samples + l] = LandscapeSlot{cands[k].pair, cands[k].branch};
            if (k + 1 < cands.size()) {
                double gap = cands[k].value - cands[k + 1].value;
                lm.min_selection_gap = std::min(lm.min_selection_gap, gap);
            }
            auto [b, dd] = tents[static_cast<std::size_t>(cands[k].pair)];
            double up = t - b, down = dd - t;
            double margin = std::min({up, down, std::abs(up - down) * 0.5});
            lm.min_branch_margin = std::min(lm.min_branch_margin, margin);
        }
    }
    return lm;
}

// Weighted average of landscape orders: sum_k w_k * lambda_k(t_l). Weights
// must lie on the simplex (positive, summing to 1 within 1e-9).
inline std::vector<double> weighted_landscape(const LandscapeMatrix& lm,
                                              std::span<const double> omega) {
    if (omega.size() != lm.params.k_max)
        throw std::invalid_argument("weighted_landscape: omega size != k_max");
    double sum = 0.0;
    for (double w : omega) {
        if (!(w > 0.0)) throw std::invalid_argument("weighted_landscape: omega must be positive");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("weighted_landscape: omega must sum to 1");
    std::vector<double> out(lm.params.samples, 0.0);
    for (std::size_t k = 0; k < lm.params.k_max; ++k)
        for (std::size_t l = 0; l < lm.params.samples; ++l)
            out[l] += omega[k] * lm.at(k, l);
    return out;
}

// d(weighted landscape at sample l) / d(birth, death) of each contributing
// diagram pair: the tent slope is -1 on the ascending side (w.r.t. birth)
// and +1 on the descending side (w.r.t. death), scaled by omega_k.
struct LandscapeSampleGrad {
    // Parallel arrays indexed by diagram pair index.
    std::vector<std::uint32_t> pair_index;
    std::vector<double> d_birth;
    std::vector<double> d_death;
};

inline LandscapeSampleGrad landscape_grad(const LandscapeMatrix& lm, std::span<const double> omega,
                                          std::size_t l) {
    if (omega.size() != lm.params.k_max)
        throw std::invalid_argument("landscape_grad: omega size != k_max");
    if (l >= lm.params.samples) throw std::invalid_argument("landscape_grad: sample out of range");

    std::vector<double> db(lm.source_pairs.size(), 0.0), dd(lm.source_pairs.size(), 0.0);
    for (std::size_t k = 0; k < lm.params.k_max; ++k) {
        const LandscapeSlot& s = lm.slot(k, l);
        if (s.pair == kNoPair) continue;
        if (s.branch == Branch::Ascending) db[s.pair] -= omega[k];
        else if (s.branch == Branch::Descending) dd[s.pair] += omega[k];
    }
    LandscapeSampleGrad out;
    for (std::size_t i = 0; i < lm.source_pairs.size(); ++i) {
        if (db[i] == 0.0 && dd[i] == 0.0) continue;
        out.pair_index.push_back(lm.source_pairs[i]);
        out.d_birth.push_back(db[i]);
        out.d_death.push_back(dd[i]);
    }
    return out;
}

}  // namespace pllay
