#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "pllay/data.hpp"
#include "pllay/kdtree.hpp"
#include "pllay/persistence.hpp"

namespace pllay {

namespace detail {

constexpr double kInf = std::numeric_limits<double>::infinity();

inline double linf(const PersistencePair& p, const PersistencePair& q) {
    return std::max(std::abs(p.birth - q.birth), std::abs(p.death - q.death));
}

// L-inf distance from a point to the diagonal (its orthogonal projection).
inline double to_diag(const PersistencePair& p) { return 0.5 * (p.death - p.birth); }

// Minimum-cost perfect matching on a square cost matrix (Jonker-Volgenant
// style with potentials, O(n^3)). Returns col -> row assignment.
inline double hungarian(const std::vector<std::vector<double>>& cost, std::vector<int>& col_row) {
    const int n = static_cast<int>(cost.size());
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), kInf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            int i0 = p[j0], j1 = -1;
            double delta = kInf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    col_row.assign(n, -1);
    double total = 0.0;
    for (int j = 1; j <= n; ++j) {
        col_row[j - 1] = p[j] - 1;
        total += cost[p[j] - 1][j - 1];
    }
    return total;
}

// Kuhn's augmenting-path maximum matching on an adjacency list.
class BipartiteMatcher {
public:
    BipartiteMatcher(int n_left, int n_right) : adj_(n_left), match_right_(n_right, -1) {}

    void add_edge(int l, int r) { adj_[l].push_back(r); }

    int max_matching() {
        int matched = 0;
        for (int l = 0; l < static_cast<int>(adj_.size()); ++l) {
            std::vector<char> seen(match_right_.size(), 0);
            if (try_augment(l, seen)) ++matched;
        }
        return matched;
    }

    const std::vector<int>& right_match() const { return match_right_; }

private:
    bool try_augment(int l, std::vector<char>& seen) {
        for (int r : adj_[l]) {
            if (seen[r]) continue;
            seen[r] = 1;
            if (match_right_[r] < 0 || try_augment(match_right_[r], seen)) {
                match_right_[r] = l;
                return true;
            }
        }
        return false;
    }

    std::vector<std::vector<int>> adj_;
    std::vector<int> match_right_;
};

// Split a diagram into finite pairs and essential births; essential classes
// can only be matched to essential classes of the other diagram.
inline void split_essential(const std::vector<PersistencePair>& d,
                            std::vector<PersistencePair>& finite, std::vector<double>& inf_births) {
    for (const auto& p : d) {
        if (p.essential()) inf_births.push_back(p.birth);
        else finite.push_back(p);
    }
    std::sort(inf_births.begin(), inf_births.end());
}

}  // namespace detail

// Matching over the diagonal-augmented diagrams; index -1 denotes the
// diagonal. Diagonal-diagonal pairs are omitted.
struct Matching {
    std::vector<std::array<std::int64_t, 2>> pairs;
    double cost = 0.0;
};

// Exact bottleneck distance: binary search over the O(n^2) candidate radii
// (inter-point distances and diagonal gaps) with a bipartite feasibility
// check at each. Essential classes must pair with essential classes (sorted
// by birth), otherwise the distance is +inf.
inline std::pair<double, Matching> bottleneck(const std::vector<PersistencePair>& d1,
                                              const std::vector<PersistencePair>& d2) {
    std::vector<PersistencePair> a, b;
    std::vector<double> inf_a, inf_b;
    detail::split_essential(d1, a, inf_a);
    detail::split_essential(d2, b, inf_b);
    Matching m;
    if (inf_a.size() != inf_b.size()) return {detail::kInf, m};
    double inf_cost = 0.0;
    for (std::size_t i = 0; i < inf_a.size(); ++i)
        inf_cost = std::max(inf_cost, std::abs(inf_a[i] - inf_b[i]));

    const int n1 = static_cast<int>(a.size()), n2 = static_cast<int>(b.size());
    if (n1 == 0 && n2 == 0) {
        m.cost = inf_cost;
        return {inf_cost, m};
    }

    std::vector<double> cand{0.0, inf_cost};
    for (int i = 0; i < n1; ++i) {
        cand.push_back(detail::to_diag(a[i]));
        for (int j = 0; j < n2; ++j) cand.push_back(detail::linf(a[i], b[j]));
    }
    for (int j = 0; j < n2; ++j) cand.push_back(detail::to_diag(b[j]));
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

    // Left: reals of a then n2 diagonal slots; right: reals of b then n1
    // diagonal slots. Diagonal slots absorb anything of the opposite side
    // at its own diagonal gap; diag-diag edges are free.
    const int L = n1 + n2, R = n2 + n1;
    auto feasible = [&](double r, detail::BipartiteMatcher* keep) {
        detail::BipartiteMatcher match(L, R);
        for (int i = 0; i < n1; ++i) {
            for (int j = 0; j < n2; ++j)
                if (detail::linf(a[i], b[j]) <= r) match.add_edge(i, j);
            if (detail::to_diag(a[i]) <= r)
                for (int s = 0; s < n1; ++s) match.add_edge(i, n2 + s);
        }
        for (int s = 0; s < n2; ++s) {
            for (int j = 0; j < n2; ++j)
                if (detail::to_diag(b[j]) <= r) match.add_edge(n1 + s, j);
            for (int t = 0; t < n1; ++t) match.add_edge(n1 + s, n2 + t);
        }
        bool ok = match.max_matching() == L;
        if (ok && keep) *keep = std::move(match);
        return ok;
    };

    // The largest candidate (everything to the diagonal) is always feasible.
    std::size_t lo = 0, hi = cand.size() - 1;
    while (lo < hi) {
        std::size_t mid = (lo + hi) / 2;
        if (feasible(cand[mid], nullptr)) hi = mid;
        else lo = mid + 1;
    }
    double r = std::max(cand[lo], inf_cost);

    detail::BipartiteMatcher final_match(L, R);
    feasible(cand[lo], &final_match);
    const auto& right = final_match.right_match();
    for (int j = 0; j < R; ++j) {
        int l = right[j];
        if (l < 0) continue;
        bool left_real = l < n1, right_real = j < n2;
        if (!left_real && !right_real) continue;
        m.pairs.push_back({left_real ? l : std::int64_t{-1}, right_real ? j : std::int64_t{-1}});
    }
    m.cost = r;
    return {r, m};
}

// Exact q-Wasserstein distance via minimum-cost perfect matching on the
// diagonal-augmented bipartite graph; edge costs are L-inf to the q-th
// power, diagonal-diagonal edges cost 0.
inline double wasserstein(const std::vector<PersistencePair>& d1,
                          const std::vector<PersistencePair>& d2, double q) {
    if (!(q >= 1.0)) throw std::invalid_argument("wasserstein: q must be >= 1");
    std::vector<PersistencePair> a, b;
    std::vector<double> inf_a, inf_b;
    detail::split_essential(d1, a, inf_a);
    detail::split_essential(d2, b, inf_b);
    if (inf_a.size() != inf_b.size()) return detail::kInf;
    double total = 0.0;
    for (std::size_t i = 0; i < inf_a.size(); ++i)
        total += std::pow(std::abs(inf_a[i] - inf_b[i]), q);

    const int n1 = static_cast<int>(a.size()), n2 = static_cast<int>(b.size());
    const int n = n1 + n2;
    if (n > 0) {
        std::vector<std::vector<double>> cost(n, std::vector<double>(n, 0.0));
        for (int i = 0; i < n1; ++i) {
            for (int j = 0; j < n2; ++j) cost[i][j] = std::pow(detail::linf(a[i], b[j]), q);
            double dg = std::pow(detail::to_diag(a[i]), q);
            for (int j = n2; j < n; ++j) cost[i][j] = dg;
        }
        for (int i = n1; i < n; ++i)
            for (int j = 0; j < n2; ++j) cost[i][j] = std::pow(detail::to_diag(b[j]), q);
        std::vector<int> assign;
        total += detail::hungarian(cost, assign);
    }
    return std::pow(total, 1.0 / q);
}

// Hausdorff distance between point clouds (Euclidean ground metric).
inline double hausdorff(const PointCloud& a, const PointCloud& b) {
    a.validate();
    b.validate();
    if (a.dim != b.dim) throw std::invalid_argument("hausdorff: dimension mismatch");
    auto directed = [](const PointCloud& from, const PointCloud& to) {
        double worst = 0.0;
        for (std::size_t i = 0; i < from.size(); ++i) {
            double best = detail::kInf;
            for (std::size_t j = 0; j < to.size(); ++j)
                best = std::min(best, dist2(from.point(i), to.point(j)));
            worst = std::max(worst, best);
        }
        return std::sqrt(worst);
    };
    return std::max(directed(a, b), directed(b, a));
}

// Exact W2 between the uniform empirical measures of two equal-size clouds:
// optimal assignment with squared Euclidean costs, averaged and rooted.
inline double w2_empirical(const PointCloud& a, const PointCloud& b) {
    a.validate();
    b.validate();
    if (a.dim != b.dim) throw std::invalid_argument("w2_empirical: dimension mismatch");
    if (a.size() != b.size()) throw std::invalid_argument("w2_empirical: size mismatch");
    const int n = static_cast<int>(a.size());
    std::vector<std::vector<double>> cost(n, std::vector<double>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) cost[i][j] = dist2(a.point(i), b.point(j));
    std::vector<int> assign;
    double total = detail::hungarian(cost, assign);
    return std::sqrt(total / double(n));
}

}  // namespace pllay
