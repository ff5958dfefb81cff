#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

namespace pllay {

struct Neighbor {
    double dist2;
    std::size_t index;
};

// Total order used for every neighbor ranking in this codebase: by squared
// distance, ties broken by original point index. Both the brute-force path
// and the k-d tree rank with this order and with the same dist2 formula, so
// their sorted results are bitwise identical.
inline bool neighbor_less(const Neighbor& a, const Neighbor& b) {
    if (a.dist2 != b.dist2) return a.dist2 < b.dist2;
    return a.index < b.index;
}

inline double dist2(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

// Exact k-d tree over a flat point array. Axis cycles with depth; median
// split by nth_element with (coordinate, index) tie-break.
class KdTree {
public:
    KdTree() = default;

    KdTree(std::span<const double> coords, std::size_t dim) : coords_(coords), dim_(dim) {
        std::size_t n = dim_ > 0 ? coords_.size() / dim_ : 0;
        order_.resize(n);
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        nodes_.reserve(n);
        root_ = build(0, n, 0);
    }

    std::size_t size() const { return order_.size(); }

    // The k nearest neighbors of q, sorted by (dist2, index). k is clamped
    // to the point count.
    std::vector<Neighbor> knn(std::span<const double> q, std::size_t k) const {
        k = std::min(k, size());
        std::vector<Neighbor> heap;  // max-heap under neighbor_less
        heap.reserve(k + 1);
        if (k > 0) search(root_, q, k, heap);
        std::sort(heap.begin(), heap.end(), neighbor_less);
        return heap;
    }

private:
    static constexpr int kNull = -1;

    struct Node {
        std::size_t point;
        int left = kNull;
        int right = kNull;
        std::size_t axis = 0;
    };

    std::span<const double> coords_;
    std::size_t dim_ = 0;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
    int root_ = kNull;

    double coord(std::size_t point, std::size_t axis) const {
        return coords_[point * dim_ + axis];
    }

    int build(std::size_t lo, std::size_t hi, std::size_t depth) {
        if (lo >= hi) return kNull;
        std::size_t axis = depth % dim_;
        std::size_t mid = lo + (hi - lo) / 2;
        std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                         [&](std::size_t a, std::size_t b) {
                             double ca = coord(a, axis), cb = coord(b, axis);
                             if (ca != cb) return ca < cb;
                             return a < b;
                         });
        int id = static_cast<int>(nodes_.size());
        nodes_.push_back(Node{order_[mid], kNull, kNull, axis});
        int l = build(lo, mid, depth + 1);
        int r = build(mid + 1, hi, depth + 1);
        nodes_[id].left = l;
        nodes_[id].right = r;
        return id;
    }

    void search(int id, std::span<const double> q, std::size_t k,
                std::vector<Neighbor>& heap) const {
        if (id == kNull) return;
        const Node& nd = nodes_[id];
        Neighbor cand{dist2({coords_.data() + nd.point * dim_, dim_}, q), nd.point};
        if (heap.size() < k) {
            heap.push_back(cand);
            std::push_heap(heap.begin(), heap.end(), neighbor_less);
        } else if (neighbor_less(cand, heap.front())) {
            std::pop_heap(heap.begin(), heap.end(), neighbor_less);
            heap.back() = cand;
            std::push_heap(heap.begin(), heap.end(), neighbor_less);
        }
        double delta = q[nd.axis] - coord(nd.point, nd.axis);
        int near = delta < 0 ? nd.left : nd.right;
        int far = delta < 0 ? nd.right : nd.left;
        search(near, q, k, heap);
        // The far side can still hold a point at exactly delta^2 that wins a
        // tie by index, so prune only on strict inequality.
        if (heap.size() < k || delta * delta <= heap.front().dist2) search(far, q, k, heap);
    }
};

// Brute-force counterpart; same order, same dist2 formula.
inline std::vector<Neighbor> brute_force_knn(std::span<const double> coords, std::size_t dim,
                                             std::span<const double> q, std::size_t k) {
    std::size_t n = dim > 0 ? coords.size() / dim : 0;
    std::vector<Neighbor> all(n);
    for (std::size_t i = 0; i < n; ++i)
        all[i] = Neighbor{dist2({coords.data() + i * dim, dim}, q), i};
    k = std::min(k, n);
    std::partial_sort(all.begin(), all.begin() + k, all.end(), neighbor_less);
    all.resize(k);
    return all;
}

}  // namespace pllay
