#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "pllay/complex.hpp"

namespace pllay {

constexpr double kInfDeath = std::numeric_limits<double>::infinity();

struct PersistencePair {
    double birth = 0.0;
    double death = kInfDeath;
    int dim = 0;

    bool essential() const { return death == kInfDeath; }
    double persistence() const { return death - birth; }
};

constexpr std::int64_t kNoCell = -1;

// Diagram plus (optionally) the simplex pairing: pairing[i] = (birth cell
// id, death cell id or kNoCell) aligned index-wise with pairs. The pairing
// is what routes diagram gradients back to filtration values.
struct PersistenceDiagram {
    std::vector<PersistencePair> pairs;
    std::vector<std::array<std::int64_t, 2>> pairing;

    bool has_pairing() const { return pairing.size() == pairs.size() && !pairs.empty(); }

    std::vector<PersistencePair> slice(int dim, bool include_essential = true) const {
        std::vector<PersistencePair> out;
        for (const auto& p : pairs)
            if (p.dim == dim && (include_essential || !p.essential())) out.push_back(p);
        return out;
    }
};

namespace detail {

// Symmetric difference of two ascending position lists (GF(2) column add).
inline void xor_column(std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
    std::vector<std::uint32_t> out;
    out.reserve(a.size() + b.size());
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) out.push_back(a[i++]);
        else if (a[i] > b[j]) out.push_back(b[j++]);
        else { ++i; ++j; }
    }
    out.insert(out.end(), a.begin() + i, a.end());
    out.insert(out.end(), b.begin() + j, b.end());
    a = std::move(out);
}

}  // namespace detail

// Standard left-to-right column reduction over GF(2). Zero-persistence pairs
// are discarded; essential classes get death = +inf. Only H0 and H1 are
// reported (planar inputs throughout).
inline PersistenceDiagram compute_persistence(const FilteredComplex& k, bool keep_pairing = true) {
    if (!is_valid_filtration(k))
        throw std::invalid_argument("compute_persistence: input is not a valid filtration");

    const std::size_t n = k.order.size();
    std::vector<std::size_t> pos(k.cells.size());
    for (std::size_t i = 0; i < n; ++i) pos[k.order[i]] = i;

    std::vector<std::vector<std::uint32_t>> cols(n);
    std::vector<std::int64_t> low_owner(n, -1);  // low position -> reduced column position
    std::vector<std::int64_t> killed_by(n, -1);  // birth position -> death position

    for (std::size_t j = 0; j < n; ++j) {
        const Cell& c = k.cells[k.order[j]];
        auto& col = cols[j];
        col.reserve(c.boundary.size());
        for (std::uint32_t b : c.boundary) col.push_back(static_cast<std::uint32_t>(pos[b]));
        std::sort(col.begin(), col.end());
        while (!col.empty()) {
            std::uint32_t low = col.back();
            if (low_owner[low] < 0) {
                low_owner[low] = static_cast<std::int64_t>(j);
                killed_by[low] = static_cast<std::int64_t>(j);
                break;
            }
            detail::xor_column(col, cols[static_cast<std::size_t>(low_owner[low])]);
        }
    }

    PersistenceDiagram d;
    for (std::size_t i = 0; i < n; ++i) {
        const Cell& birth_cell = k.cells[k.order[i]];
        if (!cols[i].empty()) continue;  // not a creator
        if (birth_cell.dim > 1) continue;
        if (killed_by[i] >= 0) {
            const Cell& death_cell = k.cells[k.order[static_cast<std::size_t>(killed_by[i])]];
            if (death_cell.value == birth_cell.value) continue;  // zero persistence
            d.pairs.push_back({birth_cell.value, death_cell.value, birth_cell.dim});
            if (keep_pairing)
                d.pairing.push_back({static_cast<std::int64_t>(birth_cell.id),
                                     static_cast<std::int64_t>(death_cell.id)});
        } else {
            d.pairs.push_back({birth_cell.value, kInfDeath, birth_cell.dim});
            if (keep_pairing)
                d.pairing.push_back({static_cast<std::int64_t>(birth_cell.id), kNoCell});
        }
    }
    return d;
}

namespace detail {

// Dense GF(2) columns over a fixed row universe, bit-packed.
class Gf2Columns {
public:
    explicit Gf2Columns(std::size_t rows) : rows_(rows), words_((rows + 63) / 64) {}

    void add_column(const std::vector<std::uint32_t>& row_indices) {
        std::vector<std::uint64_t> col(words_, 0);
        for (std::uint32_t r : row_indices) col[r / 64] ^= (1ULL << (r % 64));
        cols_.push_back(std::move(col));
    }

    // In-place elimination; returns the rank.
    std::size_t rank() {
        std::vector<std::int64_t> pivot_of_row(rows_, -1);
        std::size_t r = 0;
        for (auto& col : cols_) {
            for (;;) {
                std::int64_t hi = highest_bit(col);
                if (hi < 0) break;
                std::int64_t owner = pivot_of_row[static_cast<std::size_t>(hi)];
                if (owner < 0) {
                    pivot_of_row[static_cast<std::size_t>(hi)] =
                        static_cast<std::int64_t>(&col - cols_.data());
                    ++r;
                    break;
                }
                const auto& other = cols_[static_cast<std::size_t>(owner)];
                for (std::size_t w = 0; w < words_; ++w) col[w] ^= other[w];
            }
        }
        return r;
    }

private:
    static std::int64_t highest_bit(const std::vector<std::uint64_t>& col) {
        for (std::size_t w = col.size(); w-- > 0;)
            if (col[w]) return static_cast<std::int64_t>(w * 64 + (63 - std::countl_zero(col[w])));
        return -1;
    }

    std::size_t rows_, words_;
    std::vector<std::vector<std::uint64_t>> cols_;
};

// Kernel basis of a GF(2) matrix given as sparse columns; returns one row
// universe vector per kernel element, expressed in the column index space.
inline std::vector<std::vector<std::uint32_t>> gf2_kernel(
    std::size_t rows, const std::vector<std::vector<std::uint32_t>>& sparse_cols) {
    const std::size_t nc = sparse_cols.size();
    std::vector<std::vector<std::uint32_t>> work = sparse_cols;  // ascending row lists
    std::vector<std::vector<std::uint32_t>> combo(nc);
    for (std::size_t j = 0; j < nc; ++j) combo[j] = {static_cast<std::uint32_t>(j)};
    std::vector<std::int64_t> owner(rows, -1);
    std::vector<std::vector<std::uint32_t>> kernel;
    for (std::size_t j = 0; j < nc; ++j) {
        while (!work[j].empty()) {
            std::uint32_t low = work[j].back();
            if (owner[low] < 0) {
                owner[low] = static_cast<std::int64_t>(j);
                break;
            }
            xor_column(work[j], work[static_cast<std::size_t>(owner[low])]);
            xor_column(combo[j], combo[static_cast<std::size_t>(owner[low])]);
        }
        if (work[j].empty()) kernel.push_back(combo[j]);
    }
    return kernel;
}

}  // namespace detail

// Brute-force persistent Betti number: the rank of the map
// H_dim(K_a) -> H_dim(K_b) computed by direct GF(2) linear algebra on the
// sublevel complexes, via rank(Z + B) - rank(B). Test oracle; it shares no
// code path with the reduction above beyond the complex itself.
inline std::size_t persistent_betti(const FilteredComplex& k, double a, double b, int dim) {
    if (a > b) throw std::invalid_argument("persistent_betti: requires a <= b");

    // Index the dim-cells of the full complex as the common row/column space.
    std::vector<std::int64_t> dim_index(k.cells.size(), -1);
    std::size_t n_dim = 0;
    for (const Cell& c : k.cells)
        if (c.dim == dim) dim_index[c.id] = static_cast<std::int64_t>(n_dim++);

    // Z_dim(K_a): kernel of the boundary of dim-cells present at level a.
    std::vector<std::vector<std::uint32_t>> bd_cols;
    std::vector<std::uint32_t> col_cell;  // dim-cell index per kernel column
    for (const Cell& c : k.cells) {
        if (c.dim != dim || c.value > a) continue;
        std::vector<std::uint32_t> col(c.boundary.begin(), c.boundary.end());
        std::sort(col.begin(), col.end());
        bd_cols.push_back(std::move(col));
        col_cell.push_back(static_cast<std::uint32_t>(dim_index[c.id]));
    }
    auto kernel = detail::gf2_kernel(k.cells.size(), bd_cols);

    // B_dim(K_b): boundaries of (dim+1)-cells present at level b.
    std::vector<std::vector<std::uint32_t>> image_cols;
    for (const Cell& c : k.cells) {
        if (c.dim != dim + 1 || c.value > b) continue;
        std::vector<std::uint32_t> col;
        for (std::uint32_t f : c.boundary)
            col.push_back(static_cast<std::uint32_t>(dim_index[f]));
        std::sort(col.begin(), col.end());
        image_cols.push_back(std::move(col));
    }

    detail::Gf2Columns image_only(n_dim);
    for (const auto& col : image_cols) image_only.add_column(col);
    std::size_t rank_b = image_only.rank();

    detail::Gf2Columns joint(n_dim);
    for (const auto& col : image_cols) joint.add_column(col);
    for (const auto& combo : kernel) {
        std::vector<std::uint32_t> rows;
        for (std::uint32_t j : combo) rows.push_back(col_cell[j]);
        std::sort(rows.begin(), rows.end());
        joint.add_column(rows);
    }
    return joint.rank() - rank_b;
}

// Diagram-side count matching persistent_betti: classes with b_i <= a that
// still map nontrivially at level b (death is exclusive).
inline std::size_t diagram_rank(const PersistenceDiagram& d, double a, double b, int dim) {
    std::size_t c = 0;
    for (const auto& p : d.pairs)
        if (p.dim == dim && p.birth <= a && p.death > b) ++c;
    return c;
}

}  // namespace pllay
