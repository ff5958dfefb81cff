#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "pllay/data.hpp"
#include "pllay/dtm.hpp"

namespace pllay {

constexpr std::int64_t kNoVertex = -1;

// One cell of a filtered complex. `boundary` holds ids of the facets
// ((dim-1)-cells): 2 vertices per edge, 3 edges per triangle, 4 edges per
// square. For lower-star filtrations argmax_vertex is the vertex whose
// function value the cell inherits (smallest index on ties); complexes whose
// values do not come from a vertex function (Rips) leave it at kNoVertex.
struct Cell {
    std::uint32_t id = 0;
    std::uint8_t dim = 0;
    double value = 0.0;
    std::int64_t argmax_vertex = kNoVertex;
    std::vector<std::uint32_t> boundary;
    std::vector<std::uint32_t> vertex_set;  // sorted
};

struct FilteredComplex {
    std::vector<Cell> cells;        // indexed by id
    std::vector<std::uint32_t> order;  // filtration order: ids sorted by (value, dim, id)
    std::size_t vertex_count = 0;
    std::uint8_t max_dim = 0;

    void sort_filtration() {
        order.resize(cells.size());
        std::iota(order.begin(), order.end(), 0u);
        std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
            const Cell &ca = cells[a], &cb = cells[b];
            if (ca.value != cb.value) return ca.value < cb.value;
            if (ca.dim != cb.dim) return ca.dim < cb.dim;
            return ca.id < cb.id;
        });
    }
};

// Checks that every boundary cell precedes its coface in the filtration
// order and that cell values are monotone along the face relation.
inline bool is_valid_filtration(const FilteredComplex& k) {
    std::vector<std::size_t> pos(k.cells.size());
    for (std::size_t i = 0; i < k.order.size(); ++i) pos[k.order[i]] = i;
    for (const Cell& c : k.cells) {
        for (std::uint32_t b : c.boundary) {
            if (k.cells[b].value > c.value) return false;
            if (pos[b] >= pos[c.id]) return false;
        }
    }
    return true;
}

// Cubical complex of a width x height grid with the max-vertex (lower-star)
// extension: each edge/square takes the max of its vertices, argmax ties
// broken by smallest vertex index. Degenerate 1 x n / n x 1 grids yield path
// complexes (used by tests).
inline FilteredComplex cubical_sublevel(std::size_t width, std::size_t height,
                                        std::span<const double> values) {
    if (width < 1 || height < 1 || values.size() != width * height)
        throw std::invalid_argument("cubical_sublevel: bad grid shape");
    for (double v : values)
        if (!std::isfinite(v)) throw std::invalid_argument("cubical_sublevel: non-finite value");

    FilteredComplex k;
    k.vertex_count = width * height;
    const std::size_t n_hedges = (width - 1) * height;
    const std::size_t n_vedges = width * (height - 1);
    const std::size_t n_squares = (width - 1) * (height >= 1 ? height - 1 : 0);
    k.max_dim = n_squares > 0 ? 2 : (n_hedges + n_vedges > 0 ? 1 : 0);
    k.cells.reserve(k.vertex_count + n_hedges + n_vedges + n_squares);

    auto vid = [width](std::size_t x, std::size_t y) {
        return static_cast<std::uint32_t>(y * width + x);
    };
    for (std::size_t i = 0; i < k.vertex_count; ++i) {
        Cell c;
        c.id = static_cast<std::uint32_t>(i);
        c.dim = 0;
        c.value = values[i];
        c.argmax_vertex = static_cast<std::int64_t>(i);
        c.vertex_set = {static_cast<std::uint32_t>(i)};
        k.cells.push_back(std::move(c));
    }

    auto add_cell = [&](std::uint8_t dim, std::vector<std::uint32_t> boundary,
                        std::vector<std::uint32_t> verts) {
        Cell c;
        c.id = static_cast<std::uint32_t>(k.cells.size());
        c.dim = dim;
        c.boundary = std::move(boundary);
        std::sort(verts.begin(), verts.end());
        c.value = -std::numeric_limits<double>::infinity();
        for (std::uint32_t v : verts) {
            if (values[v] > c.value) {
                c.value = values[v];
                c.argmax_vertex = v;
            }
        }
        c.vertex_set = std::move(verts);
        k.cells.push_back(std::move(c));
        return c.id;
    };

    const std::uint32_t hedge_base = static_cast<std::uint32_t>(k.vertex_count);
    auto hedge_id = [&](std::size_t x, std::size_t y) {
        return hedge_base + static_cast<std::uint32_t>(y * (width - 1) + x);
    };
    const std::uint32_t vedge_base = hedge_base + static_cast<std::uint32_t>(n_hedges);
    auto vedge_id = [&](std::size_t x, std::size_t y) {
        return vedge_base + static_cast<std::uint32_t>(y * width + x);
    };

    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x + 1 < width; ++x)
            add_cell(1, {vid(x, y), vid(x + 1, y)}, {vid(x, y), vid(x + 1, y)});
    for (std::size_t y = 0; y + 1 < height; ++y)
        for (std::size_t x = 0; x < width; ++x)
            add_cell(1, {vid(x, y), vid(x, y + 1)}, {vid(x, y), vid(x, y + 1)});
    for (std::size_t y = 0; y + 1 < height; ++y)
        for (std::size_t x = 0; x + 1 < width; ++x)
            add_cell(2,
                     {hedge_id(x, y), hedge_id(x, y + 1), vedge_id(x, y), vedge_id(x + 1, y)},
                     {vid(x, y), vid(x + 1, y), vid(x, y + 1), vid(x + 1, y + 1)});

    k.sort_filtration();
    return k;
}

inline FilteredComplex cubical_sublevel(const GridFunction& g) {
    g.validate();
    return cubical_sublevel(g.width, g.height, g.values);
}

// Vietoris-Rips filtration up to dimension 2. Vertices enter at 0 and the
// edge (i, j) at d(x_i, x_j)/2, matching the open-ball convention
// d(x_i, x_j) < 2r; triangles take the max of their edges. Cells with value
// beyond max_radius are omitted.
inline FilteredComplex rips(const PointCloud& data, int max_dim, double max_radius) {
    data.validate();
    if (max_dim < 0 || max_dim > 2) throw std::invalid_argument("rips: max_dim must be 0..2");
    if (!(max_radius > 0.0)) throw std::invalid_argument("rips: max_radius must be positive");

    const std::size_t n = data.size();
    FilteredComplex k;
    k.vertex_count = n;
    k.max_dim = static_cast<std::uint8_t>(max_dim);
    for (std::size_t i = 0; i < n; ++i) {
        Cell c;
        c.id = static_cast<std::uint32_t>(i);
        c.dim = 0;
        c.value = 0.0;
        c.vertex_set = {static_cast<std::uint32_t>(i)};
        k.cells.push_back(std::move(c));
    }
    if (max_dim == 0) {
        k.sort_filtration();
        return k;
    }

    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> edge_ids;
    std::vector<std::vector<double>> half(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double v = 0.5 * std::sqrt(dist2(data.point(i), data.point(j)));
            half[i][j] = half[j][i] = v;
            if (v > max_radius) continue;
            Cell c;
            c.id = static_cast<std::uint32_t>(k.cells.size());
            c.dim = 1;
            c.value = v;
            c.boundary = {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)};
            c.vertex_set = c.boundary;
            edge_ids[{static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)}] = c.id;
            k.cells.push_back(std::move(c));
        }
    if (max_dim >= 2) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                if (half[i][j] > max_radius) continue;
                for (std::size_t l = j + 1; l < n; ++l) {
                    double v = std::max({half[i][j], half[i][l], half[j][l]});
                    if (v > max_radius) continue;
                    Cell c;
                    c.id = static_cast<std::uint32_t>(k.cells.size());
                    c.dim = 2;
                    c.value = v;
                    c.boundary = {edge_ids.at({std::uint32_t(i), std::uint32_t(j)}),
                                  edge_ids.at({std::uint32_t(i), std::uint32_t(l)}),
                                  edge_ids.at({std::uint32_t(j), std::uint32_t(l)})};
                    c.vertex_set = {std::uint32_t(i), std::uint32_t(j), std::uint32_t(l)};
                    k.cells.push_back(std::move(c));
                }
            }
    }
    k.sort_filtration();
    return k;
}

// Grid geometry used when a point cloud is rasterized through the DTM.
struct GridSpec {
    std::size_t width = 40;
    std::size_t height = 40;
    Box2 domain;
};

// DTM filtration result: the cubical complex built on the DTM field, with
// the field (and per-vertex cut provenance) retained for backpropagation.
struct DtmFiltration {
    FilteredComplex complex;
    DtmField field;
    GridSpec grid;
};

// Weights convention: the grid's own vertices are the fixed points Y and its
// values are the weights X; the DTM is evaluated back on the same vertices.
inline DtmFiltration dtm_filtration_weights(const GridFunction& g, const DtmParams& params,
                                            const DtmOptions& opts = {}) {
    g.validate();
    std::vector<double> pts = grid_vertices(g);
    DtmFiltration out;
    out.grid = GridSpec{g.width, g.height, g.domain};
    out.field = dtm_weights(pts, 2, g.values, pts, params, opts);
    out.complex = cubical_sublevel(g.width, g.height, out.field.values);
    return out;
}

// Points convention: the DTM of the cloud is sampled on a fixed evaluation
// grid (caller-specified, or the cloud's bounding box).
inline DtmFiltration dtm_filtration_points(const PointCloud& cloud, const GridSpec& grid,
                                           const DtmParams& params, const DtmOptions& opts = {}) {
    cloud.validate();
    if (cloud.dim != 2)
        throw std::invalid_argument("dtm_filtration_points: evaluation grid is 2-d");
    DtmFiltration out;
    out.grid = grid;
    std::vector<double> queries = grid_vertices(grid.width, grid.height, grid.domain);
    out.field = dtm_points(cloud, queries, params, opts);
    out.complex = cubical_sublevel(grid.width, grid.height, out.field.values);
    return out;
}

inline Box2 bounding_box(const PointCloud& cloud) {
    if (cloud.dim != 2) throw std::invalid_argument("bounding_box: 2-d clouds only");
    Box2 b{cloud.coords[0], cloud.coords[1], cloud.coords[0], cloud.coords[1]};
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        auto p = cloud.point(i);
        b.xmin = std::min(b.xmin, p[0]);
        b.xmax = std::max(b.xmax, p[0]);
        b.ymin = std::min(b.ymin, p[1]);
        b.ymax = std::max(b.ymax, p[1]);
    }
    return b;
}

// Debug dump, one line per cell: dim value vertex_set.
inline std::string dump_complex(const FilteredComplex& k) {
    std::string out;
    char buf[64];
    for (std::uint32_t id : k.order) {
        const Cell& c = k.cells[id];
        std::snprintf(buf, sizeof buf, "%d %.17g", int(c.dim), c.value);
        out += buf;
        for (std::uint32_t v : c.vertex_set) {
            std::snprintf(buf, sizeof buf, " %u", v);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

}  // namespace pllay
