#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pllay {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Axis-aligned box in R^2.
struct Box2 {
    double xmin = -1.0, ymin = -1.0, xmax = 1.0, ymax = 1.0;
};

// Scalar function sampled on a regular width x height grid, values row-major
// (x fastest). Row-major is the single vertex ordering used everywhere
// downstream; values[i] belongs to grid vertex i.
struct GridFunction {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> values;
    Box2 domain;

    std::size_t size() const { return width * height; }

    void validate() const {
        if (width < 2 || height < 2)
            throw std::invalid_argument("GridFunction: width and height must be >= 2");
        if (values.size() != width * height)
            throw std::invalid_argument("GridFunction: values size != width*height");
        for (double v : values)
            if (!std::isfinite(v)) throw std::invalid_argument("GridFunction: non-finite value");
        if (!(domain.xmax > domain.xmin) || !(domain.ymax > domain.ymin))
            throw std::invalid_argument("GridFunction: degenerate domain box");
    }
};

// Weighted points in R^d, flat row-major storage.
struct PointCloud {
    std::size_t dim = 0;
    std::vector<double> coords;   // n * dim
    std::vector<double> weights;  // n, all > 0 for valid clouds

    std::size_t size() const { return dim == 0 ? 0 : coords.size() / dim; }

    std::span<const double> point(std::size_t i) const {
        return {coords.data() + i * dim, dim};
    }

    void push_back(std::span<const double> p, double w = 1.0) {
        coords.insert(coords.end(), p.begin(), p.end());
        weights.push_back(w);
    }

    void validate() const {
        if (dim < 1) throw std::invalid_argument("PointCloud: dimension must be >= 1");
        if (size() == 0) throw std::invalid_argument("PointCloud: at least one point required");
        if (weights.size() != size())
            throw std::invalid_argument("PointCloud: weights size mismatch");
        for (double v : coords)
            if (!std::isfinite(v)) throw std::invalid_argument("PointCloud: non-finite coordinate");
        for (double w : weights)
            if (!(w > 0.0)) throw std::invalid_argument("PointCloud: weights must be positive");
    }
};

// Grid vertex positions, equally spaced over the domain box, in the same
// row-major order as GridFunction::values. Returned flat, two doubles each.
inline std::vector<double> grid_vertices(std::size_t width, std::size_t height, const Box2& box) {
    std::vector<double> pts;
    pts.reserve(width * height * 2);
    const double dx = width > 1 ? (box.xmax - box.xmin) / double(width - 1) : 0.0;
    const double dy = height > 1 ? (box.ymax - box.ymin) / double(height - 1) : 0.0;
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x) {
            pts.push_back(box.xmin + dx * double(x));
            pts.push_back(box.ymin + dy * double(y));
        }
    return pts;
}

inline std::vector<double> grid_vertices(const GridFunction& g) {
    return grid_vertices(g.width, g.height, g.domain);
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& field, std::size_t line_no) {
    const std::string t = trim(field);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(t, &used);
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line_no) + ": not a number: '" + t + "'");
    }
    if (used != t.size())
        throw ParseError("line " + std::to_string(line_no) + ": trailing junk in '" + t + "'");
    return v;
}

inline bool looks_like_header(const std::vector<std::string>& fields) {
    for (const auto& f : fields) {
        const std::string t = trim(f);
        if (t.empty()) return false;
        try {
            std::size_t used = 0;
            (void)std::stod(t, &used);
            if (used == t.size()) return false;  // numeric field -> data row
        } catch (const std::exception&) {
            return true;
        }
    }
    return true;
}

}  // namespace detail

// CSV point cloud: one point per row. An optional header may declare a
// trailing `weight` column; without it all weights default to 1.
inline PointCloud load_point_cloud(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");

    PointCloud pc;
    bool has_weight_col = false;
    bool saw_header = false;
    std::size_t expect_fields = 0;
    std::string line;
    std::size_t line_no = 0;

    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (!saw_header && line_no == 1 && detail::looks_like_header(fields)) {
            saw_header = true;
            expect_fields = fields.size();
            has_weight_col = detail::trim(fields.back()) == "weight";
            continue;
        }
        if (expect_fields == 0) expect_fields = fields.size();
        if (fields.size() != expect_fields)
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(expect_fields) + " fields, got " +
                             std::to_string(fields.size()));
        std::size_t ncoord = has_weight_col ? fields.size() - 1 : fields.size();
        if (ncoord < 1) throw ParseError("line " + std::to_string(line_no) + ": no coordinates");
        if (pc.dim == 0) pc.dim = ncoord;
        for (std::size_t i = 0; i < ncoord; ++i)
            pc.coords.push_back(detail::parse_number(fields[i], line_no));
        double w = 1.0;
        if (has_weight_col) {
            w = detail::parse_number(fields.back(), line_no);
            if (!(w > 0.0))
                throw ParseError("line " + std::to_string(line_no) + ": nonpositive weight");
        }
        pc.weights.push_back(w);
    }
    pc.validate();
    return pc;
}

inline void save_point_cloud(const PointCloud& pc, const std::string& path,
                             bool with_weights = false) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    char buf[64];
    if (with_weights) {
        for (std::size_t i = 0; i < pc.dim; ++i) out << "c" << i << ",";
        out << "weight\n";
    }
    for (std::size_t i = 0; i < pc.size(); ++i) {
        auto p = pc.point(i);
        for (std::size_t j = 0; j < pc.dim; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", p[j]);
            out << (j ? "," : "") << buf;
        }
        if (with_weights) {
            std::snprintf(buf, sizeof buf, "%.17g", pc.weights[i]);
            out << "," << buf;
        }
        out << "\n";
    }
}

// CSV grid: height rows x width columns of reals. The domain box comes from
// the caller (flags) or a JSON sidecar handled in io.hpp; default [-1,1]^2.
inline GridFunction load_grid(const std::string& path, const Box2& domain = Box2{}) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    GridFunction g;
    g.domain = domain;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (g.width == 0) {
            g.width = fields.size();
        } else if (fields.size() != g.width) {
            throw ParseError("line " + std::to_string(line_no) + ": ragged row (expected " +
                             std::to_string(g.width) + " fields)");
        }
        for (const auto& f : fields) g.values.push_back(detail::parse_number(f, line_no));
        ++g.height;
    }
    if (g.height == 0) throw ParseError("'" + path + "' is empty");
    g.validate();
    return g;
}

inline void save_grid(const GridFunction& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    char buf[64];
    for (std::size_t y = 0; y < g.height; ++y) {
        for (std::size_t x = 0; x < g.width; ++x) {
            std::snprintf(buf, sizeof buf, "%.17g", g.values[y * g.width + x]);
            out << (x ? "," : "") << buf;
        }
        out << "\n";
    }
}

}  // namespace pllay
