#pragma once

// Gridded water-current velocity field: data model, CSV/JSON I/O, synthetic
// field generation, noise corruption, and point queries.
//
// Grid convention: row i increases northward, column j increases eastward.
// The center of cell (i, j) sits at (x0 + (j+0.5)*cell_size,
// y0 + (i+0.5)*cell_size) in meters.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "driftplan/random.hpp"

namespace driftplan {

struct GridPos {
    int i = 0;  // row
    int j = 0;  // col
    friend bool operator==(const GridPos& a, const GridPos& b) { return a.i == b.i && a.j == b.j; }
    friend bool operator!=(const GridPos& a, const GridPos& b) { return !(a == b); }
    friend bool operator<(const GridPos& a, const GridPos& b) {
        return a.i != b.i ? a.i < b.i : a.j < b.j;
    }
};

class VelocityField {
public:
    VelocityField() = default;
    VelocityField(int rows, int cols, double cell_size, double x0, double y0)
        : rows_(rows), cols_(cols), cell_size_(cell_size), x0_(x0), y0_(y0),
          u_(static_cast<std::size_t>(rows) * cols, 0.0),
          v_(static_cast<std::size_t>(rows) * cols, 0.0),
          mask_(static_cast<std::size_t>(rows) * cols, 1) {
        if (rows < 2 || cols < 2) throw std::invalid_argument("VelocityField: need at least 2x2 cells");
        if (!(cell_size > 0.0)) throw std::invalid_argument("VelocityField: cell_size must be positive");
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    double cell_size() const { return cell_size_; }
    double x0() const { return x0_; }
    double y0() const { return y0_; }

    std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * cols_ + j; }
    bool in_bounds(int i, int j) const { return i >= 0 && i < rows_ && j >= 0 && j < cols_; }
    bool in_bounds(GridPos p) const { return in_bounds(p.i, p.j); }

    double u(int i, int j) const { return u_[idx(i, j)]; }
    double v(int i, int j) const { return v_[idx(i, j)]; }
    bool water(int i, int j) const { return mask_[idx(i, j)] != 0; }
    bool water(GridPos p) const { return water(p.i, p.j); }
    Eigen::Vector2d velocity(int i, int j) const { return {u(i, j), v(i, j)}; }
    Eigen::Vector2d velocity(GridPos p) const { return velocity(p.i, p.j); }
    double speed(GridPos p) const { return velocity(p).norm(); }

    void set(int i, int j, double uu, double vv) {
        u_[idx(i, j)] = uu;
        v_[idx(i, j)] = vv;
    }
    void set_land(int i, int j) {
        mask_[idx(i, j)] = 0;
        u_[idx(i, j)] = 0.0;
        v_[idx(i, j)] = 0.0;
    }

    const std::vector<double>& u_data() const { return u_; }
    const std::vector<double>& v_data() const { return v_; }
    const std::vector<std::uint8_t>& mask_data() const { return mask_; }

    // Cell centers. Grid-unit variants place cell (i, j) at (j+0.5, i+0.5).
    double center_x(int j) const { return x0_ + (j + 0.5) * cell_size_; }
    double center_y(int i) const { return y0_ + (i + 0.5) * cell_size_; }
    Eigen::Vector2d center_grid(GridPos p) const { return {p.j + 0.5, p.i + 0.5}; }

    double x_min() const { return x0_; }
    double x_max() const { return x0_ + cols_ * cell_size_; }
    double y_min() const { return y0_; }
    double y_max() const { return y0_ + rows_ * cell_size_; }

    std::vector<GridPos> water_cells() const {
        std::vector<GridPos> out;
        out.reserve(u_.size());
        for (int i = 0; i < rows_; ++i)
            for (int j = 0; j < cols_; ++j)
                if (water(i, j)) out.push_back({i, j});
        return out;
    }

    double max_speed() const {
        double m = 0.0;
        for (std::size_t n = 0; n < u_.size(); ++n)
            m = std::max(m, std::hypot(u_[n], v_[n]));
        return m;
    }

    void validate() const {
        if (rows_ < 2 || cols_ < 2) throw std::invalid_argument("field must be at least 2x2");
        for (std::size_t n = 0; n < u_.size(); ++n) {
            if (!std::isfinite(u_[n]) || !std::isfinite(v_[n]))
                throw std::invalid_argument("field contains non-finite velocity");
            if (mask_[n] == 0 && (u_[n] != 0.0 || v_[n] != 0.0))
                throw std::invalid_argument("masked cell has nonzero velocity");
        }
    }

    friend bool operator==(const VelocityField& a, const VelocityField& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.cell_size_ == b.cell_size_ &&
               a.x0_ == b.x0_ && a.y0_ == b.y0_ && a.u_ == b.u_ && a.v_ == b.v_ &&
               a.mask_ == b.mask_;
    }

private:
    int rows_ = 0, cols_ = 0;
    double cell_size_ = 1.0, x0_ = 0.0, y0_ = 0.0;
    std::vector<double> u_, v_;
    std::vector<std::uint8_t> mask_;
};

// FNV-1a over the velocity payload; used to trace which field a stage consumed.
inline std::uint64_t field_digest(const VelocityField& f) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t k = 0; k < n; ++k) {
            h ^= p[k];
            h *= 1099511628211ULL;
        }
    };
    mix(f.u_data().data(), f.u_data().size() * sizeof(double));
    mix(f.v_data().data(), f.v_data().size() * sizeof(double));
    mix(f.mask_data().data(), f.mask_data().size());
    return h;
}

struct NoiseSpec {
    double eta = 1.0;        // corruption fraction in (0, 1]
    double sigma_pct = 0.0;  // noise std as percent of the field's per-component std
    std::uint64_t seed = 0;

    void validate() const {
        if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("NoiseSpec: eta must be in (0,1]");
        if (sigma_pct < 0.0) throw std::invalid_argument("NoiseSpec: sigma_pct must be >= 0");
    }
};

enum class FieldFormat { csv, json };

inline FieldFormat format_from_path(const std::string& path) {
    const auto dot = path.rfind('.');
    const std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
    if (ext == "csv") return FieldFormat::csv;
    return FieldFormat::json;
}

namespace detail {
inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}
}  // namespace detail

inline void save_field(const VelocityField& field, const std::string& path, FieldFormat format) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_field: cannot open " + path + " for writing");
    if (format == FieldFormat::csv) {
        out << "i,j,x,y,u,v,mask\n";
        for (int i = 0; i < field.rows(); ++i) {
            for (int j = 0; j < field.cols(); ++j) {
                out << i << ',' << j << ',' << detail::fmt17(field.center_x(j)) << ','
                    << detail::fmt17(field.center_y(i)) << ',' << detail::fmt17(field.u(i, j))
                    << ',' << detail::fmt17(field.v(i, j)) << ',' << (field.water(i, j) ? 1 : 0)
                    << '\n';
            }
        }
    } else {
        nlohmann::json j;
        j["rows"] = field.rows();
        j["cols"] = field.cols();
        j["cell_size"] = field.cell_size();
        j["origin"] = {field.x0(), field.y0()};
        auto grid = [&](auto get) {
            nlohmann::json rows = nlohmann::json::array();
            for (int i = 0; i < field.rows(); ++i) {
                nlohmann::json row = nlohmann::json::array();
                for (int jj = 0; jj < field.cols(); ++jj) row.push_back(get(i, jj));
                rows.push_back(std::move(row));
            }
            return rows;
        };
        j["u"] = grid([&](int i, int jj) { return field.u(i, jj); });
        j["v"] = grid([&](int i, int jj) { return field.v(i, jj); });
        j["mask"] = grid([&](int i, int jj) { return field.water(i, jj) ? 1 : 0; });
        out << j.dump(2) << '\n';
    }
    if (!out.good()) throw std::runtime_error("save_field: write to " + path + " failed");
}

inline VelocityField load_field(const std::string& path, FieldFormat format) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_field: cannot open " + path);
    if (format == FieldFormat::json) {
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error(std::string("load_field: JSON parse error: ") + e.what());
        }
        const int rows = j.at("rows").get<int>();
        const int cols = j.at("cols").get<int>();
        VelocityField f(rows, cols, j.at("cell_size").get<double>(),
                        j.at("origin").at(0).get<double>(), j.at("origin").at(1).get<double>());
        const auto& ju = j.at("u");
        const auto& jv = j.at("v");
        const auto& jm = j.at("mask");
        if (static_cast<int>(ju.size()) != rows || static_cast<int>(jv.size()) != rows ||
            static_cast<int>(jm.size()) != rows)
            throw std::runtime_error("load_field: row count mismatch");
        for (int i = 0; i < rows; ++i) {
            if (static_cast<int>(ju[i].size()) != cols || static_cast<int>(jv[i].size()) != cols ||
                static_cast<int>(jm[i].size()) != cols)
                throw std::runtime_error("load_field: column count mismatch");
            for (int jj = 0; jj < cols; ++jj) {
                if (jm[i][jj].get<int>() == 0)
                    f.set_land(i, jj);
                else
                    f.set(i, jj, ju[i][jj].get<double>(), jv[i][jj].get<double>());
            }
        }
        f.validate();
        return f;
    }

    // CSV: header `i,j,x,y,u,v,mask`, row-major.
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_field: empty CSV");
    struct Row {
        int i, j, mask;
        double x, y, u, v;
    };
    std::vector<Row> cells;
    int max_i = -1, max_j = -1;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        Row r{};
        std::istringstream ss(line);
        std::string tok;
        auto next = [&](const char* what) {
            if (!std::getline(ss, tok, ','))
                throw std::runtime_error("load_field: line " + std::to_string(lineno) +
                                         ": missing field " + what);
            return tok;
        };
        try {
            r.i = std::stoi(next("i"));
            r.j = std::stoi(next("j"));
            r.x = std::stod(next("x"));
            r.y = std::stod(next("y"));
            r.u = std::stod(next("u"));
            r.v = std::stod(next("v"));
            r.mask = std::stoi(next("mask"));
        } catch (const std::invalid_argument&) {
            throw std::runtime_error("load_field: line " + std::to_string(lineno) +
                                     ": malformed value '" + tok + "'");
        }
        if (!std::isfinite(r.u) || !std::isfinite(r.v))
            throw std::runtime_error("load_field: line " + std::to_string(lineno) +
                                     ": non-finite velocity");
        max_i = std::max(max_i, r.i);
        max_j = std::max(max_j, r.j);
        cells.push_back(r);
    }
    const int rows = max_i + 1, cols = max_j + 1;
    if (rows < 2 || cols < 2) throw std::runtime_error("load_field: grid smaller than 2x2");
    if (cells.size() != static_cast<std::size_t>(rows) * cols)
        throw std::runtime_error("load_field: expected " + std::to_string(rows * cols) +
                                 " cells, got " + std::to_string(cells.size()));
    // Infer geometry from the first row's x and the first column's y.
    double cell_size = 0.0;
    for (const Row& r : cells)
        if (r.i == 0 && r.j == 1) cell_size = r.x;
    double x00 = 0.0, y00 = 0.0;
    for (const Row& r : cells)
        if (r.i == 0 && r.j == 0) {
            x00 = r.x;
            y00 = r.y;
        }
    cell_size -= x00;
    if (!(cell_size > 0.0)) throw std::runtime_error("load_field: could not infer cell size");
    VelocityField f(rows, cols, cell_size, x00 - 0.5 * cell_size, y00 - 0.5 * cell_size);
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(rows) * cols, 0);
    for (const Row& r : cells) {
        if (r.i < 0 || r.i >= rows || r.j < 0 || r.j >= cols)
            throw std::runtime_error("load_field: cell index out of range");
        if (seen[f.idx(r.i, r.j)]++)
            throw std::runtime_error("load_field: duplicate cell (" + std::to_string(r.i) + "," +
                                     std::to_string(r.j) + ")");
        if (r.mask == 0)
            f.set_land(r.i, r.j);
        else
            f.set(r.i, r.j, r.u, r.v);
    }
    f.validate();
    return f;
}

// Adds zero-mean Gaussian noise with std = sigma_pct/100 * std(component) to a
// uniformly chosen fraction eta of the water cells. Masked cells never change.
inline VelocityField corrupt(const VelocityField& field, const NoiseSpec& spec) {
    spec.validate();
    VelocityField out = field;
    const auto water = field.water_cells();
    if (water.empty()) return out;

    auto component_std = [&](bool is_u) {
        double mean = 0.0;
        for (const GridPos& p : water) mean += is_u ? field.u(p.i, p.j) : field.v(p.i, p.j);
        mean /= static_cast<double>(water.size());
        double var = 0.0;
        for (const GridPos& p : water) {
            const double d = (is_u ? field.u(p.i, p.j) : field.v(p.i, p.j)) - mean;
            var += d * d;
        }
        return std::sqrt(var / static_cast<double>(water.size()));
    };
    const double sigma_u = spec.sigma_pct / 100.0 * component_std(true);
    const double sigma_v = spec.sigma_pct / 100.0 * component_std(false);

    // Half-up rounding of the selected-cell count.
    const auto count = static_cast<std::size_t>(
        std::floor(spec.eta * static_cast<double>(water.size()) + 0.5));
    auto eng = make_engine(spec.seed, 0xC0FFEEULL);
    const auto chosen = sample_without_replacement(water.size(), count, eng);
    for (const std::size_t w : chosen) {
        const GridPos p = water[w];
        const double du = sigma_u * standard_normal(eng);
        const double dv = sigma_v * standard_normal(eng);
        out.set(p.i, p.j, field.u(p.i, p.j) + du, field.v(p.i, p.j) + dv);
    }
    return out;
}

enum class SyntheticKind { patchwork, double_gyre, shear };

inline SyntheticKind synthetic_kind_from_string(const std::string& s) {
    if (s == "patchwork") return SyntheticKind::patchwork;
    if (s == "double_gyre") return SyntheticKind::double_gyre;
    if (s == "shear") return SyntheticKind::shear;
    throw std::invalid_argument("unknown synthetic kind: " + s);
}

struct SyntheticParams {
    int regions = 0;                 // patchwork: 0 draws 2..8 from the seed
    double speed_min = 0.3;          // m/s
    double speed_max = 1.2;          // m/s
    double heading_jitter_deg = 2.0; // patchwork: jitter around evenly spaced headings
    double island_frac = 0.0;        // patchwork: radius of a central land disc, as frac of min side
    double cell_size = 1.0;          // meters
};

struct PatchworkField {
    VelocityField field;
    std::vector<int> labels;  // ground-truth region id per cell, row-major
    int regions = 0;
};

// Voronoi patchwork: convex regions of constant (speed, heading). Headings are
// evenly spaced with a random rotation so distinct regions stay distinguishable
// by an angular homogeneity oracle.
inline PatchworkField make_patchwork(int rows, int cols, const SyntheticParams& params,
                                     std::uint64_t seed) {
    if (rows < 4 || cols < 4) throw std::invalid_argument("make_patchwork: need at least 4x4");
    auto eng = make_engine(seed, 0x9A7C4ULL);
    int regions = params.regions;
    if (regions == 0) regions = 2 + static_cast<int>(uniform_index(eng, 7));  // 2..8
    if (regions < 1) throw std::invalid_argument("make_patchwork: regions must be >= 1");

    std::vector<Eigen::Vector2d> sites(regions);
    for (auto& s : sites) s = {uniform01(eng) * cols, uniform01(eng) * rows};

    const double rot = uniform01(eng) * 2.0 * M_PI;
    std::vector<double> heading(regions), speed(regions);
    std::vector<std::size_t> perm(regions);
    for (int r = 0; r < regions; ++r) perm[r] = r;
    shuffle_inplace(perm, eng);
    for (int r = 0; r < regions; ++r) {
        const double jitter = (uniform01(eng) - 0.5) * 2.0 * params.heading_jitter_deg * M_PI / 180.0;
        heading[r] = rot + 2.0 * M_PI * r / regions + jitter;
        speed[r] = regions == 1
                       ? 0.5 * (params.speed_min + params.speed_max)
                       : params.speed_min + (params.speed_max - params.speed_min) *
                                                static_cast<double>(perm[r]) / (regions - 1);
    }

    PatchworkField out{VelocityField(rows, cols, params.cell_size, 0.0, 0.0),
                       std::vector<int>(static_cast<std::size_t>(rows) * cols, -1), regions};
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            const Eigen::Vector2d c(j + 0.5, i + 0.5);
            int best = 0;
            double bestd = (c - sites[0]).squaredNorm();
            for (int r = 1; r < regions; ++r) {
                const double d = (c - sites[r]).squaredNorm();
                if (d < bestd) {
                    bestd = d;
                    best = r;
                }
            }
            out.labels[out.field.idx(i, j)] = best;
            out.field.set(i, j, speed[best] * std::cos(heading[best]),
                          speed[best] * std::sin(heading[best]));
        }
    }
    if (params.island_frac > 0.0) {
        const double radius = params.island_frac * 0.5 * std::min(rows, cols);
        const Eigen::Vector2d c(cols * 0.5, rows * 0.5);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j)
                if ((Eigen::Vector2d(j + 0.5, i + 0.5) - c).norm() <= radius) {
                    out.field.set_land(i, j);
                    out.labels[out.field.idx(i, j)] = -1;
                }
    }
    return out;
}

inline VelocityField make_synthetic(SyntheticKind kind, int rows, int cols,
                                    const SyntheticParams& params, std::uint64_t seed) {
    if (rows < 4 || cols < 4) throw std::invalid_argument("make_synthetic: need at least 4x4");
    if (kind == SyntheticKind::patchwork) return make_patchwork(rows, cols, params, seed).field;

    VelocityField f(rows, cols, params.cell_size, 0.0, 0.0);
    if (kind == SyntheticKind::shear) {
        for (int i = 0; i < rows; ++i) {
            const double s = params.speed_min +
                             (params.speed_max - params.speed_min) * i / (rows - 1.0);
            for (int j = 0; j < cols; ++j) f.set(i, j, s, 0.0);
        }
        return f;
    }

    // double_gyre: velocities are central differences of a discrete
    // streamfunction, so the discrete divergence vanishes identically at
    // interior cells.
    const double h = params.cell_size;
    std::vector<double> psi(static_cast<std::size_t>(rows) * cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) {
            const double X = 2.0 * (j + 0.5) / cols;  // two cells along x
            const double Y = (i + 0.5) / rows;
            psi[f.idx(i, j)] = std::sin(M_PI * X) * std::sin(M_PI * Y);
        }
    auto at = [&](int i, int j) { return psi[f.idx(i, j)]; };
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) {
            double dpsi_dy, dpsi_dx;
            if (i == 0)
                dpsi_dy = (at(1, j) - at(0, j)) / h;
            else if (i == rows - 1)
                dpsi_dy = (at(i, j) - at(i - 1, j)) / h;
            else
                dpsi_dy = (at(i + 1, j) - at(i - 1, j)) / (2.0 * h);
            if (j == 0)
                dpsi_dx = (at(i, 1) - at(i, 0)) / h;
            else if (j == cols - 1)
                dpsi_dx = (at(i, j) - at(i, j - 1)) / h;
            else
                dpsi_dx = (at(i, j + 1) - at(i, j - 1)) / (2.0 * h);
            f.set(i, j, -dpsi_dy, dpsi_dx);
        }
    // Rescale so the fastest cell moves at speed_max.
    const double m = f.max_speed();
    if (m > 0.0) {
        const double scale = params.speed_max / m;
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) f.set(i, j, f.u(i, j) * scale, f.v(i, j) * scale);
    }
    return f;
}

enum class Interp { nearest, bilinear };

// Velocity at a metric position. Bilinear interpolation renormalizes over the
// in-grid, unmasked neighbors; masked neighbors contribute zero velocity and
// zero weight.
inline Eigen::Vector2d velocity_at(const VelocityField& field, double x, double y, Interp interp) {
    const double tol = 1e-9 * field.cell_size();
    if (x < field.x_min() - tol || x > field.x_max() + tol || y < field.y_min() - tol ||
        y > field.y_max() + tol)
        throw std::out_of_range("velocity_at: position outside grid bounds");

    if (interp == Interp::nearest) {
        const int j = std::clamp(static_cast<int>(std::floor((x - field.x0()) / field.cell_size())),
                                 0, field.cols() - 1);
        const int i = std::clamp(static_cast<int>(std::floor((y - field.y0()) / field.cell_size())),
                                 0, field.rows() - 1);
        return field.velocity(i, j);
    }

    const double gx = (x - field.x0()) / field.cell_size() - 0.5;
    const double gy = (y - field.y0()) / field.cell_size() - 0.5;
    const int j0 = static_cast<int>(std::floor(gx));
    const int i0 = static_cast<int>(std::floor(gy));
    const double tx = gx - j0, ty = gy - i0;

    double wsum = 0.0;
    Eigen::Vector2d acc = Eigen::Vector2d::Zero();
    const double wx[2] = {1.0 - tx, tx};
    const double wy[2] = {1.0 - ty, ty};
    for (int di = 0; di < 2; ++di) {
        for (int dj = 0; dj < 2; ++dj) {
            const int i = i0 + di, j = j0 + dj;
            const double w = wy[di] * wx[dj];
            if (w <= 0.0 || !field.in_bounds(i, j) || !field.water(i, j)) continue;
            acc += w * field.velocity(i, j);
            wsum += w;
        }
    }
    if (wsum <= 0.0) return Eigen::Vector2d::Zero();
    return acc / wsum;
}

}  // namespace driftplan
