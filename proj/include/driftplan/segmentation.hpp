#pragma once

// Partition of a velocity field into homogeneous current patches: eps-grid
// sampling, an angular/speed membership oracle, flood-fill patch growth,
// Khachiyan minimum-volume enclosing ellipsoids, and the eps_beta
// representative sample whose convex hull approximates the patch volume.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "driftplan/flowfield.hpp"
#include "driftplan/random.hpp"

namespace driftplan {

// E = { x : (x - c)^T G (x - c) <= 1 }, G symmetric positive definite.
struct Ellipsoid {
    Eigen::Vector2d center = Eigen::Vector2d::Zero();
    Eigen::Matrix2d shape = Eigen::Matrix2d::Identity();

    double membership(const Eigen::Vector2d& x) const {
        const Eigen::Vector2d d = x - center;
        return d.dot(shape * d);
    }
    double area() const { return M_PI / std::sqrt(shape.determinant()); }
};

struct Segment {
    int id = 0;
    std::vector<GridPos> cells;
    std::vector<GridPos> representatives;
    Ellipsoid ellipsoid;
    double mean_heading = 0.0;  // radians
    double mean_speed = 0.0;    // m/s
};

struct HomogeneityParams {
    double max_angle = 20.0 * M_PI / 180.0;
    double max_speed_ratio = 1.5;
    int eps_grid = 1;
    double eps_beta = 0.05;

    void validate() const {
        if (!(max_angle > 0.0 && max_angle <= M_PI))
            throw std::invalid_argument("HomogeneityParams: max_angle must be in (0, pi]");
        if (max_speed_ratio < 1.0)
            throw std::invalid_argument("HomogeneityParams: max_speed_ratio must be >= 1");
        if (eps_grid < 1) throw std::invalid_argument("HomogeneityParams: eps_grid must be >= 1");
        if (!(eps_beta > 0.0 && eps_beta < 1.0))
            throw std::invalid_argument("HomogeneityParams: eps_beta must be in (0, 1)");
    }
};

// One uniformly chosen water cell per eps_grid x eps_grid block, block order
// row-major. Blocks without water are skipped.
inline std::vector<GridPos> grid_sample(const VelocityField& field, int eps_grid,
                                        std::uint64_t seed) {
    if (eps_grid < 1 || eps_grid > std::min(field.rows(), field.cols()))
        throw std::invalid_argument("grid_sample: eps_grid must be in [1, min(M, N)]");
    auto eng = make_engine(seed, 0x6B10C5ULL);
    std::vector<GridPos> out;
    std::vector<GridPos> block;
    for (int bi = 0; bi < field.rows(); bi += eps_grid) {
        for (int bj = 0; bj < field.cols(); bj += eps_grid) {
            block.clear();
            for (int i = bi; i < std::min(bi + eps_grid, field.rows()); ++i)
                for (int j = bj; j < std::min(bj + eps_grid, field.cols()); ++j)
                    if (field.water(i, j)) block.push_back({i, j});
            if (!block.empty())
                out.push_back(block[uniform_index(eng, block.size())]);
        }
    }
    return out;
}

// True iff the two cells carry velocities of similar direction and speed.
// Symmetric and reflexive; a zero-speed cell matches only a zero-speed cell.
inline bool oracle_same_patch(const VelocityField& field, GridPos anchor, GridPos query,
                              const HomogeneityParams& params) {
    if (!field.water(anchor) || !field.water(query))
        throw std::invalid_argument("oracle_same_patch: masked cell input");
    const Eigen::Vector2d va = field.velocity(anchor);
    const Eigen::Vector2d vq = field.velocity(query);
    const double sa = va.norm(), sq = vq.norm();
    if (sa == 0.0 && sq == 0.0) return true;
    if (sa == 0.0 || sq == 0.0) return false;
    const double ratio = std::max(sa, sq) /
                         std::max(std::min(sa, sq), std::numeric_limits<double>::epsilon());
    if (ratio > params.max_speed_ratio) return false;
    const double cosang = std::clamp(va.dot(vq) / (sa * sq), -1.0, 1.0);
    return std::acos(cosang) <= params.max_angle;
}

struct MveeOptions {
    double eps = 1e-3;      // dual-gap tolerance
    int max_iters = 10000;  // iteration cap
};

struct MveeResult {
    Ellipsoid ellipsoid;
    bool converged = true;
    int iterations = 0;
};

namespace detail {

// Hairline ellipse for rank-deficient inputs: minor semi-axis 0.25 along the
// orthogonal of the data direction (or a 0.25 disc for a single point).
inline MveeResult degenerate_mvee(const std::vector<Eigen::Vector2d>& pts) {
    Eigen::Vector2d lo = pts[0], hi = pts[0];
    Eigen::Vector2d dir = Eigen::Vector2d::UnitX();
    double maxd = 0.0;
    for (const auto& a : pts)
        for (const auto& b : pts) {
            const double d = (a - b).norm();
            if (d > maxd) {
                maxd = d;
                lo = a;
                hi = b;
            }
        }
    MveeResult res;
    if (maxd == 0.0) {
        res.ellipsoid.center = pts[0];
        res.ellipsoid.shape = Eigen::Matrix2d::Identity() / (0.25 * 0.25);
        return res;
    }
    dir = (hi - lo).normalized();
    const Eigen::Vector2d nrm(-dir.y(), dir.x());
    const double a = 0.5 * maxd;  // semi-major: covers both extremes exactly
    const double b = 0.25;
    Eigen::Matrix2d basis;
    basis.col(0) = dir;
    basis.col(1) = nrm;
    Eigen::Vector2d diag(1.0 / (a * a), 1.0 / (b * b));
    res.ellipsoid.center = 0.5 * (lo + hi);
    res.ellipsoid.shape = basis * diag.asDiagonal() * basis.transpose();
    return res;
}

}  // namespace detail

// Khachiyan barycentric-coordinate-descent MVEE. Every input point ends up
// with membership <= 1 + eps, and the volume is within (1 + O(eps)) of the
// optimal enclosing ellipsoid.
inline MveeResult mvee(const std::vector<Eigen::Vector2d>& points, const MveeOptions& opt = {}) {
    if (points.empty()) throw std::invalid_argument("mvee: need at least one point");
    const int n = static_cast<int>(points.size());

    // Affine rank check for the degenerate paths.
    {
        Eigen::Vector2d mean = Eigen::Vector2d::Zero();
        for (const auto& p : points) mean += p;
        mean /= n;
        Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
        double scale2 = 0.0;
        for (const auto& p : points) {
            const Eigen::Vector2d d = p - mean;
            cov += d * d.transpose();
            scale2 = std::max(scale2, d.squaredNorm());
        }
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
        if (scale2 == 0.0 || es.eigenvalues()(0) <= 1e-12 * std::max(scale2, 1.0))
            return detail::degenerate_mvee(points);
    }

    constexpr int d = 2;
    Eigen::Matrix<double, 3, Eigen::Dynamic> Q(3, n);
    for (int k = 0; k < n; ++k) Q.col(k) << points[k].x(), points[k].y(), 1.0;

    Eigen::VectorXd u = Eigen::VectorXd::Constant(n, 1.0 / n);
    MveeResult res;
    res.converged = false;
    const double target = (1.0 + opt.eps) * (d + 1);
    for (int it = 0; it < opt.max_iters; ++it) {
        const Eigen::Matrix3d X = Q * u.asDiagonal() * Q.transpose();
        const Eigen::Matrix3d Xinv = X.inverse();
        int jmax = 0;
        double kappa = -1.0;
        for (int k = 0; k < n; ++k) {
            const double m = Q.col(k).dot(Xinv * Q.col(k));
            if (m > kappa) {
                kappa = m;
                jmax = k;
            }
        }
        res.iterations = it + 1;
        if (kappa <= target) {
            res.converged = true;
            break;
        }
        const double step = (kappa - d - 1) / ((d + 1) * (kappa - 1));
        u *= (1.0 - step);
        u(jmax) += step;
    }

    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    for (int k = 0; k < n; ++k) c += u(k) * points[k];
    Eigen::Matrix2d S = Eigen::Matrix2d::Zero();
    for (int k = 0; k < n; ++k) S += u(k) * (points[k] * points[k].transpose());
    S -= c * c.transpose();
    Eigen::Matrix2d G = S.inverse() / d;

    // Enforce the membership contract exactly: inflate to the worst point if
    // the iterate stopped marginally above 1 + eps.
    double worst = 0.0;
    for (const auto& p : points) {
        const Eigen::Vector2d dd = p - c;
        worst = std::max(worst, dd.dot(G * dd));
    }
    if (worst > (1.0 + opt.eps) * (1.0 - 1e-9)) G *= (1.0 + opt.eps) * (1.0 - 1e-9) / worst;

    res.ellipsoid.center = c;
    res.ellipsoid.shape = G;
    return res;
}

namespace detail {

struct BinGrid {
    int gx = 1, gy = 1;
    int imin = 0, jmin = 0;
    double wi = 1.0, wj = 1.0;  // bin side in cells, per axis

    int bin_of(GridPos p) const {
        const int bx = std::min(gx - 1, static_cast<int>((p.j - jmin + 0.5) / wj));
        const int by = std::min(gy - 1, static_cast<int>((p.i - imin + 0.5) / wi));
        return by * gx + bx;
    }
};

// Congruent rectangular bins over the member bounding box. The bin side
// shrinks linearly with eps_beta so the sampled hull keeps at least a
// (1 - eps_beta) share of the patch hull area; it is floored at one cell.
inline BinGrid representative_bins(const std::vector<GridPos>& cells, double eps_beta) {
    BinGrid g;
    int imax = cells[0].i, jmax = cells[0].j;
    g.imin = cells[0].i;
    g.jmin = cells[0].j;
    for (const GridPos& p : cells) {
        g.imin = std::min(g.imin, p.i);
        g.jmin = std::min(g.jmin, p.j);
        imax = std::max(imax, p.i);
        jmax = std::max(jmax, p.j);
    }
    const double H = imax - g.imin + 1;
    const double W = jmax - g.jmin + 1;
    double side = std::max(1.0, eps_beta * std::max(W, H) / 4.0);
    // Very large patches fall back to the count-proportional dissection so the
    // sample still shrinks relative to the patch.
    const double area_bins = std::ceil(static_cast<double>(cells.size()) * eps_beta * eps_beta);
    side = std::min(side, std::max(1.0, std::sqrt(W * H / area_bins)));
    g.gx = std::max(1, static_cast<int>(std::ceil(W / side)));
    g.gy = std::max(1, static_cast<int>(std::ceil(H / side)));
    g.wj = W / g.gx;
    g.wi = H / g.gy;
    return g;
}

}  // namespace detail

// One member cell drawn uniformly from every nonempty bin of the dissection.
inline std::vector<GridPos> sample_representatives(const std::vector<GridPos>& cells,
                                                   double eps_beta, std::uint64_t seed) {
    if (cells.empty()) throw std::invalid_argument("sample_representatives: empty segment");
    const auto grid = detail::representative_bins(cells, eps_beta);
    std::vector<std::vector<GridPos>> bins(static_cast<std::size_t>(grid.gx) * grid.gy);
    for (const GridPos& p : cells) bins[grid.bin_of(p)].push_back(p);
    auto eng = make_engine(seed, 0x5A3B17ULL);
    std::vector<GridPos> reps;
    for (auto& b : bins) {
        if (b.empty()) continue;
        reps.push_back(b[uniform_index(eng, b.size())]);
    }
    std::sort(reps.begin(), reps.end());
    return reps;
}

inline std::vector<GridPos> sample_representatives(const Segment& segment, double eps_beta,
                                                   std::uint64_t seed) {
    return sample_representatives(segment.cells, eps_beta, seed);
}

// Flood-fills from seed_pos over 4-neighbors accepted by the oracle against
// the seed anchor, skipping cells marked in `covered`, then fits the MVEE and
// draws the representative sample.
inline Segment grow_patch(const VelocityField& field, GridPos seed_pos,
                          const HomogeneityParams& params, const std::vector<std::uint8_t>& covered,
                          std::uint64_t seed, int segment_id = 0) {
    params.validate();
    if (!field.water(seed_pos)) throw std::invalid_argument("grow_patch: seed is not a water cell");
    if (covered[field.idx(seed_pos.i, seed_pos.j)])
        throw std::invalid_argument("grow_patch: seed already covered");

    Segment seg;
    seg.id = segment_id;
    std::vector<std::uint8_t> seen = covered;
    std::vector<GridPos> queue{seed_pos};
    seen[field.idx(seed_pos.i, seed_pos.j)] = 1;
    static constexpr int di[4] = {-1, 1, 0, 0};
    static constexpr int dj[4] = {0, 0, -1, 1};
    while (!queue.empty()) {
        const GridPos p = queue.back();
        queue.pop_back();
        seg.cells.push_back(p);
        for (int k = 0; k < 4; ++k) {
            const GridPos q{p.i + di[k], p.j + dj[k]};
            if (!field.in_bounds(q) || !field.water(q)) continue;
            if (seen[field.idx(q.i, q.j)]) continue;
            if (!oracle_same_patch(field, seed_pos, q, params)) continue;
            seen[field.idx(q.i, q.j)] = 1;
            queue.push_back(q);
        }
    }
    std::sort(seg.cells.begin(), seg.cells.end());

    Eigen::Vector2d vsum = Eigen::Vector2d::Zero();
    double speed_sum = 0.0;
    std::vector<Eigen::Vector2d> centers;
    centers.reserve(seg.cells.size());
    for (const GridPos& p : seg.cells) {
        vsum += field.velocity(p);
        speed_sum += field.speed(p);
        centers.push_back(field.center_grid(p));
    }
    seg.mean_heading = (vsum.norm() > 0.0) ? std::atan2(vsum.y(), vsum.x()) : 0.0;
    seg.mean_speed = speed_sum / static_cast<double>(seg.cells.size());
    seg.ellipsoid = mvee(centers).ellipsoid;
    seg.representatives = sample_representatives(seg.cells, params.eps_beta, seed);
    return seg;
}

// Repeats grow_patch over the eps-grid samples until every sample is covered.
// Segments are pairwise disjoint subsets of the water cells.
inline std::vector<Segment> segment_field(const VelocityField& field,
                                          const HomogeneityParams& params, std::uint64_t seed) {
    params.validate();
    const auto samples = grid_sample(field, params.eps_grid, derive_seed(seed, 1));
    if (samples.empty()) throw std::invalid_argument("segment_field: field has no water cells");
    std::vector<std::uint8_t> covered(static_cast<std::size_t>(field.rows()) * field.cols(), 0);
    std::vector<Segment> segments;
    for (const GridPos& s : samples) {
        if (covered[field.idx(s.i, s.j)]) continue;
        Segment seg = grow_patch(field, s, params, covered,
                                 derive_seed(seed, 1000 + segments.size()),
                                 static_cast<int>(segments.size()));
        for (const GridPos& p : seg.cells) covered[field.idx(p.i, p.j)] = 1;
        segments.push_back(std::move(seg));
    }
    return segments;
}

inline nlohmann::json segmentation_to_json(const std::vector<Segment>& segments) {
    nlohmann::json arr = nlohmann::json::array();
    for (const Segment& s : segments) {
        nlohmann::json cells = nlohmann::json::array();
        for (const GridPos& p : s.cells) cells.push_back({p.i, p.j});
        nlohmann::json reps = nlohmann::json::array();
        for (const GridPos& p : s.representatives) reps.push_back({p.i, p.j});
        arr.push_back({{"id", s.id},
                       {"cells", std::move(cells)},
                       {"representatives", std::move(reps)},
                       {"center", {s.ellipsoid.center.x(), s.ellipsoid.center.y()}},
                       {"shape",
                        {{s.ellipsoid.shape(0, 0), s.ellipsoid.shape(0, 1)},
                         {s.ellipsoid.shape(1, 0), s.ellipsoid.shape(1, 1)}}},
                       {"mean_heading", s.mean_heading},
                       {"mean_speed", s.mean_speed}});
    }
    return arr;
}

inline std::vector<Segment> segmentation_from_json(const nlohmann::json& arr) {
    std::vector<Segment> out;
    for (const auto& js : arr) {
        Segment s;
        s.id = js.at("id").get<int>();
        for (const auto& c : js.at("cells")) s.cells.push_back({c.at(0).get<int>(), c.at(1).get<int>()});
        for (const auto& c : js.at("representatives"))
            s.representatives.push_back({c.at(0).get<int>(), c.at(1).get<int>()});
        s.ellipsoid.center = {js.at("center").at(0).get<double>(), js.at("center").at(1).get<double>()};
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) s.ellipsoid.shape(a, b) = js.at("shape").at(a).at(b).get<double>();
        s.mean_heading = js.at("mean_heading").get<double>();
        s.mean_speed = js.at("mean_speed").get<double>();
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace driftplan
