#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "driftplan/segmentation.hpp"
#include "oracles.hpp"

using namespace driftplan;

namespace {

std::vector<Eigen::Vector2d> random_points(std::mt19937_64& eng, int n, double scale = 10.0) {
    std::vector<Eigen::Vector2d> pts(n);
    for (auto& p : pts) p = {uniform01(eng) * scale, uniform01(eng) * scale};
    return pts;
}

// Rasterized random ellipse: a convex set of grid cells.
std::vector<GridPos> random_convex_segment(std::mt19937_64& eng) {
    const double cx = 25 + uniform01(eng) * 10, cy = 25 + uniform01(eng) * 10;
    const double a = 8 + uniform01(eng) * 12, b = 8 + uniform01(eng) * 12;
    const double th = uniform01(eng) * M_PI;
    const double ct = std::cos(th), st = std::sin(th);
    std::vector<GridPos> cells;
    for (int i = 0; i < 70; ++i)
        for (int j = 0; j < 70; ++j) {
            const double dx = (j + 0.5) - cx, dy = (i + 0.5) - cy;
            const double xr = ct * dx + st * dy, yr = -st * dx + ct * dy;
            if (xr * xr / (a * a) + yr * yr / (b * b) <= 1.0) cells.push_back({i, j});
        }
    return cells;
}

}  // namespace

TEST_CASE("grid_sample with eps_grid=1 returns every water cell") {
    SyntheticParams params;
    params.regions = 3;
    auto pw = make_patchwork(10, 12, params, 5);
    pw.field.set_land(3, 4);
    const auto samples = grid_sample(pw.field, 1, 9);
    CHECK(samples.size() == pw.field.water_cells().size());
}

TEST_CASE("10x10 field with eps_grid=5 yields exactly 4 samples") {
    SyntheticParams params;
    params.regions = 2;
    const auto f = make_patchwork(10, 10, params, 6).field;
    const auto samples = grid_sample(f, 5, 1);
    REQUIRE(samples.size() == 4);
}

TEST_CASE("every grid sample lies in its own block") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto eng = make_engine(seed, 7);
        const int rows = 8 + static_cast<int>(uniform_index(eng, 20));
        const int cols = 8 + static_cast<int>(uniform_index(eng, 20));
        SyntheticParams params;
        const auto f = make_patchwork(rows, cols, params, seed).field;
        const int eps = 1 + static_cast<int>(uniform_index(eng, std::min(rows, cols) - 1));
        const auto samples = grid_sample(f, eps, seed * 3);
        const int blocks_x = (cols + eps - 1) / eps;
        std::set<std::pair<int, int>> seen;
        for (const GridPos& p : samples) {
            const int bi = p.i / eps, bj = p.j / eps;
            CHECK(f.water(p));
            // one sample per block
            CHECK(seen.insert({bi, bj}).second);
        }
        CHECK(static_cast<int>(samples.size()) <= blocks_x * ((rows + eps - 1) / eps));
    }
}

TEST_CASE("oracle is reflexive and symmetric") {
    SyntheticParams params;
    const auto f = make_patchwork(12, 12, params, 8).field;
    HomogeneityParams hp;
    auto eng = make_engine(3, 3);
    for (int t = 0; t < 200; ++t) {
        const GridPos a{static_cast<int>(uniform_index(eng, 12)), static_cast<int>(uniform_index(eng, 12))};
        const GridPos b{static_cast<int>(uniform_index(eng, 12)), static_cast<int>(uniform_index(eng, 12))};
        CHECK(oracle_same_patch(f, a, a, hp));
        CHECK(oracle_same_patch(f, a, b, hp) == oracle_same_patch(f, b, a, hp));
    }
}

TEST_CASE("perpendicular unit vectors fail a 45-degree threshold") {
    VelocityField f(2, 2, 1.0, 0.0, 0.0);
    f.set(0, 0, 1.0, 0.0);
    f.set(0, 1, 0.0, 1.0);
    HomogeneityParams hp;
    hp.max_angle = M_PI / 4.0;
    hp.max_speed_ratio = 10.0;
    CHECK_FALSE(oracle_same_patch(f, {0, 0}, {0, 1}, hp));
}

TEST_CASE("zero-speed cells match only zero-speed cells; masked input throws") {
    VelocityField f(2, 2, 1.0, 0.0, 0.0);
    f.set(0, 0, 0.0, 0.0);
    f.set(0, 1, 1.0, 0.0);
    f.set(1, 0, 0.0, 0.0);
    f.set_land(1, 1);
    HomogeneityParams hp;
    CHECK(oracle_same_patch(f, {0, 0}, {1, 0}, hp));
    CHECK_FALSE(oracle_same_patch(f, {0, 0}, {0, 1}, hp));
    CHECK_THROWS(oracle_same_patch(f, {0, 0}, {1, 1}, hp));
}

TEST_CASE("oracle agrees with patchwork ground truth on random pairs") {
    SyntheticParams params;
    params.regions = 5;
    const auto pw = make_patchwork(30, 30, params, 11);
    HomogeneityParams hp;
    hp.max_angle = 10.0 * M_PI / 180.0;
    hp.max_speed_ratio = 1.2;
    auto eng = make_engine(12, 0);
    int agree = 0, total = 0;
    for (int t = 0; t < 2000; ++t) {
        const GridPos a{static_cast<int>(uniform_index(eng, 30)), static_cast<int>(uniform_index(eng, 30))};
        const GridPos b{static_cast<int>(uniform_index(eng, 30)), static_cast<int>(uniform_index(eng, 30))};
        const bool truth = pw.labels[pw.field.idx(a.i, a.j)] == pw.labels[pw.field.idx(b.i, b.j)];
        const bool pred = oracle_same_patch(pw.field, a, b, hp);
        agree += truth == pred;
        ++total;
    }
    CHECK(static_cast<double>(agree) / total >= 0.99);
}

TEST_CASE("mvee of the unit square corners is the circumscribed circle") {
    const std::vector<Eigen::Vector2d> pts{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
    MveeOptions opt;
    opt.eps = 1e-6;
    const auto res = mvee(pts, opt);
    REQUIRE(res.converged);
    CHECK(res.ellipsoid.center.x() == Catch::Approx(0.5).margin(1e-4));
    CHECK(res.ellipsoid.center.y() == Catch::Approx(0.5).margin(1e-4));
    CHECK(res.ellipsoid.area() == Catch::Approx(M_PI / 2.0).epsilon(1e-4));
    for (const auto& p : pts) CHECK(res.ellipsoid.membership(p) <= 1.0 + opt.eps);
}

TEST_CASE("mvee recovers a known generating ellipse") {
    // points sampled on (x-c)^T G (x-c) = 1
    const Eigen::Vector2d c(3.0, -2.0);
    Eigen::Matrix2d G;
    G << 0.5, 0.2, 0.2, 1.5;
    std::vector<Eigen::Vector2d> pts;
    const Eigen::Matrix2d L = G.inverse().llt().matrixL();
    for (int k = 0; k < 12; ++k) {
        const double th = 2.0 * M_PI * k / 12;
        pts.push_back(c + L * Eigen::Vector2d(std::cos(th), std::sin(th)));
    }
    MveeOptions opt;
    opt.eps = 1e-7;
    const auto res = mvee(pts, opt);
    CHECK((res.ellipsoid.center - c).norm() < 1e-3);
    CHECK((res.ellipsoid.shape - G).norm() < 1e-2 * G.norm());
}

TEST_CASE("mvee of identical points is a quarter-unit disc") {
    const std::vector<Eigen::Vector2d> pts{{2, 3}, {2, 3}, {2, 3}};
    const auto res = mvee(pts);
    CHECK(res.ellipsoid.center == Eigen::Vector2d(2, 3));
    CHECK(res.ellipsoid.area() == Catch::Approx(M_PI * 0.25 * 0.25));
}

TEST_CASE("mvee of collinear points is a hairline ellipse with 0.25 minor axis") {
    const std::vector<Eigen::Vector2d> pts{{0, 0}, {1, 1}, {2, 2}, {3, 3}};
    const auto res = mvee(pts);
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(res.ellipsoid.shape);
    const double semi_minor = 1.0 / std::sqrt(es.eigenvalues()(1));
    const double semi_major = 1.0 / std::sqrt(es.eigenvalues()(0));
    CHECK(semi_minor == Catch::Approx(0.25));
    CHECK(semi_major == Catch::Approx(3.0 * std::sqrt(2.0) / 2.0));
    for (const auto& p : pts) CHECK(res.ellipsoid.membership(p) <= 1.0 + 1e-9);
}

TEST_CASE("mvee rejects empty input") { CHECK_THROWS(mvee({})); }

TEST_CASE("mvee volume matches the support-enumeration oracle on small sets") {
    MveeOptions opt;
    opt.eps = 1e-3;
    auto eng = make_engine(77, 0);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 4 + static_cast<int>(uniform_index(eng, 5));
        const auto pts = random_points(eng, n);
        const auto res = mvee(pts, opt);
        const auto oracle = oracles::brute_force_mvee(pts);
        REQUIRE(oracle.valid);
        const double ratio = res.ellipsoid.area() / oracle.area;
        CHECK(ratio <= 1.0 + 2.0 * opt.eps);
        CHECK(ratio >= 1.0 - 2.0 * opt.eps);
        for (const auto& p : pts) REQUIRE(res.ellipsoid.membership(p) <= 1.0 + opt.eps);
    }
}

TEST_CASE("half-shrunk mvee sits inside the convex hull (John property)") {
    MveeOptions opt;
    opt.eps = 1e-8;
    auto eng = make_engine(78, 0);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 5 + static_cast<int>(uniform_index(eng, 10));
        const auto pts = random_points(eng, n);
        const auto res = mvee(pts, opt);
        const auto hull = oracles::convex_hull(pts);
        if (hull.size() < 3) continue;
        const Eigen::Matrix2d Ginv = res.ellipsoid.shape.inverse();
        for (std::size_t e = 0; e < hull.size(); ++e) {
            const Eigen::Vector2d a = hull[e], b = hull[(e + 1) % hull.size()];
            Eigen::Vector2d normal(b.y() - a.y(), a.x() - b.x());  // outward for ccw hull
            normal.normalize();
            const double offset = normal.dot(a);
            const double support =
                normal.dot(res.ellipsoid.center) + 0.5 * std::sqrt(normal.dot(Ginv * normal));
            REQUIRE(support <= offset + 2e-3);
        }
    }
}

TEST_CASE("grow_patch on a constant field covers all water") {
    SyntheticParams params;
    params.regions = 1;
    auto f = make_patchwork(10, 10, params, 2).field;
    f.set_land(5, 5);
    HomogeneityParams hp;
    std::vector<std::uint8_t> covered(100, 0);
    const auto seg = grow_patch(f, {0, 0}, hp, covered, 4);
    CHECK(seg.cells.size() == f.water_cells().size());
    CHECK(!seg.representatives.empty());
    for (const GridPos& r : seg.representatives)
        CHECK(std::binary_search(seg.cells.begin(), seg.cells.end(), r));
}

TEST_CASE("grow_patch stays inside the seed's ground-truth region") {
    SyntheticParams params;
    params.regions = 6;
    const auto pw = make_patchwork(25, 25, params, 21);
    HomogeneityParams hp;
    hp.max_angle = 10.0 * M_PI / 180.0;
    hp.max_speed_ratio = 1.2;
    std::vector<std::uint8_t> covered(25 * 25, 0);
    auto eng = make_engine(5, 5);
    for (int t = 0; t < 10; ++t) {
        const auto water = pw.field.water_cells();
        const GridPos seed = water[uniform_index(eng, water.size())];
        const auto seg = grow_patch(pw.field, seed, hp, covered, t);
        const int truth = pw.labels[pw.field.idx(seed.i, seed.j)];
        for (const GridPos& p : seg.cells) CHECK(pw.labels[pw.field.idx(p.i, p.j)] == truth);
    }
}

TEST_CASE("grow_patch with incompatible neighbors stays a singleton") {
    VelocityField f(3, 3, 1.0, 0.0, 0.0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) f.set(i, j, 0.0, 1.0);
    f.set(1, 1, 0.0, -1.0);  // opposite to all neighbors
    HomogeneityParams hp;
    std::vector<std::uint8_t> covered(9, 0);
    const auto seg = grow_patch(f, {1, 1}, hp, covered, 1);
    REQUIRE(seg.cells.size() == 1);
    CHECK(seg.cells[0] == GridPos{1, 1});
}

TEST_CASE("grow_patch refuses a covered seed") {
    SyntheticParams params;
    params.regions = 1;
    const auto f = make_patchwork(6, 6, params, 1).field;
    std::vector<std::uint8_t> covered(36, 0);
    covered[f.idx(2, 2)] = 1;
    HomogeneityParams hp;
    CHECK_THROWS(grow_patch(f, {2, 2}, hp, covered, 0));
}

TEST_CASE("a singleton segment yields exactly one representative") {
    const std::vector<GridPos> cells{{4, 7}};
    const auto reps = sample_representatives(cells, 0.5, 3);
    REQUIRE(reps.size() == 1);
    CHECK(reps[0] == GridPos{4, 7});
}

TEST_CASE("representatives are always members") {
    auto eng = make_engine(31, 0);
    for (int t = 0; t < 25; ++t) {
        const auto cells = random_convex_segment(eng);
        const auto reps = sample_representatives(cells, 0.3, t);
        std::set<std::pair<int, int>> members;
        for (const GridPos& c : cells) members.insert({c.i, c.j});
        for (const GridPos& r : reps) REQUIRE(members.count({r.i, r.j}) == 1);
    }
}

TEST_CASE("hull area of the representative sample keeps a 1-eps_beta share") {
    auto eng = make_engine(32, 0);
    const double eps_beta = 0.05;
    for (int t = 0; t < 100; ++t) {
        const auto cells = random_convex_segment(eng);
        REQUIRE(cells.size() >= 3);
        const auto reps = sample_representatives(cells, eps_beta, 1000 + t);
        std::vector<Eigen::Vector2d> all, sub;
        for (const GridPos& c : cells) all.push_back({c.j + 0.5, c.i + 0.5});
        for (const GridPos& r : reps) sub.push_back({r.j + 0.5, r.i + 0.5});
        const double full = oracles::polygon_area(oracles::convex_hull(all));
        const double part = oracles::polygon_area(oracles::convex_hull(sub));
        REQUIRE(full > 0.0);
        REQUIRE(part / full >= 1.0 - eps_beta);
    }
}

TEST_CASE("segment_field covers a constant field with one segment") {
    SyntheticParams params;
    params.regions = 1;
    const auto f = make_patchwork(9, 9, params, 3).field;
    HomogeneityParams hp;
    const auto segments = segment_field(f, hp, 7);
    REQUIRE(segments.size() == 1);
    CHECK(segments[0].cells.size() == 81);
}

TEST_CASE("segment_field on a patchwork matches regions with high purity") {
    SyntheticParams params;
    params.regions = 4;
    const auto pw = make_patchwork(30, 30, params, 13);
    HomogeneityParams hp;
    hp.max_angle = 10.0 * M_PI / 180.0;
    hp.max_speed_ratio = 1.2;
    const auto segments = segment_field(pw.field, hp, 5);
    CHECK(segments.size() >= 4);
    std::vector<std::uint8_t> covered(30 * 30, 0);
    for (const auto& seg : segments) {
        std::map<int, int> votes;
        for (const GridPos& p : seg.cells) {
            ++votes[pw.labels[pw.field.idx(p.i, p.j)]];
            CHECK(pw.field.water(p));
            CHECK(!covered[pw.field.idx(p.i, p.j)]);  // disjointness
            covered[pw.field.idx(p.i, p.j)] = 1;
        }
        int majority = 0;
        for (const auto& [lab, n] : votes) majority = std::max(majority, n);
        CHECK(static_cast<double>(majority) / seg.cells.size() >= 0.95);
    }
}

TEST_CASE("segment_field is deterministic given the seed") {
    SyntheticParams params;
    params.regions = 5;
    const auto f = make_patchwork(20, 20, params, 4).field;
    HomogeneityParams hp;
    const auto a = segment_field(f, hp, 99);
    const auto b = segment_field(f, hp, 99);
    REQUIRE(a.size() == b.size());
    for (std::size_t s = 0; s < a.size(); ++s) {
        CHECK(a[s].cells == b[s].cells);
        CHECK(a[s].representatives == b[s].representatives);
    }
}

TEST_CASE("segmentation JSON round-trips") {
    SyntheticParams params;
    params.regions = 3;
    const auto f = make_patchwork(12, 12, params, 6).field;
    HomogeneityParams hp;
    const auto segments = segment_field(f, hp, 1);
    const auto j = segmentation_to_json(segments);
    const auto back = segmentation_from_json(j);
    REQUIRE(back.size() == segments.size());
    for (std::size_t s = 0; s < segments.size(); ++s) {
        CHECK(back[s].cells == segments[s].cells);
        CHECK(back[s].representatives == segments[s].representatives);
        CHECK(back[s].mean_speed == segments[s].mean_speed);
    }
}
