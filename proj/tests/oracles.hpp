#pragma once

// Test-only oracles, independent of the library implementations they check:
// exact convex hulls, a support-enumeration minimum-area enclosing ellipse, a
// Floyd-Warshall all-pairs reference, an accelerated projected-gradient QP
// solver for the SVR dual, a visited-set coverage simulator, and exhaustive
// searches for tiny sets-clustering and disjoint-path instances.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "driftplan/flowfield.hpp"

namespace oracles {

// ---------------------------------------------------------------- convex hull

inline std::vector<Eigen::Vector2d> convex_hull(std::vector<Eigen::Vector2d> pts) {
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
        return a.x() != b.x() ? a.x() < b.x() : a.y() < b.y();
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const auto& a, const auto& b) { return a == b; }),
              pts.end());
    if (pts.size() < 3) return pts;
    auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
        return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
    };
    std::vector<Eigen::Vector2d> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
        hull[k++] = p;
    }
    const std::size_t lower = k + 1;
    for (auto it = pts.rbegin() + 1; it != pts.rend(); ++it) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], *it) <= 0) --k;
        hull[k++] = *it;
    }
    hull.resize(k - 1);
    return hull;
}

inline double polygon_area(const std::vector<Eigen::Vector2d>& poly) {
    if (poly.size() < 3) return 0.0;
    double a = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const auto& p = poly[i];
        const auto& q = poly[(i + 1) % poly.size()];
        a += p.x() * q.y() - q.x() * p.y();
    }
    return 0.5 * std::abs(a);
}

// --------------------------------------------- support-enumeration MVEE oracle

struct ConicEllipse {
    Eigen::Vector2d center;
    Eigen::Matrix2d shape;  // (x-c)^T G (x-c) <= 1
    double area = std::numeric_limits<double>::infinity();
    bool valid = false;
};

// Interprets a symmetric 3x3 conic matrix Q ([x;1]^T Q [x;1] = 0) as an
// ellipse if possible.
inline ConicEllipse conic_to_ellipse(Eigen::Matrix3d Q) {
    ConicEllipse e;
    Eigen::Matrix2d M = Q.topLeftCorner<2, 2>();
    Eigen::Vector2d b(Q(0, 2) * 2.0, Q(1, 2) * 2.0);
    double f = Q(2, 2);
    if (M.determinant() <= 0.0) return e;
    if (M(0, 0) < 0.0) {  // normalize to positive definite
        M = -M;
        b = -b;
        f = -f;
    }
    const Eigen::Vector2d x0 = -0.5 * M.inverse() * b;
    const double s = x0.dot(M * x0) - f;
    if (s <= 0.0) return e;
    e.center = x0;
    e.shape = M / s;
    e.area = M_PI / std::sqrt(e.shape.determinant());
    e.valid = true;
    return e;
}

inline Eigen::Vector3d line_through(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return Eigen::Vector3d(a.x(), a.y(), 1.0).cross(Eigen::Vector3d(b.x(), b.y(), 1.0));
}

inline Eigen::Matrix3d degenerate_conic(const Eigen::Vector3d& l1, const Eigen::Vector3d& l2) {
    return 0.5 * (l1 * l2.transpose() + l2 * l1.transpose());
}

// Steiner circumellipse: the minimum-area ellipse through three points.
inline ConicEllipse steiner_ellipse(const std::array<Eigen::Vector2d, 3>& p) {
    ConicEllipse e;
    const Eigen::Vector2d g = (p[0] + p[1] + p[2]) / 3.0;
    Eigen::Matrix2d M = Eigen::Matrix2d::Zero();
    for (const auto& q : p) {
        const Eigen::Vector2d d = q - g;
        M += d * d.transpose();
    }
    const Eigen::Matrix2d S = (2.0 / 3.0) * M;
    if (S.determinant() <= 1e-300) return e;
    e.center = g;
    e.shape = S.inverse();
    e.area = M_PI / std::sqrt(e.shape.determinant());
    e.valid = true;
    return e;
}

// Minimum-area ellipse through four points: sweep the conic pencil spanned by
// the two degenerate line-pair conics, then golden-section refine.
inline ConicEllipse min_area_ellipse_4(const std::array<Eigen::Vector2d, 4>& p) {
    const Eigen::Matrix3d C1 = degenerate_conic(line_through(p[0], p[1]), line_through(p[2], p[3]));
    const Eigen::Matrix3d C2 = degenerate_conic(line_through(p[0], p[2]), line_through(p[1], p[3]));
    auto at = [&](double theta) {
        return conic_to_ellipse(std::cos(theta) * C1 + std::sin(theta) * C2);
    };
    constexpr int kSamples = 4096;
    ConicEllipse best;
    double best_theta = 0.0;
    for (int s = 0; s < kSamples; ++s) {
        const double theta = M_PI * s / kSamples;
        const ConicEllipse e = at(theta);
        if (e.valid && e.area < best.area) {
            best = e;
            best_theta = theta;
        }
    }
    if (!best.valid) return best;
    double lo = best_theta - M_PI / kSamples, hi = best_theta + M_PI / kSamples;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    auto area_at = [&](double t) {
        const ConicEllipse e = at(t);
        return e.valid ? e.area : std::numeric_limits<double>::infinity();
    };
    double a = lo, b = hi;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    for (int it = 0; it < 200; ++it) {
        if (area_at(c) < area_at(d))
            b = d;
        else
            a = c;
        c = b - gr * (b - a);
        d = a + gr * (b - a);
    }
    const ConicEllipse refined = at(0.5 * (a + b));
    return refined.valid && refined.area < best.area ? refined : best;
}

// Unique conic through five points, via the nullspace of the design matrix.
inline ConicEllipse conic_through_5(const std::array<Eigen::Vector2d, 5>& p) {
    Eigen::Matrix<double, 5, 6> A;
    for (int i = 0; i < 5; ++i) {
        const double x = p[i].x(), y = p[i].y();
        A.row(i) << x * x, x * y, y * y, x, y, 1.0;
    }
    const Eigen::JacobiSVD<Eigen::Matrix<double, 5, 6>> svd(A, Eigen::ComputeFullV);
    const Eigen::Matrix<double, 6, 1> c = svd.matrixV().col(5);
    Eigen::Matrix3d Q;
    Q << c(0), c(1) / 2, c(3) / 2, c(1) / 2, c(2), c(4) / 2, c(3) / 2, c(4) / 2, c(5);
    return conic_to_ellipse(Q);
}

// Exact-by-enumeration minimum-area enclosing ellipse for small point sets:
// the optimum is determined by 3 to 5 boundary supports.
inline ConicEllipse brute_force_mvee(const std::vector<Eigen::Vector2d>& pts) {
    const int n = static_cast<int>(pts.size());
    auto contains_all = [&](const ConicEllipse& e) {
        for (const auto& q : pts) {
            const Eigen::Vector2d d = q - e.center;
            if (d.dot(e.shape * d) > 1.0 + 1e-7) return false;
        }
        return true;
    };
    ConicEllipse best;
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
            for (int c = b + 1; c < n; ++c) {
                const ConicEllipse e = steiner_ellipse({pts[a], pts[b], pts[c]});
                if (e.valid && e.area < best.area && contains_all(e)) best = e;
                for (int d = c + 1; d < n; ++d) {
                    const ConicEllipse e4 = min_area_ellipse_4({pts[a], pts[b], pts[c], pts[d]});
                    if (e4.valid && e4.area < best.area && contains_all(e4)) best = e4;
                    for (int f = d + 1; f < n; ++f) {
                        const ConicEllipse e5 =
                            conic_through_5({pts[a], pts[b], pts[c], pts[d], pts[f]});
                        if (e5.valid && e5.area < best.area && contains_all(e5)) best = e5;
                    }
                }
            }
    return best;
}

// ------------------------------------------------------ Floyd-Warshall oracle

struct PairDiameter {
    int start = -1, target = -1, length = -1;
};

// Longest finite shortest path with ties resolved lexicographically by the
// (start, target) cells, mirroring the plan_graph contract.
inline PairDiameter floyd_warshall_diameter(const std::vector<driftplan::GridPos>& vertices,
                                            const std::vector<std::pair<int, int>>& edges) {
    const int n = static_cast<int>(vertices.size());
    constexpr int kInf = 1 << 28;
    std::vector<std::vector<int>> dist(n, std::vector<int>(n, kInf));
    for (int i = 0; i < n; ++i) dist[i][i] = 0;
    for (const auto& [a, b] : edges) dist[a][b] = std::min(dist[a][b], 1);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (dist[i][k] + dist[k][j] < dist[i][j]) dist[i][j] = dist[i][k] + dist[k][j];
    PairDiameter best;
    for (int s = 0; s < n; ++s)
        for (int t = 0; t < n; ++t) {
            if (dist[s][t] >= kInf) continue;
            bool better = best.start < 0 || dist[s][t] > best.length;
            if (!better && dist[s][t] == best.length) {
                better = vertices[s] < vertices[best.start] ||
                         (vertices[s] == vertices[best.start] && vertices[t] < vertices[best.target]);
            }
            if (better) best = {s, t, dist[s][t]};
        }
    return best;
}

// ------------------------------------------------------------------ QP oracle

// Accelerated projected-gradient ascent on the 2n-variable epsilon-SVR dual:
// gamma in [0, C]^{2n}, sum_a s_a gamma_a = 0. Returns the maximized dual
// objective. Projection onto box-and-hyperplane via bisection on the
// multiplier.
inline double qp_svr_dual(const Eigen::MatrixXd& K, const std::vector<double>& y, double C,
                          double epsilon, int iters = 120000) {
    const int n = static_cast<int>(y.size());
    const int N = 2 * n;
    Eigen::VectorXd s(N), p(N);
    for (int a = 0; a < N; ++a) {
        s[a] = a < n ? 1.0 : -1.0;
        p[a] = a < n ? epsilon - y[a] : epsilon + y[a - n];
    }
    auto grad = [&](const Eigen::VectorXd& g) {
        // gradient of the minimization objective 0.5 g'Qg + p'g with
        // Q_ab = s_a s_b K(pa, pb)
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(n);
        for (int a = 0; a < N; ++a) beta[a < n ? a : a - n] += s[a] * g[a];
        const Eigen::VectorXd kb = K * beta;
        Eigen::VectorXd out(N);
        for (int a = 0; a < N; ++a) out[a] = s[a] * kb[a < n ? a : a - n] + p[a];
        return out;
    };
    auto objective = [&](const Eigen::VectorXd& g) {
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(n);
        for (int a = 0; a < N; ++a) beta[a < n ? a : a - n] += s[a] * g[a];
        const double quad = beta.dot(K * beta);
        double lin = 0.0, l1 = 0.0;
        for (int i = 0; i < n; ++i) lin += y[i] * beta[i];
        for (int a = 0; a < N; ++a) l1 += g[a];
        return -0.5 * quad + lin - epsilon * l1;  // maximization form
    };
    auto project = [&](Eigen::VectorXd v) {
        // find lambda with sum_a s_a clip(v_a - lambda s_a) = 0
        double lo = -1e6, hi = 1e6;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            double sum = 0.0;
            for (int a = 0; a < N; ++a)
                sum += s[a] * std::clamp(v[a] - mid * s[a], 0.0, C);
            if (sum > 0)
                lo = mid;
            else
                hi = mid;
        }
        const double lambda = 0.5 * (lo + hi);
        for (int a = 0; a < N; ++a) v[a] = std::clamp(v[a] - lambda * s[a], 0.0, C);
        return v;
    };

    // Lipschitz bound: 2 * lambda_max(K) <= 2 * n (unit diagonal RBF)
    double L = 2.0 * n;
    const double step = 1.0 / L;
    Eigen::VectorXd x = project(Eigen::VectorXd::Zero(N));
    Eigen::VectorXd z = x;
    double t = 1.0;
    double fx = objective(x);
    for (int it = 0; it < iters; ++it) {
        const Eigen::VectorXd g = grad(z);
        Eigen::VectorXd xn = project(z - step * g);
        const double fn = objective(xn);
        if (fn < fx) {  // restart momentum when the objective decreases
            z = x;
            t = 1.0;
            continue;
        }
        const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        z = xn + ((t - 1.0) / tn) * (xn - x);
        x = std::move(xn);
        fx = fn;
        t = tn;
    }
    return fx;
}

// --------------------------------------------- coverage-objective brute force

// Re-derives the transition from the raw field and simulates visited sets with
// std::set, then forms the same objective expression.
inline double brute_force_coverage(const driftplan::VelocityField& field,
                                   const std::vector<driftplan::GridPos>& positions, int horizon) {
    using driftplan::GridPos;
    auto step = [&](GridPos p) {
        if (!field.water(p)) return p;
        const double uu = field.u(p.i, p.j), vv = field.v(p.i, p.j);
        const double sp = std::hypot(uu, vv);
        if (sp == 0.0) return p;
        GridPos q{p.i + static_cast<int>(std::round(vv / sp)),
                  p.j + static_cast<int>(std::round(uu / sp))};
        if (!field.in_bounds(q) || !field.water(q)) return p;
        return q;
    };
    std::set<std::pair<int, int>> unions;
    long long total_len = 0;
    for (const GridPos& start : positions) {
        std::set<std::pair<int, int>> visited{{start.i, start.j}};
        GridPos cur = start;
        for (int k = 0; k < horizon; ++k) {
            const GridPos nxt = step(cur);
            if (visited.count({nxt.i, nxt.j})) break;
            visited.insert({nxt.i, nxt.j});
            cur = nxt;
        }
        total_len += static_cast<long long>(visited.size());
        unions.insert(visited.begin(), visited.end());
    }
    const int si = field.rows() / 2, sj = field.cols() / 2;
    std::array<long long, 4> count{0, 0, 0, 0};
    for (const auto& [i, j] : unions) ++count[(i >= si ? 2 : 0) + (j >= sj ? 1 : 0)];
    double numer = 0.0;
    for (int q = 0; q < 4; ++q)
        if (count[q] > 0) numer += std::log(static_cast<double>(count[q]));
    return numer / static_cast<double>(total_len);
}

// ----------------------------------- exhaustive tiny sets-clustering optimum

// Enumerates every (labeling, active member) combination, forms the implied
// centers as (weighted) means, and evaluates the supplied cost; the optimum of
// the sets-clustering problem appears among these candidates.
template <typename SetDistanceFn>
inline double exhaustive_sets_optimum(const std::vector<std::array<Eigen::Vector4d, 3>>& sets,
                                      int k, SetDistanceFn&& cost_of_centers,
                                      std::vector<Eigen::Vector4d>* best_centers = nullptr,
                                      const std::vector<double>& weights = {}) {
    const int n = static_cast<int>(sets.size());
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> label(n), member(n);
    long long n_label = 1, n_member = 1;
    for (int i = 0; i < n; ++i) {
        n_label *= k;
        n_member *= 3;
    }
    for (long long L = 0; L < n_label; ++L) {
        long long l = L;
        for (int i = 0; i < n; ++i) {
            label[i] = static_cast<int>(l % k);
            l /= k;
        }
        for (long long M = 0; M < n_member; ++M) {
            long long m = M;
            for (int i = 0; i < n; ++i) {
                member[i] = static_cast<int>(m % 3);
                m /= 3;
            }
            std::vector<Eigen::Vector4d> centers(k, Eigen::Vector4d::Zero());
            std::vector<double> wsum(k, 0.0);
            for (int i = 0; i < n; ++i) {
                const double w = weights.empty() ? 1.0 : weights[i];
                centers[label[i]] += w * sets[i][member[i]];
                wsum[label[i]] += w;
            }
            bool ok = true;
            for (int c = 0; c < k; ++c) {
                if (wsum[c] <= 0.0) {
                    ok = false;
                    break;
                }
                centers[c] /= wsum[c];
            }
            if (!ok) continue;
            const double cost = cost_of_centers(centers);
            if (cost < best) {
                best = cost;
                if (best_centers) *best_centers = centers;
            }
        }
    }
    return best;
}

// ------------------------------------ exhaustive disjoint path-set selection

// Lexicographically largest sorted length sequence over all vertex-disjoint
// subsets of at most K candidates; equals what longest-first greedy selects.
inline std::vector<int> exhaustive_disjoint_paths(
    const std::vector<std::vector<int>>& path_vertices, const std::vector<int>& lengths, int K) {
    const int n = static_cast<int>(path_vertices.size());
    std::vector<int> best;
    std::vector<int> best_lens;
    std::vector<int> chosen;
    auto disjoint = [&](int cand) {
        std::set<int> used;
        for (const int c : chosen)
            for (const int v : path_vertices[c]) used.insert(v);
        for (const int v : path_vertices[cand])
            if (used.count(v)) return false;
        return true;
    };
    auto consider = [&]() {
        std::vector<int> lens;
        for (const int c : chosen) lens.push_back(lengths[c]);
        std::sort(lens.rbegin(), lens.rend());
        if (lens > best_lens || (lens == best_lens && chosen < best)) {
            best_lens = lens;
            best = chosen;
        }
    };
    std::function<void(int)> rec = [&](int from) {
        consider();
        if (static_cast<int>(chosen.size()) == K) return;
        for (int c = from; c < n; ++c) {
            if (!disjoint(c)) continue;
            chosen.push_back(c);
            rec(c + 1);
            chosen.pop_back();
        }
    };
    rec(0);
    return best;
}

}  // namespace oracles
