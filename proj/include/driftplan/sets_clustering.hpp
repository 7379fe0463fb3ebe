#pragma once

// Sets clustering over triplet features: triplet construction with norm
// balancing, sensitivity-sampled coresets, and a Lloyd-style k-means variant
// whose distance is the min over (member, center) pairs.

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "driftplan/flowfield.hpp"
#include "driftplan/random.hpp"
#include "driftplan/segmentation.hpp"

namespace driftplan {

struct FeaturePoint {
    Eigen::Vector2d coords = Eigen::Vector2d::Zero();       // grid units
    Eigen::Vector2d vel_feature = Eigen::Vector2d::Zero();  // velocity rescaled to ||coords||
    Eigen::Vector4d combined() const {
        Eigen::Vector4d c;
        c << coords, vel_feature;
        return c;
    }
};

// Velocity rescaled so its norm equals the norm of the coordinates; zero
// velocity maps to the zero vector.
inline FeaturePoint make_feature_point(const Eigen::Vector2d& coords, const Eigen::Vector2d& vel) {
    FeaturePoint fp;
    fp.coords = coords;
    const double s = vel.norm();
    if (s > 0.0) fp.vel_feature = vel * (coords.norm() / s);
    return fp;
}

struct TripletSet {
    std::array<FeaturePoint, 3> points;
    int source_segment = -1;
    std::array<GridPos, 3> origin_cells{};
};

using Centers = std::vector<Eigen::Vector4d>;

struct WeightedFamily {
    std::vector<TripletSet> sets;
    std::vector<double> weights;
};

// D(P, C): exact min over the <= 3k (member, center) pairs of squared
// Euclidean distance in 4-space.
inline double set_distance(const TripletSet& P, const Centers& C) {
    double best = std::numeric_limits<double>::infinity();
    for (const FeaturePoint& p : P.points) {
        const Eigen::Vector4d q = p.combined();
        for (const Eigen::Vector4d& x : C) best = std::min(best, (q - x).squaredNorm());
    }
    return best;
}

struct SetAssignment {
    int center = 0;
    int member = 0;
    double dist2 = 0.0;
};

inline SetAssignment assign_set(const TripletSet& P, const Centers& C) {
    SetAssignment a;
    a.dist2 = std::numeric_limits<double>::infinity();
    for (int m = 0; m < 3; ++m) {
        const Eigen::Vector4d q = P.points[m].combined();
        for (int c = 0; c < static_cast<int>(C.size()); ++c) {
            const double d = (q - C[c]).squaredNorm();
            if (d < a.dist2) {
                a.dist2 = d;
                a.center = c;
                a.member = m;
            }
        }
    }
    return a;
}

inline double family_cost(const std::vector<TripletSet>& sets, const Centers& C) {
    double s = 0.0;
    for (const TripletSet& P : sets) s += set_distance(P, C);
    return s;
}

inline double weighted_cost(const WeightedFamily& fam, const Centers& C) {
    double s = 0.0;
    for (std::size_t i = 0; i < fam.sets.size(); ++i) s += fam.weights[i] * set_distance(fam.sets[i], C);
    return s;
}

// Per segment, every representative cell spawns one triplet: itself plus its
// two nearest representative neighbors by cell-center distance. Segments with
// fewer than three representatives are padded with jittered duplicates so the
// members stay distinct.
inline std::vector<TripletSet> build_triplets(const VelocityField& field,
                                              const std::vector<Segment>& segments) {
    if (segments.empty()) throw std::invalid_argument("build_triplets: empty segment list");
    std::vector<TripletSet> out;
    for (const Segment& seg : segments) {
        struct Member {
            Eigen::Vector2d coords;
            Eigen::Vector2d vel;
            GridPos cell;
            bool padded;
        };
        std::vector<Member> members;
        for (const GridPos& r : seg.representatives)
            members.push_back({field.center_grid(r), field.velocity(r), r, false});
        const std::size_t real = members.size();
        int pad = 0;
        while (members.size() < 3) {
            const Member& src = members[pad % real];
            Member dup = src;
            dup.coords += Eigen::Vector2d::Constant(1e-6 * (1 + pad));
            dup.padded = true;
            members.push_back(dup);
            ++pad;
        }

        for (std::size_t a = 0; a < real; ++a) {
            // two nearest neighbors among the other members, ties by index
            int n1 = -1, n2 = -1;
            double d1 = std::numeric_limits<double>::infinity();
            double d2 = std::numeric_limits<double>::infinity();
            for (std::size_t b = 0; b < members.size(); ++b) {
                if (b == a) continue;
                const double d = (members[b].coords - members[a].coords).squaredNorm();
                if (d < d1) {
                    d2 = d1;
                    n2 = n1;
                    d1 = d;
                    n1 = static_cast<int>(b);
                } else if (d < d2) {
                    d2 = d;
                    n2 = static_cast<int>(b);
                }
            }
            TripletSet t;
            t.source_segment = seg.id;
            const std::array<std::size_t, 3> pick{a, static_cast<std::size_t>(n1),
                                                  static_cast<std::size_t>(n2)};
            for (int m = 0; m < 3; ++m) {
                const Member& mem = members[pick[m]];
                t.points[m] = make_feature_point(mem.coords, mem.vel);
                t.origin_cells[m] = mem.cell;
            }
            out.push_back(std::move(t));
        }
    }
    return out;
}

namespace detail {

inline Eigen::Vector4d set_centroid(const TripletSet& P) {
    Eigen::Vector4d c = Eigen::Vector4d::Zero();
    for (const FeaturePoint& p : P.points) c += p.combined();
    return c / 3.0;
}

// k-means++ seeding over arbitrary weighted points.
inline Centers kmeanspp_seed(const std::vector<Eigen::Vector4d>& pts,
                             const std::vector<double>& w, int k, std::mt19937_64& eng) {
    Centers centers;
    std::vector<double> cum(pts.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        acc += w[i];
        cum[i] = acc;
    }
    centers.push_back(pts[discrete_draw(cum, eng)]);
    std::vector<double> mind(pts.size(), std::numeric_limits<double>::infinity());
    while (static_cast<int>(centers.size()) < k) {
        acc = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            mind[i] = std::min(mind[i], (pts[i] - centers.back()).squaredNorm());
            acc += w[i] * mind[i];
            cum[i] = acc;
        }
        if (acc <= 0.0) {
            // all remaining mass sits on existing centers; reuse the first point
            centers.push_back(pts[0]);
            continue;
        }
        centers.push_back(pts[discrete_draw(cum, eng)]);
    }
    return centers;
}

inline std::vector<std::array<double, 12>> canonical_keys(const std::vector<TripletSet>& sets) {
    std::vector<std::array<double, 12>> keys;
    keys.reserve(sets.size());
    for (const TripletSet& s : sets) {
        std::array<std::array<double, 4>, 3> m;
        for (int i = 0; i < 3; ++i) {
            const Eigen::Vector4d c = s.points[i].combined();
            m[i] = {c[0], c[1], c[2], c[3]};
        }
        std::sort(m.begin(), m.end());
        std::array<double, 12> key;
        for (int i = 0; i < 3; ++i)
            for (int d = 0; d < 4; ++d) key[i * 4 + d] = m[i][d];
        keys.push_back(key);
    }
    return keys;
}

inline std::size_t count_distinct_sets(const std::vector<TripletSet>& sets) {
    auto keys = canonical_keys(sets);
    std::sort(keys.begin(), keys.end());
    return static_cast<std::size_t>(std::unique(keys.begin(), keys.end()) - keys.begin());
}

}  // namespace detail

// Sensitivity-sampled coreset: score each set by its share of the cost against
// a k-means++ bicriteria reference over set centroids, mix with the uniform
// term, and draw mu sets i.i.d. with weights 1/(mu * prob).
inline WeightedFamily build_coreset(const std::vector<TripletSet>& family, std::size_t mu, int k,
                                    double eps, std::uint64_t seed) {
    if (family.empty()) throw std::invalid_argument("build_coreset: empty family");
    if (mu == 0 || mu > family.size())
        throw std::invalid_argument("build_coreset: mu must be in [1, |family|]");
    if (k < 1) throw std::invalid_argument("build_coreset: k must be >= 1");
    if (!(eps > 0.0)) throw std::invalid_argument("build_coreset: eps must be positive");

    const std::size_t n = family.size();
    auto eng = make_engine(seed, 0xC03E5E7ULL);

    std::vector<Eigen::Vector4d> centroids;
    centroids.reserve(n);
    for (const TripletSet& P : family) centroids.push_back(detail::set_centroid(P));
    const std::vector<double> unit(n, 1.0);
    const Centers bicriteria =
        detail::kmeanspp_seed(centroids, unit, std::min<std::size_t>(k, n), eng);

    std::vector<double> dist(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        dist[i] = set_distance(family[i], bicriteria);
        total += dist[i];
    }
    std::vector<double> prob(n);
    double psum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double sens = (total > 0.0 ? dist[i] / total : 0.0) + 1.0 / static_cast<double>(n);
        prob[i] = sens;
        psum += sens;
    }
    std::vector<double> cum(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        prob[i] /= psum;
        acc += prob[i];
        cum[i] = acc;
    }

    WeightedFamily out;
    out.sets.reserve(mu);
    out.weights.reserve(mu);
    for (std::size_t s = 0; s < mu; ++s) {
        const std::size_t pick = discrete_draw(cum, eng);
        out.sets.push_back(family[pick]);
        out.weights.push_back(1.0 / (static_cast<double>(mu) * prob[pick]));
    }
    return out;
}

struct KmeansSetsResult {
    Centers centers;
    std::vector<int> assignment;  // per input set
    double cost = 0.0;
    int iterations = 0;
    bool converged = false;
};

namespace detail {

// One Lloyd run from a given seeding. Centers update to the weighted mean of
// the achieving member points, so the weighted cost never increases.
inline KmeansSetsResult lloyd_run(const WeightedFamily& fam, Centers centers, int max_iters) {
    const int k = static_cast<int>(centers.size());
    const std::size_t n = fam.sets.size();
    KmeansSetsResult res;
    std::vector<SetAssignment> assign(n);

    auto assign_all = [&]() {
        double cost = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            assign[i] = assign_set(fam.sets[i], centers);
            cost += fam.weights[i] * assign[i].dist2;
        }
        return cost;
    };
    auto fix_empty = [&]() {
        for (int rounds = 0; rounds < k; ++rounds) {
            std::vector<char> used(k, 0);
            for (const auto& a : assign) used[a.center] = 1;
            int empty = -1;
            for (int c = 0; c < k; ++c)
                if (!used[c]) {
                    empty = c;
                    break;
                }
            if (empty < 0) return;
            // re-seed on the set with max D: its member farthest from the centers
            std::size_t worst = 0;
            double worstd = -1.0;
            for (std::size_t i = 0; i < n; ++i)
                if (assign[i].dist2 > worstd) {
                    worstd = assign[i].dist2;
                    worst = i;
                }
            int member = 0;
            double far = -1.0;
            for (int m = 0; m < 3; ++m) {
                const Eigen::Vector4d q = fam.sets[worst].points[m].combined();
                double nearest = std::numeric_limits<double>::infinity();
                for (const auto& c : centers) nearest = std::min(nearest, (q - c).squaredNorm());
                if (nearest > far) {
                    far = nearest;
                    member = m;
                }
            }
            centers[empty] = fam.sets[worst].points[member].combined();
            assign_all();
        }
    };

    double cost = assign_all();
    fix_empty();
    cost = assign_all();
    for (int it = 0; it < max_iters; ++it) {
        res.iterations = it + 1;
        std::vector<Eigen::Vector4d> sum(k, Eigen::Vector4d::Zero());
        std::vector<double> wsum(k, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            sum[assign[i].center] += fam.weights[i] * fam.sets[i].points[assign[i].member].combined();
            wsum[assign[i].center] += fam.weights[i];
        }
        double shift = 0.0;
        for (int c = 0; c < k; ++c) {
            if (wsum[c] <= 0.0) continue;
            const Eigen::Vector4d next = sum[c] / wsum[c];
            shift = std::max(shift, (next - centers[c]).norm());
            centers[c] = next;
        }
        const double next_cost = assign_all();
        assert(next_cost <= cost + 1e-9 * std::max(1.0, cost));
        cost = next_cost;
        fix_empty();
        cost = assign_all();
        if (shift < 1e-9) {
            res.converged = true;
            break;
        }
    }
    res.centers = std::move(centers);
    res.cost = cost;
    res.assignment.resize(n);
    for (std::size_t i = 0; i < n; ++i) res.assignment[i] = assign[i].center;
    return res;
}

}  // namespace detail

// Best of `restarts` k-means++-seeded Lloyd runs by weighted cost; ties go to
// the earlier restart.
inline KmeansSetsResult kmeans_sets(const WeightedFamily& family, int k, int max_iters,
                                    int restarts, std::uint64_t seed) {
    if (family.sets.empty()) throw std::invalid_argument("kmeans_sets: empty family");
    if (family.sets.size() != family.weights.size())
        throw std::invalid_argument("kmeans_sets: weights/sets size mismatch");
    if (k < 1) throw std::invalid_argument("kmeans_sets: k must be >= 1");
    if (static_cast<std::size_t>(k) > detail::count_distinct_sets(family.sets))
        throw std::invalid_argument("kmeans_sets: k exceeds the number of distinct sets");

    // seeding pool: all member points, weighted by their set weight
    std::vector<Eigen::Vector4d> pool;
    std::vector<double> pool_w;
    pool.reserve(family.sets.size() * 3);
    for (std::size_t i = 0; i < family.sets.size(); ++i)
        for (const FeaturePoint& p : family.sets[i].points) {
            pool.push_back(p.combined());
            pool_w.push_back(family.weights[i]);
        }

    KmeansSetsResult best;
    best.cost = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        auto eng = make_engine(seed, 0xB00 + static_cast<std::uint64_t>(r));
        Centers init = detail::kmeanspp_seed(pool, pool_w, k, eng);
        KmeansSetsResult run = detail::lloyd_run(family, std::move(init), max_iters);
        if (run.cost < best.cost) best = std::move(run);
    }
    return best;
}

struct Cluster {
    int id = 0;
    std::vector<GridPos> cells;
    std::vector<Eigen::Vector2d> velocities;
    Eigen::Vector4d center = Eigen::Vector4d::Zero();
};

struct ClusterMapResult {
    std::vector<Cluster> clusters;
    std::vector<int> labels;  // per cell, row-major; -1 = land
    Centers centers;
};

// Full pipeline: triplets -> coreset -> k-means on the coreset -> final
// assignment of every triplet. Each representative cell takes the label of the
// triplet it spawned; remaining water cells take the nearest labeled cell.
inline ClusterMapResult cluster_map(const VelocityField& field,
                                    const std::vector<Segment>& segments, int k, std::size_t mu,
                                    double eps, std::uint64_t seed) {
    if (k < 1) throw std::invalid_argument("cluster_map: k must be >= 1");
    const auto triplets = build_triplets(field, segments);
    const std::size_t mu_eff = std::min(mu, triplets.size());
    WeightedFamily coreset = build_coreset(triplets, mu_eff, k, eps, derive_seed(seed, 21));
    if (detail::count_distinct_sets(coreset.sets) < static_cast<std::size_t>(k)) {
        // coreset collapsed below k distinct sets; cluster the full family
        coreset.sets = triplets;
        coreset.weights.assign(triplets.size(), 1.0);
    }
    const KmeansSetsResult km = kmeans_sets(coreset, k, 100, 3, derive_seed(seed, 22));

    ClusterMapResult out;
    out.centers = km.centers;
    out.labels.assign(static_cast<std::size_t>(field.rows()) * field.cols(), -1);

    for (const TripletSet& t : triplets) {
        const SetAssignment a = assign_set(t, km.centers);
        const GridPos spawn = t.origin_cells[0];
        out.labels[field.idx(spawn.i, spawn.j)] = a.center;
    }

    // nearest labeled cell for uncovered water, ties to the earlier cell in
    // row-major order
    std::vector<GridPos> labeled;
    for (int i = 0; i < field.rows(); ++i)
        for (int j = 0; j < field.cols(); ++j)
            if (out.labels[field.idx(i, j)] >= 0) labeled.push_back({i, j});
    if (labeled.empty()) throw std::runtime_error("cluster_map: no labeled cells");
    std::vector<int> fill = out.labels;
    for (int i = 0; i < field.rows(); ++i) {
        for (int j = 0; j < field.cols(); ++j) {
            if (!field.water(i, j) || out.labels[field.idx(i, j)] >= 0) continue;
            double bestd = std::numeric_limits<double>::infinity();
            int bestlab = -1;
            for (const GridPos& q : labeled) {
                const double d =
                    static_cast<double>((q.i - i)) * (q.i - i) + static_cast<double>((q.j - j)) * (q.j - j);
                if (d < bestd) {
                    bestd = d;
                    bestlab = out.labels[field.idx(q.i, q.j)];
                }
            }
            fill[field.idx(i, j)] = bestlab;
        }
    }
    out.labels = std::move(fill);

    out.clusters.resize(k);
    for (int c = 0; c < k; ++c) {
        out.clusters[c].id = c;
        out.clusters[c].center = km.centers[c];
    }
    for (int i = 0; i < field.rows(); ++i)
        for (int j = 0; j < field.cols(); ++j) {
            const int lab = out.labels[field.idx(i, j)];
            if (lab < 0) continue;
            out.clusters[lab].cells.push_back({i, j});
            out.clusters[lab].velocities.push_back(field.velocity(i, j));
        }
    return out;
}

inline nlohmann::json clustering_to_json(const ClusterMapResult& res, int rows, int cols) {
    nlohmann::json centers = nlohmann::json::array();
    for (const auto& c : res.centers) centers.push_back({c[0], c[1], c[2], c[3]});
    nlohmann::json labels = nlohmann::json::array();
    for (int i = 0; i < rows; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < cols; ++j) row.push_back(res.labels[static_cast<std::size_t>(i) * cols + j]);
        labels.push_back(std::move(row));
    }
    return {{"k", res.centers.size()}, {"centers", std::move(centers)}, {"labels", std::move(labels)}};
}

}  // namespace driftplan
