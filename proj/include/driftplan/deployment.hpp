#pragma once

// Deployment planning: the quadrant-coverage objective, per-cluster flow
// graphs, and the heuristic / graph / inter-graph / uniform strategies.

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "driftplan/flowfield.hpp"
#include "driftplan/random.hpp"
#include "driftplan/sets_clustering.hpp"

namespace driftplan {

enum class Strategy { heuristic, graph, inter_graph, uniform };

inline std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::heuristic: return "heuristic";
        case Strategy::graph: return "graph";
        case Strategy::inter_graph: return "inter_graph";
        case Strategy::uniform: return "uniform";
    }
    return "?";
}

inline Strategy strategy_from_string(const std::string& s) {
    if (s == "heuristic") return Strategy::heuristic;
    if (s == "graph") return Strategy::graph;
    if (s == "inter_graph") return Strategy::inter_graph;
    if (s == "uniform") return Strategy::uniform;
    throw std::invalid_argument("unknown strategy: " + s);
}

struct DeploymentPlan {
    Strategy strategy = Strategy::uniform;
    std::vector<GridPos> positions;
    std::vector<std::vector<GridPos>> predicted_paths;
    double objective = 0.0;
    std::uint64_t seed = 0;
};

// Discrete state space over the water cells with the one-cell transition
// following each cell's unit-normalized velocity. Off-map, land, and
// zero-speed targets self-loop, so the transition is total.
class StateSpace {
public:
    explicit StateSpace(const VelocityField& field)
        : rows_(field.rows()), cols_(field.cols()),
          next_(static_cast<std::size_t>(rows_) * cols_),
          water_(field.mask_data()) {
        for (int i = 0; i < rows_; ++i)
            for (int j = 0; j < cols_; ++j) {
                const std::size_t n = idx(i, j);
                next_[n] = n;
                if (!field.water(i, j)) continue;
                const GridPos q = follow_velocity(field, {i, j});
                if (field.in_bounds(q) && field.water(q)) next_[n] = idx(q.i, q.j);
            }
        split_i_ = rows_ / 2;
        split_j_ = cols_ / 2;
    }

    // One unit step along the cell's velocity, rounded half away from zero per
    // coordinate. Returns the source itself for zero speed.
    static GridPos follow_velocity(const VelocityField& field, GridPos p) {
        const Eigen::Vector2d vel = field.velocity(p);
        const double s = vel.norm();
        if (s == 0.0) return p;
        return {p.i + static_cast<int>(std::round(vel.y() / s)),
                p.j + static_cast<int>(std::round(vel.x() / s))};
    }

    std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * cols_ + j; }
    GridPos pos(std::size_t n) const {
        return {static_cast<int>(n / cols_), static_cast<int>(n % cols_)};
    }
    GridPos phi(GridPos p) const { return pos(next_[idx(p.i, p.j)]); }
    bool water(GridPos p) const { return water_[idx(p.i, p.j)] != 0; }
    int rows() const { return rows_; }
    int cols() const { return cols_; }

    // quadrant split at (floor(M/2), floor(N/2))
    int quadrant(GridPos p) const { return (p.i >= split_i_ ? 2 : 0) + (p.j >= split_j_ ? 1 : 0); }

    // Visited states in order, iterating phi until revisit or horizon steps.
    std::vector<GridPos> walk(GridPos start, int horizon) const {
        std::vector<GridPos> path{start};
        std::vector<std::uint8_t> seen(next_.size(), 0);
        seen[idx(start.i, start.j)] = 1;
        GridPos cur = start;
        for (int step = 0; step < horizon; ++step) {
            const GridPos nxt = phi(cur);
            if (seen[idx(nxt.i, nxt.j)]) break;
            seen[idx(nxt.i, nxt.j)] = 1;
            path.push_back(nxt);
            cur = nxt;
        }
        return path;
    }

private:
    int rows_, cols_;
    std::vector<std::size_t> next_;
    std::vector<std::uint8_t> water_;
    int split_i_, split_j_;
};

struct CoverageObjective {
    double value = 0.0;
    std::array<bool, 4> quadrant_uncovered{true, true, true, true};
};

// sum_j log |union of visited states ∩ S_j| / sum_x path length. An unvisited
// quadrant contributes log(1) = 0 and raises its uncovered flag.
inline CoverageObjective evaluate_coverage_objective(const StateSpace& space,
                                                     const std::vector<GridPos>& positions,
                                                     int horizon) {
    if (positions.empty())
        throw std::invalid_argument("evaluate_coverage_objective: empty positions");
    if (horizon < 1) throw std::invalid_argument("evaluate_coverage_objective: horizon must be >= 1");
    std::vector<std::uint8_t> visited(static_cast<std::size_t>(space.rows()) * space.cols(), 0);
    long long total_len = 0;
    for (const GridPos& p : positions) {
        const auto path = space.walk(p, horizon);
        total_len += static_cast<long long>(path.size());
        for (const GridPos& q : path) visited[space.idx(q.i, q.j)] = 1;
    }
    std::array<long long, 4> count{0, 0, 0, 0};
    for (int i = 0; i < space.rows(); ++i)
        for (int j = 0; j < space.cols(); ++j)
            if (visited[space.idx(i, j)]) ++count[space.quadrant({i, j})];
    CoverageObjective obj;
    double numer = 0.0;
    for (int q = 0; q < 4; ++q) {
        if (count[q] > 0) {
            obj.quadrant_uncovered[q] = false;
            numer += std::log(static_cast<double>(count[q]));
        }
    }
    obj.value = numer / static_cast<double>(total_len);
    return obj;
}

// Heading shared by the largest share of the cluster's velocity vectors:
// 16 sectors of 22.5 degrees, then the normalized mean of the vectors within
// cos(22.5 deg) of the winning sector's bisector.
inline Eigen::Vector2d dominating_direction(const Cluster& cluster) {
    constexpr int kSectors = 16;
    constexpr double kSector = 2.0 * M_PI / kSectors;
    std::array<int, kSectors> count{};
    bool any = false;
    for (const auto& vel : cluster.velocities) {
        if (vel.norm() == 0.0) continue;
        any = true;
        double ang = std::atan2(vel.y(), vel.x());
        if (ang < 0) ang += 2.0 * M_PI;
        int s = std::min(kSectors - 1, static_cast<int>(ang / kSector));
        ++count[s];
    }
    if (!any) throw std::invalid_argument("dominating_direction: all velocities are zero");
    int best = 0;
    for (int s = 1; s < kSectors; ++s)
        if (count[s] > count[best]) best = s;  // tie keeps the smaller angle
    const double bis = (best + 0.5) * kSector;
    const Eigen::Vector2d bisector(std::cos(bis), std::sin(bis));
    const double cos_half = std::cos(kSector / 2.0);
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const auto& vel : cluster.velocities) {
        const double s = vel.norm();
        if (s == 0.0) continue;
        if (vel.dot(bisector) / s >= cos_half - 1e-12) mean += vel;
    }
    if (mean.norm() == 0.0) return bisector;
    return mean.normalized();
}

// One floater per cluster at the member cell farthest along the negative of
// the dominating direction (ties to the lexicographically smaller cell).
inline DeploymentPlan plan_heuristic(const VelocityField& field,
                                     const std::vector<Cluster>& clusters, int K, int horizon,
                                     std::uint64_t seed = 0) {
    if (static_cast<int>(clusters.size()) != K)
        throw std::invalid_argument("plan_heuristic: number of clusters must equal K");
    const StateSpace space(field);
    DeploymentPlan plan;
    plan.strategy = Strategy::heuristic;
    plan.seed = seed;
    for (const Cluster& c : clusters) {
        if (c.cells.empty()) throw std::invalid_argument("plan_heuristic: empty cluster");
        const Eigen::Vector2d dir = -dominating_direction(c);
        GridPos best = c.cells[0];
        double best_proj = -std::numeric_limits<double>::infinity();
        for (const GridPos& p : c.cells) {
            const double proj = field.center_grid(p).dot(dir);
            if (proj > best_proj || (proj == best_proj && p < best)) {
                best_proj = proj;
                best = p;
            }
        }
        plan.positions.push_back(best);
        plan.predicted_paths.push_back(space.walk(best, horizon));
    }
    plan.objective = evaluate_coverage_objective(space, plan.positions, horizon).value;
    return plan;
}

struct FlowGraph {
    int cluster_id = 0;
    std::vector<GridPos> vertices;                 // sorted row-major
    std::vector<std::pair<int, int>> edges;        // directed vertex-index pairs
    std::vector<std::vector<int>> adjacency;       // out-neighbors per vertex
    std::vector<int> in_degree;

    int vertex_index(GridPos p) const {
        const auto it = std::lower_bound(vertices.begin(), vertices.end(), p);
        if (it == vertices.end() || !(*it == p)) return -1;
        return static_cast<int>(it - vertices.begin());
    }
};

// Vertex per member cell; edge p -> q iff q = p + round(v(p)/|v(p)|) lies in
// the same cluster and within unit Euclidean distance of p (so only 4-neighbor
// moves qualify; diagonal roundings produce no edge).
inline FlowGraph build_cluster_graph(const VelocityField& field, const Cluster& cluster) {
    if (cluster.cells.empty()) throw std::invalid_argument("build_cluster_graph: empty cluster");
    FlowGraph g;
    g.cluster_id = cluster.id;
    g.vertices = cluster.cells;
    std::sort(g.vertices.begin(), g.vertices.end());
    g.adjacency.assign(g.vertices.size(), {});
    g.in_degree.assign(g.vertices.size(), 0);
    for (int vi = 0; vi < static_cast<int>(g.vertices.size()); ++vi) {
        const GridPos p = g.vertices[vi];
        if (field.speed(p) == 0.0) continue;
        const GridPos q = StateSpace::follow_velocity(field, p);
        const long long d2 = static_cast<long long>(q.i - p.i) * (q.i - p.i) +
                             static_cast<long long>(q.j - p.j) * (q.j - p.j);
        if (d2 > 1) continue;
        const int qi = g.vertex_index(q);
        if (qi < 0) continue;
        g.edges.push_back({vi, qi});
        g.adjacency[vi].push_back(qi);
        ++g.in_degree[qi];
    }
    return g;
}

namespace detail {

struct BfsDiameter {
    int start = 0;
    int target = 0;
    int length = 0;  // edges
    std::vector<int> path;  // vertex indices, start..target
};

inline std::vector<int> bfs_dist(const FlowGraph& g, int s, std::vector<int>& parent) {
    std::vector<int> dist(g.vertices.size(), -1);
    parent.assign(g.vertices.size(), -1);
    std::deque<int> q{s};
    dist[s] = 0;
    while (!q.empty()) {
        const int v = q.front();
        q.pop_front();
        for (const int w : g.adjacency[v]) {
            if (dist[w] >= 0) continue;
            dist[w] = dist[v] + 1;
            parent[w] = v;
            q.push_back(w);
        }
    }
    return dist;
}

// Longest of the finite shortest paths over all ordered vertex pairs; ties
// resolve to the lexicographically smallest (start, target) cell pair.
inline BfsDiameter longest_shortest_path(const FlowGraph& g) {
    BfsDiameter best;
    best.length = -1;
    std::vector<int> parent;
    for (int s = 0; s < static_cast<int>(g.vertices.size()); ++s) {
        const auto dist = bfs_dist(g, s, parent);
        for (int t = 0; t < static_cast<int>(g.vertices.size()); ++t) {
            if (dist[t] < 0) continue;
            const bool better =
                dist[t] > best.length ||
                (dist[t] == best.length &&
                 (g.vertices[s] < g.vertices[best.start] ||
                  (g.vertices[s] == g.vertices[best.start] && g.vertices[t] < g.vertices[best.target])));
            if (!better) continue;
            best.length = dist[t];
            best.start = s;
            best.target = t;
            best.path.clear();
            for (int v = t; v >= 0; v = parent[v]) best.path.push_back(v);
            std::reverse(best.path.begin(), best.path.end());
        }
    }
    return best;
}

}  // namespace detail

// Per cluster, the start of the longest among all-pairs BFS shortest paths.
inline DeploymentPlan plan_graph(const VelocityField& field, const std::vector<Cluster>& clusters,
                                 int K, int horizon = 0, std::uint64_t seed = 0) {
    if (static_cast<int>(clusters.size()) != K)
        throw std::invalid_argument("plan_graph: number of clusters must equal K");
    if (horizon <= 0) horizon = field.rows() * field.cols();
    const StateSpace space(field);
    DeploymentPlan plan;
    plan.strategy = Strategy::graph;
    plan.seed = seed;
    for (const Cluster& c : clusters) {
        if (c.cells.empty()) throw std::invalid_argument("plan_graph: empty cluster");
        const FlowGraph g = build_cluster_graph(field, c);
        const auto diam = detail::longest_shortest_path(g);
        std::vector<GridPos> path;
        if (diam.length < 0) {
            path.push_back(*std::min_element(c.cells.begin(), c.cells.end()));
        } else {
            for (const int v : diam.path) path.push_back(g.vertices[v]);
        }
        plan.positions.push_back(path.front());
        plan.predicted_paths.push_back(std::move(path));
    }
    plan.objective = evaluate_coverage_objective(space, plan.positions, horizon).value;
    return plan;
}

// K distinct water cells drawn uniformly without replacement.
inline DeploymentPlan plan_uniform(const VelocityField& field, int K, std::uint64_t seed,
                                   int horizon = 0) {
    if (K < 1) throw std::invalid_argument("plan_uniform: K must be >= 1");
    const auto water = field.water_cells();
    if (static_cast<std::size_t>(K) > water.size())
        throw std::invalid_argument("plan_uniform: fewer water cells than floaters");
    if (horizon <= 0) horizon = field.rows() * field.cols();
    auto eng = make_engine(seed, 0x0F10A7ULL);
    const auto idx = sample_without_replacement(water.size(), K, eng);
    const StateSpace space(field);
    DeploymentPlan plan;
    plan.strategy = Strategy::uniform;
    plan.seed = seed;
    for (const std::size_t w : idx) {
        plan.positions.push_back(water[w]);
        plan.predicted_paths.push_back(space.walk(water[w], horizon));
    }
    plan.objective = evaluate_coverage_objective(space, plan.positions, horizon).value;
    return plan;
}

namespace detail {

struct InterGraph {
    std::vector<GridPos> vertices;
    std::vector<int> cluster_of;
    std::vector<std::vector<int>> adjacency;
};

// Union of the cluster graphs plus cross edges: a leaf of one graph (or any
// vertex whose flow target is a root of another graph) connects when the
// intra-graph reachability predicate holds on the full field.
inline InterGraph build_inter_graph(const VelocityField& field,
                                    const std::vector<FlowGraph>& graphs) {
    InterGraph G;
    int offset = 0;
    std::vector<int> offsets;
    for (const FlowGraph& g : graphs) {
        offsets.push_back(offset);
        for (const GridPos& p : g.vertices) {
            G.vertices.push_back(p);
            G.cluster_of.push_back(g.cluster_id);
        }
        offset += static_cast<int>(g.vertices.size());
    }
    G.adjacency.assign(G.vertices.size(), {});
    // global lookup
    std::vector<std::pair<GridPos, int>> lookup(G.vertices.size());
    for (int v = 0; v < static_cast<int>(G.vertices.size()); ++v) lookup[v] = {G.vertices[v], v};
    std::sort(lookup.begin(), lookup.end());
    auto find_vertex = [&](GridPos p) {
        const auto it = std::lower_bound(lookup.begin(), lookup.end(), std::make_pair(p, -1));
        if (it == lookup.end() || !(it->first == p)) return -1;
        return it->second;
    };

    for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
        const FlowGraph& g = graphs[gi];
        for (int vi = 0; vi < static_cast<int>(g.vertices.size()); ++vi) {
            const int gv = offsets[gi] + vi;
            for (const int w : g.adjacency[vi]) G.adjacency[gv].push_back(offsets[gi] + w);

            // candidate cross edge along the flow
            const GridPos p = g.vertices[vi];
            if (field.speed(p) == 0.0) continue;
            const GridPos q = StateSpace::follow_velocity(field, p);
            const long long d2 = static_cast<long long>(q.i - p.i) * (q.i - p.i) +
                                 static_cast<long long>(q.j - p.j) * (q.j - p.j);
            if (d2 > 1 || !field.in_bounds(q)) continue;
            const int gw = find_vertex(q);
            if (gw < 0 || G.cluster_of[gw] == G.cluster_of[gv]) continue;
            const bool is_leaf = g.adjacency[vi].empty();
            // root test on the target graph
            bool target_is_root = false;
            for (std::size_t gj = 0; gj < graphs.size(); ++gj) {
                if (graphs[gj].cluster_id != G.cluster_of[gw]) continue;
                const int tl = graphs[gj].vertex_index(q);
                target_is_root = tl >= 0 && graphs[gj].in_degree[tl] == 0;
            }
            if (is_leaf || target_is_root) G.adjacency[gv].push_back(gw);
        }
    }
    for (auto& adj : G.adjacency) {
        std::sort(adj.begin(), adj.end());
        adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
    }
    return G;
}

struct CandidatePath {
    int length = 0;  // edges
    std::vector<int> vertices;
};

// All-pairs BFS shortest paths as candidates, longest first; candidates of
// equal length order by their (start, target) cells.
inline std::vector<CandidatePath> candidate_paths(const InterGraph& G) {
    const int n = static_cast<int>(G.vertices.size());
    std::vector<CandidatePath> cands;
    for (int s = 0; s < n; ++s) {
        std::vector<int> dist(n, -1), parent(n, -1);
        std::deque<int> q{s};
        dist[s] = 0;
        while (!q.empty()) {
            const int v = q.front();
            q.pop_front();
            for (const int w : G.adjacency[v]) {
                if (dist[w] >= 0) continue;
                dist[w] = dist[v] + 1;
                parent[w] = v;
                q.push_back(w);
            }
        }
        for (int t = 0; t < n; ++t) {
            if (dist[t] <= 0) continue;  // skip trivial zero-length paths
            CandidatePath c;
            c.length = dist[t];
            for (int v = t; v >= 0; v = parent[v]) c.vertices.push_back(v);
            std::reverse(c.vertices.begin(), c.vertices.end());
            cands.push_back(std::move(c));
        }
    }
    std::stable_sort(cands.begin(), cands.end(), [&](const CandidatePath& a, const CandidatePath& b) {
        if (a.length != b.length) return a.length > b.length;
        const GridPos sa = G.vertices[a.vertices.front()], sb = G.vertices[b.vertices.front()];
        if (!(sa == sb)) return sa < sb;
        return G.vertices[a.vertices.back()] < G.vertices[b.vertices.back()];
    });
    return cands;
}

}  // namespace detail

// Greedy longest-first selection of K vertex-disjoint paths over the merged
// inter-cluster graph; unfilled slots fall back to uniform placement on water
// cells not covered by the chosen paths.
inline DeploymentPlan plan_inter_graph(const VelocityField& field,
                                       const std::vector<Cluster>& clusters, int K,
                                       std::uint64_t seed = 0, int horizon = 0) {
    if (K < 1) throw std::invalid_argument("plan_inter_graph: K must be >= 1");
    if (horizon <= 0) horizon = field.rows() * field.cols();
    const StateSpace space(field);
    std::vector<FlowGraph> graphs;
    for (const Cluster& c : clusters)
        if (!c.cells.empty()) graphs.push_back(build_cluster_graph(field, c));
    const auto G = detail::build_inter_graph(field, graphs);
    const auto cands = detail::candidate_paths(G);

    DeploymentPlan plan;
    plan.strategy = Strategy::inter_graph;
    plan.seed = seed;
    std::vector<std::uint8_t> used(static_cast<std::size_t>(field.rows()) * field.cols(), 0);
    for (const auto& c : cands) {
        if (static_cast<int>(plan.positions.size()) >= K) break;
        bool clash = false;
        for (const int v : c.vertices)
            if (used[field.idx(G.vertices[v].i, G.vertices[v].j)]) {
                clash = true;
                break;
            }
        if (clash) continue;
        std::vector<GridPos> path;
        for (const int v : c.vertices) {
            used[field.idx(G.vertices[v].i, G.vertices[v].j)] = 1;
            path.push_back(G.vertices[v]);
        }
        plan.positions.push_back(path.front());
        plan.predicted_paths.push_back(std::move(path));
    }

    if (static_cast<int>(plan.positions.size()) < K) {
        std::vector<GridPos> free;
        for (const GridPos& p : field.water_cells())
            if (!used[field.idx(p.i, p.j)]) free.push_back(p);
        const int need = K - static_cast<int>(plan.positions.size());
        if (static_cast<int>(free.size()) < need)
            throw std::runtime_error("plan_inter_graph: not enough uncovered water cells");
        auto eng = make_engine(seed, 0x17E46ULL);
        for (const std::size_t w : sample_without_replacement(free.size(), need, eng)) {
            plan.positions.push_back(free[w]);
            plan.predicted_paths.push_back(space.walk(free[w], horizon));
            used[field.idx(free[w].i, free[w].j)] = 1;
        }
    }
    plan.objective = evaluate_coverage_objective(space, plan.positions, horizon).value;
    return plan;
}

inline nlohmann::json plan_to_json(const DeploymentPlan& plan) {
    nlohmann::json positions = nlohmann::json::array();
    for (const GridPos& p : plan.positions) positions.push_back({p.i, p.j});
    nlohmann::json paths = nlohmann::json::array();
    for (const auto& path : plan.predicted_paths) {
        nlohmann::json jp = nlohmann::json::array();
        for (const GridPos& p : path) jp.push_back({p.i, p.j});
        paths.push_back(std::move(jp));
    }
    return {{"strategy", to_string(plan.strategy)},
            {"K", plan.positions.size()},
            {"positions", std::move(positions)},
            {"objective", plan.objective},
            {"paths", std::move(paths)},
            {"seed", plan.seed}};
}

inline DeploymentPlan plan_from_json(const nlohmann::json& j) {
    DeploymentPlan plan;
    plan.strategy = strategy_from_string(j.at("strategy").get<std::string>());
    plan.objective = j.at("objective").get<double>();
    plan.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& p : j.at("positions"))
        plan.positions.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
    for (const auto& path : j.at("paths")) {
        std::vector<GridPos> pc;
        for (const auto& p : path) pc.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
        plan.predicted_paths.push_back(std::move(pc));
    }
    return plan;
}

}  // namespace driftplan
