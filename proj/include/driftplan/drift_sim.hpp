#pragma once

// Lagrangian drift simulation: explicit Euler advection of floaters through a
// velocity field, producing time-stamped position/velocity observations.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "driftplan/deployment.hpp"
#include "driftplan/flowfield.hpp"

namespace driftplan {

struct TrajectorySample {
    double t = 0.0;  // seconds
    double x = 0.0;  // meters
    double y = 0.0;
    double u_obs = 0.0;  // m/s at (x, y) when sampled
    double v_obs = 0.0;
};

struct Trajectory {
    int floater_id = 0;
    std::vector<TrajectorySample> samples;
};

enum class Boundary { stop, clamp };

struct SimConfig {
    double dt = 0.0;  // seconds; <= 0 picks cell_size / (2 * max speed)
    int n_steps = 100;
    Interp interp = Interp::bilinear;
    Boundary boundary = Boundary::stop;

    double resolve_dt(const VelocityField& field) const {
        if (dt > 0.0) return dt;
        const double ms = field.max_speed();
        if (ms <= 0.0) return 1.0;
        return field.cell_size() / (2.0 * ms);
    }
};

// Explicit Euler: velocity is sampled (and recorded) before each step. With
// boundary=stop a floater freezes at its last in-bounds position; with clamp
// it is projected back onto the boundary.
inline Trajectory advect(const VelocityField& field, GridPos start, const SimConfig& config,
                         double t_offset = 0.0, int floater_id = 0) {
    if (!field.in_bounds(start) || !field.water(start))
        throw std::invalid_argument("advect: start must be a water cell");
    if (config.n_steps < 1) throw std::invalid_argument("advect: n_steps must be >= 1");
    const double dt = config.resolve_dt(field);

    Trajectory traj;
    traj.floater_id = floater_id;
    traj.samples.reserve(config.n_steps + 1);
    double x = field.center_x(start.j);
    double y = field.center_y(start.i);
    bool frozen = false;
    for (int step = 0; step <= config.n_steps; ++step) {
        const Eigen::Vector2d vel = velocity_at(field, x, y, config.interp);
        traj.samples.push_back({t_offset + step * dt, x, y, vel.x(), vel.y()});
        if (step == config.n_steps || frozen) continue;
        double nx = x + vel.x() * dt;
        double ny = y + vel.y() * dt;
        const bool out = nx < field.x_min() || nx > field.x_max() || ny < field.y_min() ||
                         ny > field.y_max();
        if (out) {
            if (config.boundary == Boundary::stop) {
                frozen = true;
                continue;
            }
            nx = std::clamp(nx, field.x_min(), field.x_max());
            ny = std::clamp(ny, field.y_min(), field.y_max());
        }
        x = nx;
        y = ny;
    }
    return traj;
}

// Advects every floater of the plan; floater x's sample times are offset by
// x*dt/K so no two floaters ever share a timestamp.
inline std::vector<Trajectory> simulate_plan(const VelocityField& field,
                                             const DeploymentPlan& plan, const SimConfig& config) {
    if (plan.positions.empty()) throw std::invalid_argument("simulate_plan: empty plan");
    const double dt = config.resolve_dt(field);
    const int K = static_cast<int>(plan.positions.size());
    std::vector<Trajectory> out;
    out.reserve(K);
    for (int k = 0; k < K; ++k)
        out.push_back(advect(field, plan.positions[k], config, k * dt / K, k));
    return out;
}

struct Observation {
    int floater = 0;
    double t = 0.0, x = 0.0, y = 0.0, u = 0.0, v = 0.0;
};

inline std::vector<Observation> observations(const std::vector<Trajectory>& trajectories) {
    if (trajectories.empty()) throw std::invalid_argument("observations: no trajectories");
    std::vector<Observation> rows;
    for (const Trajectory& tr : trajectories)
        for (const TrajectorySample& s : tr.samples)
            rows.push_back({tr.floater_id, s.t, s.x, s.y, s.u_obs, s.v_obs});
    std::stable_sort(rows.begin(), rows.end(), [](const Observation& a, const Observation& b) {
        if (a.t != b.t) return a.t < b.t;
        return a.floater < b.floater;
    });
    return rows;
}

inline void save_observations(const std::vector<Observation>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_observations: cannot open " + path);
    out << "floater,t,x,y,u,v\n";
    for (const Observation& r : rows)
        out << r.floater << ',' << detail::fmt17(r.t) << ',' << detail::fmt17(r.x) << ','
            << detail::fmt17(r.y) << ',' << detail::fmt17(r.u) << ',' << detail::fmt17(r.v) << '\n';
    if (!out.good()) throw std::runtime_error("save_observations: write failed");
}

inline std::vector<Observation> load_observations(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_observations: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_observations: empty file");
    std::vector<Observation> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string tok;
        Observation r;
        auto next = [&]() {
            if (!std::getline(ss, tok, ','))
                throw std::runtime_error("load_observations: short row: " + line);
            return tok;
        };
        r.floater = std::stoi(next());
        r.t = std::stod(next());
        r.x = std::stod(next());
        r.y = std::stod(next());
        r.u = std::stod(next());
        r.v = std::stod(next());
        rows.push_back(r);
    }
    return rows;
}

}  // namespace driftplan
