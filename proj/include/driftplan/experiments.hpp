#pragma once

// End-to-end pipeline orchestration: seeded experiment runs over synthetic or
// loaded fields, parameter sweeps with confidence intervals, and CSV/JSON
// report emission. Planning always consumes the clean model field; when noise
// is configured, simulation and error evaluation use the corrupted field.

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "driftplan/deployment.hpp"
#include "driftplan/drift_sim.hpp"
#include "driftplan/flowfield.hpp"
#include "driftplan/reconstruction.hpp"
#include "driftplan/segmentation.hpp"
#include "driftplan/sets_clustering.hpp"

namespace driftplan {

inline constexpr const char* kVersion = "0.1.0";

struct ExperimentConfig {
    // field source: a file path, or a synthetic spec when path is empty
    std::string field_path;
    SyntheticKind synth_kind = SyntheticKind::patchwork;
    int rows = 40, cols = 40;
    SyntheticParams synth;

    int K = 4;
    std::vector<Strategy> strategies{Strategy::heuristic, Strategy::graph, Strategy::inter_graph,
                                     Strategy::uniform};
    std::size_t mu = 1500;
    double coreset_eps = 0.2;
    HomogeneityParams homog;
    int horizon = 0;  // 0: rows*cols

    bool noise_enabled = false;
    double eta = 1.0;
    double sigma_pct = 0.0;

    SimConfig sim;

    std::vector<double> cv_C{0.1, 1.0, 10.0, 100.0};
    std::vector<double> cv_epsilon{0.001, 0.01, 0.05};
    std::vector<double> cv_gamma{0.01, 0.1, 1.0, 10.0};
    int folds = 5;

    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10,
                                     11, 12, 13, 14, 15, 16, 17, 18, 19, 20};
    std::string outdir = "out";
    int workers = 1;
    bool timing_in_results = false;  // keeps results.csv byte-deterministic by default
    bool write_artifacts = true;

    void validate() const {
        if (K < 1) throw std::invalid_argument("config: K must be >= 1");
        if (seeds.empty()) throw std::invalid_argument("config: need at least one seed");
        if (strategies.empty()) throw std::invalid_argument("config: need at least one strategy");
        homog.validate();
    }
};

struct StageTiming {
    int map_id = 0;
    std::string strategy;  // empty for shared stages
    std::string stage;
    double seconds = 0.0;
};

struct RunRecord {
    int map_id = 0;
    Strategy strategy = Strategy::uniform;
    std::uint64_t seed = 0;
    int K = 0;
    std::size_t mu = 0;
    double eps_beta = 0.0;
    double eta = 0.0;        // 0 when noise disabled
    double sigma_pct = 0.0;
    double mean_rho = 0.0;
    double median_rho = 0.0;
    double objective = 0.0;
    double seconds = 0.0;
    bool failed = false;
    std::string error;
    DeploymentPlan plan;
    std::vector<double> rho_water;  // per-water-cell errors, for pooled CDFs
    std::uint64_t planning_field_digest = 0;
    std::uint64_t simulation_field_digest = 0;
};

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<RunRecord> records;
    std::vector<StageTiming> timings;
    bool any_failed = false;
};

inline VelocityField make_model_field(const ExperimentConfig& cfg, std::uint64_t seed) {
    if (!cfg.field_path.empty())
        return load_field(cfg.field_path, format_from_path(cfg.field_path));
    return make_synthetic(cfg.synth_kind, cfg.rows, cfg.cols, cfg.synth, seed);
}

namespace detail {

class StageClock {
public:
    double lap() {
        const auto now = std::chrono::steady_clock::now();
        const double s = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        return s;
    }

private:
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

struct MapOutputs {
    std::vector<RunRecord> records;
    std::vector<StageTiming> timings;
};

inline MapOutputs run_map(const ExperimentConfig& cfg, int map_id, std::uint64_t seed) {
    MapOutputs out;
    StageClock clock;

    auto fail_all = [&](const std::string& what) {
        for (const Strategy s : cfg.strategies) {
            RunRecord r;
            r.map_id = map_id;
            r.strategy = s;
            r.seed = seed;
            r.K = cfg.K;
            r.mu = cfg.mu;
            r.eps_beta = cfg.homog.eps_beta;
            r.eta = cfg.noise_enabled ? cfg.eta : 0.0;
            r.sigma_pct = cfg.noise_enabled ? cfg.sigma_pct : 0.0;
            r.failed = true;
            r.error = what;
            out.records.push_back(std::move(r));
        }
    };

    VelocityField model;
    VelocityField sim_field;
    std::vector<Segment> segments;
    ClusterMapResult clustering;
    double shared_seconds = 0.0;
    try {
        model = make_model_field(cfg, seed);
        if (cfg.noise_enabled) {
            NoiseSpec ns{cfg.eta, cfg.sigma_pct, derive_seed(seed, 0xA01)};
            sim_field = corrupt(model, ns);
        } else {
            sim_field = model;
        }
        out.timings.push_back({map_id, "", "field", clock.lap()});

        segments = segment_field(model, cfg.homog, derive_seed(seed, 0xA02));
        out.timings.push_back({map_id, "", "segmentation", clock.lap()});

        clustering = cluster_map(model, segments, cfg.K, cfg.mu, cfg.coreset_eps,
                                 derive_seed(seed, 0xA03));
        out.timings.push_back({map_id, "", "clustering", clock.lap()});
        for (const auto& t : out.timings) shared_seconds += t.seconds;
    } catch (const std::exception& e) {
        fail_all(e.what());
        return out;
    }

    const std::uint64_t model_digest = field_digest(model);
    const std::uint64_t sim_digest = field_digest(sim_field);
    const int horizon = cfg.horizon > 0 ? cfg.horizon : model.rows() * model.cols();

    for (const Strategy strat : cfg.strategies) {
        RunRecord r;
        r.map_id = map_id;
        r.strategy = strat;
        r.seed = seed;
        r.K = cfg.K;
        r.mu = cfg.mu;
        r.eps_beta = cfg.homog.eps_beta;
        r.eta = cfg.noise_enabled ? cfg.eta : 0.0;
        r.sigma_pct = cfg.noise_enabled ? cfg.sigma_pct : 0.0;
        r.planning_field_digest = model_digest;
        r.simulation_field_digest = sim_digest;
        StageClock strat_clock;
        try {
            // planning reads only the clean model field
            switch (strat) {
                case Strategy::heuristic:
                    r.plan = plan_heuristic(model, clustering.clusters, cfg.K, horizon, seed);
                    break;
                case Strategy::graph:
                    r.plan = plan_graph(model, clustering.clusters, cfg.K, horizon, seed);
                    break;
                case Strategy::inter_graph:
                    r.plan = plan_inter_graph(model, clustering.clusters, cfg.K,
                                              derive_seed(seed, 0xA04), horizon);
                    break;
                case Strategy::uniform:
                    r.plan = plan_uniform(model, cfg.K, derive_seed(seed, 0xA05), horizon);
                    break;
            }
            out.timings.push_back({map_id, to_string(strat), "plan", strat_clock.lap()});

            const auto trajectories = simulate_plan(sim_field, r.plan, cfg.sim);
            const auto obs = observations(trajectories);
            out.timings.push_back({map_id, to_string(strat), "simulate", strat_clock.lap()});

            const auto gs = grid_search_cv(obs, cfg.cv_C, cfg.cv_epsilon, cfg.cv_gamma, cfg.folds,
                                           derive_seed(seed, 0xA06));
            const auto models = train_svr(obs, gs.C, gs.epsilon, gs.gamma);
            const auto predicted = predict_field(models.u, models.v, sim_field);
            const auto report = error_report(sim_field, predicted);
            out.timings.push_back({map_id, to_string(strat), "reconstruct", strat_clock.lap()});

            r.mean_rho = report.mean;
            r.median_rho = report.median;
            r.objective = r.plan.objective;
            r.rho_water = report.cdf_values;

            if (cfg.write_artifacts) {
                namespace fs = std::filesystem;
                const fs::path dir = fs::path(cfg.outdir) / ("map_" + std::to_string(map_id));
                fs::create_directories(dir);
                save_field(model, (dir / "field_model.json").string(), FieldFormat::json);
                if (cfg.noise_enabled)
                    save_field(sim_field, (dir / "field_sim.json").string(), FieldFormat::json);
                std::ofstream((dir / "segmentation.json").string())
                    << segmentation_to_json(segments).dump(2) << '\n';
                std::ofstream((dir / "clustering.json").string())
                    << clustering_to_json(clustering, model.rows(), model.cols()).dump(2) << '\n';
                const std::string tag = to_string(strat);
                std::ofstream((dir / ("plan_" + tag + ".json")).string())
                    << plan_to_json(r.plan).dump(2) << '\n';
                save_observations(obs, (dir / ("obs_" + tag + ".csv")).string());
                std::ofstream((dir / ("model_" + tag + "_u.json")).string())
                    << svr_model_to_json(models.u).dump(2) << '\n';
                std::ofstream((dir / ("model_" + tag + "_v.json")).string())
                    << svr_model_to_json(models.v).dump(2) << '\n';
                save_field(predicted, (dir / ("predicted_" + tag + ".json")).string(),
                           FieldFormat::json);
                save_error_csv(report, (dir / ("error_" + tag + ".csv")).string());
                save_cdf_csv(report, (dir / ("cdf_" + tag + ".csv")).string());
            }
        } catch (const std::exception& e) {
            r.failed = true;
            r.error = e.what();
        }
        double strat_seconds = 0.0;
        for (const auto& t : out.timings)
            if (t.map_id == map_id && t.strategy == to_string(strat)) strat_seconds += t.seconds;
        r.seconds = shared_seconds + strat_seconds;
        out.records.push_back(std::move(r));
    }
    return out;
}

}  // namespace detail

// Runs the full pipeline for every (map seed, strategy) cell. A failing stage
// marks its cell (or map) failed and the remaining cells proceed.
inline ExperimentResult run_pipeline(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentResult result;
    result.config = cfg;
    const int n_maps = static_cast<int>(cfg.seeds.size());
    std::vector<detail::MapOutputs> per_map(n_maps);

    const int workers = std::max(1, cfg.workers);
    if (workers == 1) {
        for (int m = 0; m < n_maps; ++m) per_map[m] = detail::run_map(cfg, m, cfg.seeds[m]);
    } else {
        std::atomic<int> next{0};
        auto worker = [&]() {
            for (;;) {
                const int m = next.fetch_add(1);
                if (m >= n_maps) return;
                per_map[m] = detail::run_map(cfg, m, cfg.seeds[m]);
            }
        };
        std::vector<std::thread> pool;
        for (int w = 0; w < std::min(workers, n_maps); ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (auto& mo : per_map) {
        for (auto& r : mo.records) {
            result.any_failed = result.any_failed || r.failed;
            result.records.push_back(std::move(r));
        }
        for (auto& t : mo.timings) result.timings.push_back(std::move(t));
    }
    return result;
}

enum class SweepAxis { K, sigma_pct, eta, eps_beta, mu };

inline SweepAxis sweep_axis_from_string(const std::string& s) {
    if (s == "K") return SweepAxis::K;
    if (s == "sigma_pct") return SweepAxis::sigma_pct;
    if (s == "eta") return SweepAxis::eta;
    if (s == "eps_beta") return SweepAxis::eps_beta;
    if (s == "mu") return SweepAxis::mu;
    throw std::invalid_argument("unknown sweep axis: " + s);
}

inline std::string to_string(SweepAxis a) {
    switch (a) {
        case SweepAxis::K: return "K";
        case SweepAxis::sigma_pct: return "sigma_pct";
        case SweepAxis::eta: return "eta";
        case SweepAxis::eps_beta: return "eps_beta";
        case SweepAxis::mu: return "mu";
    }
    return "?";
}

struct SweepAggregate {
    double value = 0.0;
    std::string strategy;
    double mean = 0.0;
    double ci_half = 0.0;  // 1.96 * sd / sqrt(n), normal approximation
    int n = 0;
};

struct SweepResult {
    SweepAxis axis = SweepAxis::K;
    std::vector<double> values;
    std::vector<ExperimentResult> results;
    std::vector<SweepAggregate> aggregates;
    std::map<std::string, double> trend_slope;  // OLS slope of mean vs axis value
};

inline ExperimentConfig apply_axis(ExperimentConfig cfg, SweepAxis axis, double value) {
    switch (axis) {
        case SweepAxis::K: cfg.K = static_cast<int>(value); break;
        case SweepAxis::sigma_pct:
            cfg.sigma_pct = value;
            cfg.noise_enabled = true;
            break;
        case SweepAxis::eta:
            cfg.eta = value;
            cfg.noise_enabled = true;
            break;
        case SweepAxis::eps_beta: cfg.homog.eps_beta = value; break;
        case SweepAxis::mu: cfg.mu = static_cast<std::size_t>(value); break;
    }
    return cfg;
}

inline SweepResult sweep(const ExperimentConfig& cfg, SweepAxis axis,
                         const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("sweep: values must be nonempty");
    SweepResult sr;
    sr.axis = axis;
    sr.values = values;
    for (const double v : values) sr.results.push_back(run_pipeline(apply_axis(cfg, axis, v)));

    std::map<std::string, std::vector<std::pair<double, double>>> series;  // strategy -> (value, mean)
    for (std::size_t vi = 0; vi < values.size(); ++vi) {
        std::map<std::string, std::vector<double>> by_strategy;
        for (const RunRecord& r : sr.results[vi].records)
            if (!r.failed) by_strategy[to_string(r.strategy)].push_back(r.mean_rho);
        for (const auto& [name, xs] : by_strategy) {
            SweepAggregate agg;
            agg.value = values[vi];
            agg.strategy = name;
            agg.n = static_cast<int>(xs.size());
            double mean = 0.0;
            for (const double x : xs) mean += x;
            mean /= std::max<std::size_t>(1, xs.size());
            double var = 0.0;
            for (const double x : xs) var += (x - mean) * (x - mean);
            if (xs.size() > 1) var /= static_cast<double>(xs.size() - 1);
            agg.mean = mean;
            agg.ci_half = xs.size() > 1 ? 1.96 * std::sqrt(var / static_cast<double>(xs.size())) : 0.0;
            sr.aggregates.push_back(agg);
            series[name].push_back({values[vi], mean});
        }
    }
    for (const auto& [name, pts] : series) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (const auto& [x, y] : pts) {
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        const double n = static_cast<double>(pts.size());
        const double denom = n * sxx - sx * sx;
        sr.trend_slope[name] = denom != 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
    }
    return sr;
}

inline std::string results_csv_header() {
    return "map_id,strategy,seed,K,mu,eps_beta,eta,sigma_pct,mean_rho,median_rho,objective,seconds";
}

inline void emit_reports(const ExperimentResult& result, const std::string& outdir) {
    if (result.records.empty()) throw std::invalid_argument("emit_reports: no records");
    namespace fs = std::filesystem;
    fs::create_directories(outdir);

    {
        std::ofstream out(fs::path(outdir) / "results.csv");
        if (!out) throw std::runtime_error("emit_reports: cannot write results.csv");
        out << results_csv_header() << '\n';
        for (const RunRecord& r : result.records) {
            const double seconds = result.config.timing_in_results ? r.seconds : 0.0;
            out << r.map_id << ',' << to_string(r.strategy) << ',' << r.seed << ',' << r.K << ','
                << r.mu << ',' << detail::fmt17(r.eps_beta) << ',' << detail::fmt17(r.eta) << ','
                << detail::fmt17(r.sigma_pct) << ',' << detail::fmt17(r.mean_rho) << ','
                << detail::fmt17(r.median_rho) << ',' << detail::fmt17(r.objective) << ','
                << detail::fmt17(seconds) << '\n';
        }
    }

    // pooled per-strategy CDFs over all water cells of all maps
    std::map<std::string, std::vector<double>> pooled;
    for (const RunRecord& r : result.records)
        if (!r.failed) {
            auto& v = pooled[to_string(r.strategy)];
            v.insert(v.end(), r.rho_water.begin(), r.rho_water.end());
        }
    for (auto& [name, values] : pooled) {
        std::sort(values.begin(), values.end());
        std::ofstream out(fs::path(outdir) / ("cdf_" + name + ".csv"));
        out << "value,fraction\n";
        for (std::size_t i = 0; i < values.size(); ++i)
            out << detail::fmt17(values[i]) << ','
                << detail::fmt17(static_cast<double>(i + 1) / static_cast<double>(values.size()))
                << '\n';
    }

    // timing sidecar (wall-clock; not covered by the determinism guarantee)
    {
        std::ofstream out(fs::path(outdir) / "timings.csv");
        out << "map_id,strategy,stage,seconds\n";
        for (const StageTiming& t : result.timings)
            out << t.map_id << ',' << t.strategy << ',' << t.stage << ','
                << detail::fmt17(t.seconds) << '\n';
    }

    {
        nlohmann::json summary;
        summary["version"] = kVersion;
        const ExperimentConfig& c = result.config;
        summary["config"] = {{"field", c.field_path.empty() ? std::string("synthetic") : c.field_path},
                             {"rows", c.rows},
                             {"cols", c.cols},
                             {"K", c.K},
                             {"mu", c.mu},
                             {"eps_beta", c.homog.eps_beta},
                             {"eps_grid", c.homog.eps_grid},
                             {"noise", c.noise_enabled},
                             {"eta", c.eta},
                             {"sigma_pct", c.sigma_pct},
                             {"folds", c.folds},
                             {"n_steps", c.sim.n_steps}};
        summary["seeds"] = c.seeds;
        nlohmann::json aggregates = nlohmann::json::object();
        std::map<std::string, std::vector<double>> by_strategy;
        for (const RunRecord& r : result.records)
            if (!r.failed) by_strategy[to_string(r.strategy)].push_back(r.mean_rho);
        for (const auto& [name, xs] : by_strategy) {
            double mean = 0.0;
            for (const double x : xs) mean += x;
            mean /= std::max<std::size_t>(1, xs.size());
            double var = 0.0;
            for (const double x : xs) var += (x - mean) * (x - mean);
            if (xs.size() > 1) var /= static_cast<double>(xs.size() - 1);
            aggregates[name] = {{"mean_rho", mean},
                                {"ci95_half", xs.size() > 1
                                                  ? 1.96 * std::sqrt(var / static_cast<double>(xs.size()))
                                                  : 0.0},
                                {"n", xs.size()}};
        }
        summary["aggregates"] = std::move(aggregates);
        summary["failed_records"] = [&] {
            int n = 0;
            for (const RunRecord& r : result.records) n += r.failed ? 1 : 0;
            return n;
        }();
        std::ofstream out(fs::path(outdir) / "summary.json");
        out << summary.dump(2) << '\n';
    }
}

inline void emit_sweep_reports(const SweepResult& sr, const std::string& outdir) {
    namespace fs = std::filesystem;
    fs::create_directories(outdir);
    for (std::size_t vi = 0; vi < sr.values.size(); ++vi) {
        std::ostringstream sub;
        sub << to_string(sr.axis) << '_' << sr.values[vi];
        emit_reports(sr.results[vi], (fs::path(outdir) / sub.str()).string());
    }
    std::ofstream out(fs::path(outdir) / "sweep.csv");
    out << "axis,value,strategy,mean_rho,ci95_half,n\n";
    for (const SweepAggregate& a : sr.aggregates)
        out << to_string(sr.axis) << ',' << detail::fmt17(a.value) << ',' << a.strategy << ','
            << detail::fmt17(a.mean) << ',' << detail::fmt17(a.ci_half) << ',' << a.n << '\n';
    std::ofstream trend(fs::path(outdir) / "trend.csv");
    trend << "strategy,slope\n";
    for (const auto& [name, slope] : sr.trend_slope)
        trend << name << ',' << detail::fmt17(slope) << '\n';
}

// Flat key=value config file; '#' starts a comment.
inline ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("parse_config: cannot open " + path);
    ExperimentConfig cfg;
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (!key.empty()) kv[key] = val;
    }

    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::istringstream ss(s);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (!tok.empty()) out.push_back(tok);
        }
        return out;
    };
    auto has = [&](const std::string& k) { return kv.count(k) > 0; };
    auto getd = [&](const std::string& k, double dflt) { return has(k) ? std::stod(kv[k]) : dflt; };
    auto geti = [&](const std::string& k, int dflt) { return has(k) ? std::stoi(kv[k]) : dflt; };

    if (has("field")) {
        const std::string f = kv["field"];
        if (f.rfind("synthetic:", 0) == 0) {
            cfg.synth_kind = synthetic_kind_from_string(f.substr(10));
        } else {
            cfg.field_path = f;
        }
    }
    cfg.rows = geti("rows", cfg.rows);
    cfg.cols = geti("cols", cfg.cols);
    cfg.synth.cell_size = getd("cell_size", cfg.synth.cell_size);
    cfg.synth.regions = geti("regions", cfg.synth.regions);
    cfg.synth.speed_min = getd("speed_min", cfg.synth.speed_min);
    cfg.synth.speed_max = getd("speed_max", cfg.synth.speed_max);
    cfg.synth.island_frac = getd("island_frac", cfg.synth.island_frac);
    cfg.K = geti("K", cfg.K);
    if (has("strategies")) {
        cfg.strategies.clear();
        for (const auto& s : split(kv["strategies"])) cfg.strategies.push_back(strategy_from_string(s));
    }
    cfg.mu = static_cast<std::size_t>(geti("mu", static_cast<int>(cfg.mu)));
    cfg.coreset_eps = getd("coreset_eps", cfg.coreset_eps);
    cfg.homog.max_angle = getd("max_angle_deg", cfg.homog.max_angle * 180.0 / M_PI) * M_PI / 180.0;
    cfg.homog.max_speed_ratio = getd("max_speed_ratio", cfg.homog.max_speed_ratio);
    cfg.homog.eps_grid = geti("eps_grid", cfg.homog.eps_grid);
    cfg.homog.eps_beta = getd("eps_beta", cfg.homog.eps_beta);
    cfg.horizon = geti("horizon", cfg.horizon);
    if (has("noise_sigma_pct") || has("noise_eta")) {
        cfg.noise_enabled = true;
        cfg.sigma_pct = getd("noise_sigma_pct", 0.0);
        cfg.eta = getd("noise_eta", 1.0);
    }
    cfg.sim.dt = getd("dt", cfg.sim.dt);
    cfg.sim.n_steps = geti("n_steps", cfg.sim.n_steps);
    if (has("interp")) cfg.sim.interp = kv["interp"] == "nearest" ? Interp::nearest : Interp::bilinear;
    if (has("boundary")) cfg.sim.boundary = kv["boundary"] == "clamp" ? Boundary::clamp : Boundary::stop;
    auto getlist = [&](const std::string& k, std::vector<double>& dst) {
        if (!has(k)) return;
        dst.clear();
        for (const auto& s : split(kv[k])) dst.push_back(std::stod(s));
    };
    getlist("cv_C", cfg.cv_C);
    getlist("cv_epsilon", cfg.cv_epsilon);
    getlist("cv_gamma", cfg.cv_gamma);
    cfg.folds = geti("folds", cfg.folds);
    if (has("seeds")) {
        cfg.seeds.clear();
        for (const auto& s : split(kv["seeds"])) cfg.seeds.push_back(std::stoull(s));
    } else if (has("n_seeds")) {
        const int n = std::stoi(kv["n_seeds"]);
        const std::uint64_t base = has("base_seed") ? std::stoull(kv["base_seed"]) : 1;
        cfg.seeds.clear();
        for (int i = 0; i < n; ++i) cfg.seeds.push_back(base + i);
    }
    if (has("out")) cfg.outdir = kv["out"];
    cfg.workers = geti("workers", cfg.workers);
    if (has("timing")) cfg.timing_in_results = kv["timing"] == "true" || kv["timing"] == "1";
    if (has("write_artifacts"))
        cfg.write_artifacts = kv["write_artifacts"] == "true" || kv["write_artifacts"] == "1";
    cfg.validate();
    return cfg;
}

}  // namespace driftplan
