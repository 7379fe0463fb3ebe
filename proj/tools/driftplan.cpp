// Command-line front end: generate fields, run individual pipeline stages, or
// execute full seeded experiment runs and sweeps.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "driftplan/deployment.hpp"
#include "driftplan/drift_sim.hpp"
#include "driftplan/experiments.hpp"
#include "driftplan/flowfield.hpp"
#include "driftplan/reconstruction.hpp"
#include "driftplan/segmentation.hpp"
#include "driftplan/sets_clustering.hpp"

namespace fs = std::filesystem;
using namespace driftplan;

namespace {

VelocityField load_any(const std::string& path) { return load_field(path, format_from_path(path)); }

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

void write_json(const nlohmann::json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

std::vector<Cluster> clusters_from_json(const VelocityField& field, const nlohmann::json& j) {
    const int k = j.at("k").get<int>();
    std::vector<Cluster> clusters(k);
    for (int c = 0; c < k; ++c) {
        clusters[c].id = c;
        for (int d = 0; d < 4; ++d) clusters[c].center[d] = j.at("centers").at(c).at(d).get<double>();
    }
    const auto& labels = j.at("labels");
    for (int i = 0; i < field.rows(); ++i)
        for (int jj = 0; jj < field.cols(); ++jj) {
            const int lab = labels.at(i).at(jj).get<int>();
            if (lab < 0) continue;
            clusters[lab].cells.push_back({i, jj});
            clusters[lab].velocities.push_back(field.velocity(i, jj));
        }
    return clusters;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"drifter deployment planning over gridded velocity fields"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 1;
    std::string out_path;
    app.add_option("--config", config_path, "experiment config file (key = value lines)");
    app.add_option("--seed", seed, "base RNG seed");
    app.add_option("--out", out_path, "output file or directory");

    // gen
    auto* gen = app.add_subcommand("gen", "generate a synthetic velocity field");
    std::string gen_kind = "patchwork";
    int gen_rows = 40, gen_cols = 40, gen_regions = 0;
    double gen_speed_min = 0.3, gen_speed_max = 1.2, gen_island = 0.0, gen_cell = 1.0;
    std::string gen_format = "json";
    gen->add_option("--kind", gen_kind, "patchwork | double_gyre | shear");
    gen->add_option("--rows", gen_rows);
    gen->add_option("--cols", gen_cols);
    gen->add_option("--regions", gen_regions, "patchwork region count (0 = draw 2..8)");
    gen->add_option("--speed-min", gen_speed_min);
    gen->add_option("--speed-max", gen_speed_max);
    gen->add_option("--island-frac", gen_island);
    gen->add_option("--cell-size", gen_cell);
    gen->add_option("--format", gen_format, "csv | json");

    // segment
    auto* seg = app.add_subcommand("segment", "partition a field into homogeneous patches");
    std::string seg_field;
    double seg_angle = 20.0, seg_ratio = 1.5, seg_eps_beta = 0.05;
    int seg_eps_grid = 1;
    seg->add_option("--field", seg_field)->required();
    seg->add_option("--max-angle-deg", seg_angle);
    seg->add_option("--max-speed-ratio", seg_ratio);
    seg->add_option("--eps-grid", seg_eps_grid);
    seg->add_option("--eps-beta", seg_eps_beta);

    // cluster
    auto* clu = app.add_subcommand("cluster", "sets-clustering of a segmentation");
    std::string clu_field, clu_seg;
    int clu_k = 4;
    std::size_t clu_mu = 1500;
    double clu_eps = 0.2;
    clu->add_option("--field", clu_field)->required();
    clu->add_option("--segmentation", clu_seg)->required();
    clu->add_option("--k", clu_k);
    clu->add_option("--mu", clu_mu);
    clu->add_option("--eps", clu_eps);

    // plan
    auto* pln = app.add_subcommand("plan", "choose deployment positions");
    std::string pln_field, pln_clusters, pln_strategy = "heuristic";
    int pln_k = 4, pln_horizon = 0;
    pln->add_option("--field", pln_field)->required();
    pln->add_option("--clustering", pln_clusters, "required except for the uniform strategy");
    pln->add_option("--strategy", pln_strategy, "heuristic | graph | inter_graph | uniform");
    pln->add_option("--k", pln_k);
    pln->add_option("--horizon", pln_horizon);

    // simulate
    auto* sim = app.add_subcommand("simulate", "advect floaters from a plan");
    std::string sim_field, sim_plan, sim_interp = "bilinear", sim_boundary = "stop";
    double sim_dt = 0.0;
    int sim_steps = 100;
    sim->add_option("--field", sim_field)->required();
    sim->add_option("--plan", sim_plan)->required();
    sim->add_option("--dt", sim_dt, "0 picks cell_size / (2 max speed)");
    sim->add_option("--steps", sim_steps);
    sim->add_option("--interp", sim_interp, "nearest | bilinear");
    sim->add_option("--boundary", sim_boundary, "stop | clamp");

    // reconstruct
    auto* rec = app.add_subcommand("reconstruct", "fit RBF-SVR to observations and score");
    std::string rec_field, rec_obs;
    std::string rec_C = "0.1,1,10,100", rec_eps = "0.001,0.01,0.05", rec_gamma = "0.01,0.1,1,10";
    int rec_folds = 5;
    rec->add_option("--field", rec_field, "truth field (geometry and target)")->required();
    rec->add_option("--obs", rec_obs)->required();
    rec->add_option("--cv-c", rec_C);
    rec->add_option("--cv-epsilon", rec_eps);
    rec->add_option("--cv-gamma", rec_gamma);
    rec->add_option("--folds", rec_folds);

    // run / sweep
    auto* run = app.add_subcommand("run", "full pipeline from a config file");
    auto* swp = app.add_subcommand("sweep", "run the pipeline along one parameter axis");
    std::string swp_axis = "K";
    std::string swp_values = "2,4,8";
    swp->add_option("--axis", swp_axis, "K | sigma_pct | eta | eps_beta | mu");
    swp->add_option("--values", swp_values, "comma-separated axis values");

    CLI11_PARSE(app, argc, argv);

    auto parse_list = [](const std::string& s) {
        std::vector<double> out;
        std::stringstream ss(s);
        std::string tok;
        while (std::getline(ss, tok, ','))
            if (!tok.empty()) out.push_back(std::stod(tok));
        return out;
    };

    try {
        if (gen->parsed()) {
            SyntheticParams params;
            params.regions = gen_regions;
            params.speed_min = gen_speed_min;
            params.speed_max = gen_speed_max;
            params.island_frac = gen_island;
            params.cell_size = gen_cell;
            const auto field = make_synthetic(synthetic_kind_from_string(gen_kind), gen_rows,
                                              gen_cols, params, seed);
            const std::string path = out_path.empty() ? "field.json" : out_path;
            save_field(field, path, gen_format == "csv" ? FieldFormat::csv : FieldFormat::json);
            std::cout << "wrote " << path << '\n';
        } else if (seg->parsed()) {
            const auto field = load_any(seg_field);
            HomogeneityParams params;
            params.max_angle = seg_angle * M_PI / 180.0;
            params.max_speed_ratio = seg_ratio;
            params.eps_grid = seg_eps_grid;
            params.eps_beta = seg_eps_beta;
            const auto segments = segment_field(field, params, seed);
            const std::string path = out_path.empty() ? "segmentation.json" : out_path;
            write_json(segmentation_to_json(segments), path);
            std::cout << "wrote " << path << " (" << segments.size() << " segments)\n";
        } else if (clu->parsed()) {
            const auto field = load_any(clu_field);
            const auto segments = segmentation_from_json(read_json(clu_seg));
            const auto clustering = cluster_map(field, segments, clu_k, clu_mu, clu_eps, seed);
            const std::string path = out_path.empty() ? "clustering.json" : out_path;
            write_json(clustering_to_json(clustering, field.rows(), field.cols()), path);
            std::cout << "wrote " << path << '\n';
        } else if (pln->parsed()) {
            const auto field = load_any(pln_field);
            const Strategy strategy = strategy_from_string(pln_strategy);
            DeploymentPlan plan;
            if (strategy == Strategy::uniform) {
                plan = plan_uniform(field, pln_k, seed, pln_horizon);
            } else {
                if (pln_clusters.empty())
                    throw std::invalid_argument("plan: --clustering is required for " + pln_strategy);
                const auto clusters = clusters_from_json(field, read_json(pln_clusters));
                if (strategy == Strategy::heuristic)
                    plan = plan_heuristic(field, clusters, pln_k,
                                          pln_horizon > 0 ? pln_horizon : field.rows() * field.cols(),
                                          seed);
                else if (strategy == Strategy::graph)
                    plan = plan_graph(field, clusters, pln_k, pln_horizon, seed);
                else
                    plan = plan_inter_graph(field, clusters, pln_k, seed, pln_horizon);
            }
            const std::string path = out_path.empty() ? "plan.json" : out_path;
            write_json(plan_to_json(plan), path);
            std::cout << "wrote " << path << " (objective " << plan.objective << ")\n";
        } else if (sim->parsed()) {
            const auto field = load_any(sim_field);
            const auto plan = plan_from_json(read_json(sim_plan));
            SimConfig config;
            config.dt = sim_dt;
            config.n_steps = sim_steps;
            config.interp = sim_interp == "nearest" ? Interp::nearest : Interp::bilinear;
            config.boundary = sim_boundary == "clamp" ? Boundary::clamp : Boundary::stop;
            const auto obs = observations(simulate_plan(field, plan, config));
            const std::string path = out_path.empty() ? "observations.csv" : out_path;
            save_observations(obs, path);
            std::cout << "wrote " << path << " (" << obs.size() << " rows)\n";
        } else if (rec->parsed()) {
            const auto field = load_any(rec_field);
            const auto obs = load_observations(rec_obs);
            const auto gs = grid_search_cv(obs, parse_list(rec_C), parse_list(rec_eps),
                                           parse_list(rec_gamma), rec_folds, seed);
            const auto models = train_svr(obs, gs.C, gs.epsilon, gs.gamma);
            const auto predicted = predict_field(models.u, models.v, field);
            const auto report = error_report(field, predicted);
            const fs::path dir = out_path.empty() ? "reconstruction" : out_path;
            fs::create_directories(dir);
            write_json(svr_model_to_json(models.u), (dir / "model_u.json").string());
            write_json(svr_model_to_json(models.v), (dir / "model_v.json").string());
            save_field(predicted, (dir / "predicted.json").string(), FieldFormat::json);
            save_error_csv(report, (dir / "error.csv").string());
            save_cdf_csv(report, (dir / "cdf.csv").string());
            std::cout << "C=" << gs.C << " epsilon=" << gs.epsilon << " gamma=" << gs.gamma
                      << " mean_rho=" << report.mean << " median_rho=" << report.median << '\n';
        } else if (run->parsed() || swp->parsed()) {
            if (config_path.empty()) {
                std::cerr << "error: --config is required for run/sweep\n";
                return 1;
            }
            ExperimentConfig cfg = parse_config(config_path);
            if (!out_path.empty()) cfg.outdir = out_path;
            if (app.count("--seed")) {
                cfg.seeds.clear();
                cfg.seeds.push_back(seed);
            }
            if (run->parsed()) {
                const auto result = run_pipeline(cfg);
                emit_reports(result, cfg.outdir);
                std::cout << "wrote " << cfg.outdir << "/results.csv (" << result.records.size()
                          << " records)\n";
                return result.any_failed ? 2 : 0;
            }
            const auto result = sweep(cfg, sweep_axis_from_string(swp_axis), parse_list(swp_values));
            emit_sweep_reports(result, cfg.outdir);
            bool any_failed = false;
            for (const auto& r : result.results) any_failed = any_failed || r.any_failed;
            std::cout << "wrote " << cfg.outdir << "/sweep.csv\n";
            return any_failed ? 2 : 0;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
