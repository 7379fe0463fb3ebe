#pragma once

// Velocity-field reconstruction from floater observations: epsilon-insensitive
// RBF support-vector regression trained by SMO on the dual, grid-search cross
// validation, the rho_speed prediction-error report, and a linear
// weighted-least-squares baseline.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "driftplan/drift_sim.hpp"
#include "driftplan/flowfield.hpp"
#include "driftplan/random.hpp"

namespace driftplan {

// Affine map taking observation coordinates into [0,1]^2; the gamma grid is
// only meaningful on a normalized domain.
struct CoordScaler {
    double x_off = 0.0, y_off = 0.0, x_scale = 1.0, y_scale = 1.0;

    static CoordScaler fit(const std::vector<Eigen::Vector2d>& pts) {
        CoordScaler s;
        double xmin = pts[0].x(), xmax = pts[0].x(), ymin = pts[0].y(), ymax = pts[0].y();
        for (const auto& p : pts) {
            xmin = std::min(xmin, p.x());
            xmax = std::max(xmax, p.x());
            ymin = std::min(ymin, p.y());
            ymax = std::max(ymax, p.y());
        }
        s.x_off = xmin;
        s.y_off = ymin;
        s.x_scale = xmax > xmin ? xmax - xmin : 1.0;
        s.y_scale = ymax > ymin ? ymax - ymin : 1.0;
        return s;
    }
    Eigen::Vector2d apply(const Eigen::Vector2d& p) const {
        return {(p.x() - x_off) / x_scale, (p.y() - y_off) / y_scale};
    }
};

namespace detail {

struct SmoResult {
    std::vector<double> beta;  // alpha - alpha*, one per training point
    double bias = 0.0;
    double dual_objective = 0.0;  // maximization form
    double kkt_violation = 0.0;
    int iterations = 0;
    bool converged = false;
};

// SMO with second-order working-set selection on the standard 2n-variable
// epsilon-SVR dual (indices < n carry alpha, >= n carry alpha*).
inline SmoResult smo_train(const Eigen::MatrixXd& kernel, const std::vector<double>& y, double C,
                           double epsilon, double tol = 1e-4, int max_iters = 200000) {
    const int n = static_cast<int>(y.size());
    const int N = 2 * n;
    auto sgn = [n](int a) { return a < n ? 1.0 : -1.0; };
    auto pt = [n](int a) { return a < n ? a : a - n; };

    std::vector<double> alpha(N, 0.0), grad(N);
    for (int a = 0; a < N; ++a) grad[a] = epsilon - sgn(a) * y[pt(a)];

    constexpr double kTau = 1e-12;
    SmoResult res;
    int it = 0;
    for (; it < max_iters; ++it) {
        // i: maximal -s*grad over indices free to increase
        int i = -1;
        double gmax = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < N; ++a)
            if (alpha[a] < C && -sgn(a) * grad[a] > gmax) {
                gmax = -sgn(a) * grad[a];
                i = a;
            }
        // second-order choice of j among indices free to decrease
        int j = -1;
        double gmin = std::numeric_limits<double>::infinity();
        double best_obj = 0.0;
        for (int a = 0; a < N; ++a) {
            if (alpha[a] <= 0.0) continue;
            const double nga = -sgn(a) * grad[a];
            gmin = std::min(gmin, nga);
            const double grad_diff = gmax - nga;
            if (grad_diff <= 0.0) continue;
            const int pi = pt(i), pa = pt(a);
            double quad = kernel(pi, pi) + kernel(pa, pa) -
                          2.0 * sgn(i) * sgn(a) * kernel(pi, pa);
            if (quad <= 0.0) quad = kTau;
            const double obj = -grad_diff * grad_diff / quad;
            if (obj < best_obj) {
                best_obj = obj;
                j = a;
            }
        }
        res.kkt_violation = gmax - gmin;
        if (i < 0 || j < 0 || res.kkt_violation <= tol) {
            res.converged = true;
            break;
        }

        const int pi = pt(i), pj = pt(j);
        const double si = sgn(i), sj = sgn(j);
        double quad = kernel(pi, pi) + kernel(pj, pj) - 2.0 * si * sj * kernel(pi, pj);
        if (quad <= 0.0) quad = kTau;
        const double old_i = alpha[i], old_j = alpha[j];
        if (si != sj) {
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0 && alpha[j] < 0) {
                alpha[j] = 0;
                alpha[i] = diff;
            } else if (diff <= 0 && alpha[i] < 0) {
                alpha[i] = 0;
                alpha[j] = -diff;
            }
            if (diff > 0) {
                if (alpha[i] > C) {
                    alpha[i] = C;
                    alpha[j] = C - diff;
                }
            } else {
                if (alpha[j] > C) {
                    alpha[j] = C;
                    alpha[i] = C + diff;
                }
            }
        } else {
            const double delta = (grad[i] - grad[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > C) {
                if (alpha[i] > C) {
                    alpha[i] = C;
                    alpha[j] = sum - C;
                }
            } else {
                if (alpha[j] < 0) {
                    alpha[j] = 0;
                    alpha[i] = sum;
                }
            }
            if (sum > C) {
                if (alpha[j] > C) {
                    alpha[j] = C;
                    alpha[i] = sum - C;
                }
            } else {
                if (alpha[i] < 0) {
                    alpha[i] = 0;
                    alpha[j] = sum;
                }
            }
        }
        const double di = alpha[i] - old_i, dj = alpha[j] - old_j;
        for (int a = 0; a < N; ++a) {
            const int pa = pt(a);
            grad[a] += sgn(a) * (si * kernel(pa, pi) * di + sj * kernel(pa, pj) * dj);
        }
    }
    res.iterations = it;

    res.beta.assign(n, 0.0);
    for (int p = 0; p < n; ++p) res.beta[p] = alpha[p] - alpha[n + p];

    // bias from the KKT conditions; with no free multiplier, the midpoint of
    // the feasible interval
    Eigen::VectorXd kb = Eigen::VectorXd::Zero(n);
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) kb[p] += kernel(p, q) * res.beta[q];
    double bsum = 0.0;
    int bcount = 0;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (int p = 0; p < n; ++p) {
        const double g = y[p] - kb[p];
        const double a_up = alpha[p], a_dn = alpha[n + p];
        if (a_up > 0.0 && a_up < C) {
            bsum += g - epsilon;
            ++bcount;
        }
        if (a_dn > 0.0 && a_dn < C) {
            bsum += g + epsilon;
            ++bcount;
        }
        if (a_up == 0.0 && a_dn == 0.0) {
            lo = std::max(lo, g - epsilon);
            hi = std::min(hi, g + epsilon);
        } else if (a_up >= C) {
            hi = std::min(hi, g - epsilon);
        } else if (a_dn >= C) {
            lo = std::max(lo, g + epsilon);
        }
    }
    if (bcount > 0) {
        res.bias = bsum / bcount;
    } else if (std::isfinite(lo) && std::isfinite(hi)) {
        res.bias = 0.5 * (lo + hi);
    } else if (std::isfinite(lo)) {
        res.bias = lo;
    } else if (std::isfinite(hi)) {
        res.bias = hi;
    }

    // dual objective, maximization form
    double quad = 0.0, lin = 0.0, l1 = 0.0;
    for (int p = 0; p < n; ++p) {
        quad += res.beta[p] * kb[p];
        lin += y[p] * res.beta[p];
        l1 += alpha[p] + alpha[n + p];
    }
    res.dual_objective = -0.5 * quad + lin - epsilon * l1;
    return res;
}

inline Eigen::MatrixXd rbf_kernel(const std::vector<Eigen::Vector2d>& pts, double gamma) {
    const int n = static_cast<int>(pts.size());
    Eigen::MatrixXd K(n, n);
    for (int a = 0; a < n; ++a) {
        K(a, a) = 1.0;
        for (int b = a + 1; b < n; ++b) {
            const double k = std::exp(-gamma * (pts[a] - pts[b]).squaredNorm());
            K(a, b) = k;
            K(b, a) = k;
        }
    }
    return K;
}

}  // namespace detail

struct SvrModel {
    std::string component;  // "u" or "v"
    std::vector<Eigen::Vector2d> support_vectors;  // original (meter) coordinates
    std::vector<double> dual_coeffs;
    double bias = 0.0;
    double gamma = 1.0;
    double C = 1.0;
    double epsilon = 0.1;
    CoordScaler scaler;

    double predict(double x, double y) const {
        const Eigen::Vector2d q = scaler.apply({x, y});
        double f = bias;
        for (std::size_t s = 0; s < support_vectors.size(); ++s)
            f += dual_coeffs[s] *
                 std::exp(-gamma * (scaler.apply(support_vectors[s]) - q).squaredNorm());
        return f;
    }
    // sum |alpha_i| + |b|, a hard bound on |prediction|
    double prediction_bound() const {
        double s = std::abs(bias);
        for (const double a : dual_coeffs) s += std::abs(a);
        return s;
    }
};

struct SvrTrainInfo {
    double dual_objective = 0.0;
    double kkt_violation = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct SvrModels {
    SvrModel u, v;
    SvrTrainInfo info_u, info_v;
};

inline SvrModels train_svr(const std::vector<Observation>& obs, double C, double epsilon,
                           double gamma, double tol = 1e-4) {
    if (obs.size() < 2) throw std::invalid_argument("train_svr: need at least 2 observations");
    if (!(C > 0.0) || !(gamma > 0.0) || epsilon < 0.0)
        throw std::invalid_argument("train_svr: require C > 0, gamma > 0, epsilon >= 0");

    std::vector<Eigen::Vector2d> pts;
    pts.reserve(obs.size());
    for (const Observation& o : obs) pts.push_back({o.x, o.y});
    bool all_same = true;
    for (const auto& p : pts) all_same = all_same && (p - pts[0]).norm() == 0.0;
    if (all_same) throw std::invalid_argument("train_svr: all observation positions identical");

    const CoordScaler scaler = CoordScaler::fit(pts);
    std::vector<Eigen::Vector2d> norm;
    norm.reserve(pts.size());
    for (const auto& p : pts) norm.push_back(scaler.apply(p));
    const Eigen::MatrixXd K = detail::rbf_kernel(norm, gamma);

    SvrModels out;
    for (int comp = 0; comp < 2; ++comp) {
        std::vector<double> y(obs.size());
        for (std::size_t i = 0; i < obs.size(); ++i) y[i] = comp == 0 ? obs[i].u : obs[i].v;
        const auto sol = detail::smo_train(K, y, C, epsilon, tol);
        SvrModel& m = comp == 0 ? out.u : out.v;
        SvrTrainInfo& info = comp == 0 ? out.info_u : out.info_v;
        m.component = comp == 0 ? "u" : "v";
        m.gamma = gamma;
        m.C = C;
        m.epsilon = epsilon;
        m.scaler = scaler;
        for (std::size_t i = 0; i < obs.size(); ++i) {
            if (sol.beta[i] == 0.0) continue;
            m.support_vectors.push_back(pts[i]);
            m.dual_coeffs.push_back(sol.beta[i]);
        }
        m.bias = sol.bias;
        info = {sol.dual_objective, sol.kkt_violation, sol.iterations, sol.converged};
    }
    return out;
}

inline double rho_speed(double u_true, double v_true, double u_pred, double v_pred) {
    return std::hypot(u_true - u_pred, v_true - v_pred);
}

struct GridSearchResult {
    double C = 1.0, epsilon = 0.1, gamma = 1.0;
    double cv_score = 0.0;
    struct Entry {
        double C, epsilon, gamma, score;
    };
    std::vector<Entry> table;
};

// Exhaustive k-fold cross validation scored by mean rho_speed on the held-out
// observations; ties resolve to the smallest (C, epsilon, gamma).
inline GridSearchResult grid_search_cv(const std::vector<Observation>& obs,
                                       std::vector<double> C_grid, std::vector<double> eps_grid,
                                       std::vector<double> gamma_grid, int folds,
                                       std::uint64_t seed) {
    if (folds < 2) throw std::invalid_argument("grid_search_cv: folds must be >= 2");
    if (C_grid.empty() || eps_grid.empty() || gamma_grid.empty())
        throw std::invalid_argument("grid_search_cv: empty grid");
    if (obs.size() < static_cast<std::size_t>(folds))
        throw std::invalid_argument("grid_search_cv: fewer observations than folds");
    std::sort(C_grid.begin(), C_grid.end());
    std::sort(eps_grid.begin(), eps_grid.end());
    std::sort(gamma_grid.begin(), gamma_grid.end());

    std::vector<std::size_t> order(obs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    auto eng = make_engine(seed, 0xCF01D5ULL);
    shuffle_inplace(order, eng);
    std::vector<int> fold_of(obs.size());
    for (std::size_t i = 0; i < order.size(); ++i) fold_of[order[i]] = static_cast<int>(i % folds);

    GridSearchResult best;
    best.cv_score = std::numeric_limits<double>::infinity();
    for (const double C : C_grid) {
        for (const double eps : eps_grid) {
            for (const double gamma : gamma_grid) {
                double score = 0.0;
                int scored_folds = 0;
                for (int f = 0; f < folds; ++f) {
                    std::vector<Observation> train, held;
                    for (std::size_t i = 0; i < obs.size(); ++i)
                        (fold_of[i] == f ? held : train).push_back(obs[i]);
                    if (train.size() < 2 || held.empty()) continue;
                    const SvrModels m = train_svr(train, C, eps, gamma);
                    double rho = 0.0;
                    for (const Observation& o : held)
                        rho += rho_speed(o.u, o.v, m.u.predict(o.x, o.y), m.v.predict(o.x, o.y));
                    score += rho / static_cast<double>(held.size());
                    ++scored_folds;
                }
                score /= std::max(1, scored_folds);
                best.table.push_back({C, eps, gamma, score});
                if (score < best.cv_score) {
                    best.cv_score = score;
                    best.C = C;
                    best.epsilon = eps;
                    best.gamma = gamma;
                }
            }
        }
    }
    return best;
}

// Evaluates both models at every water cell center; land cells stay zero.
inline VelocityField predict_field(const SvrModel& model_u, const SvrModel& model_v,
                                   const VelocityField& geometry) {
    VelocityField out(geometry.rows(), geometry.cols(), geometry.cell_size(), geometry.x0(),
                      geometry.y0());
    for (int i = 0; i < geometry.rows(); ++i)
        for (int j = 0; j < geometry.cols(); ++j) {
            if (!geometry.water(i, j)) {
                out.set_land(i, j);
                continue;
            }
            out.set(i, j, model_u.predict(geometry.center_x(j), geometry.center_y(i)),
                    model_v.predict(geometry.center_x(j), geometry.center_y(i)));
        }
    return out;
}

struct ErrorReport {
    int rows = 0, cols = 0;
    std::vector<double> rho;  // per cell, NaN on land
    double mean = 0.0;
    double median = 0.0;
    std::vector<double> cdf_values;     // sorted rho over water cells
    std::vector<double> cdf_fractions;  // cumulative fractions, ending at 1
};

inline ErrorReport error_report(const VelocityField& truth, const VelocityField& predicted) {
    if (truth.rows() != predicted.rows() || truth.cols() != predicted.cols() ||
        truth.mask_data() != predicted.mask_data())
        throw std::invalid_argument("error_report: geometry mismatch");
    ErrorReport rep;
    rep.rows = truth.rows();
    rep.cols = truth.cols();
    rep.rho.assign(static_cast<std::size_t>(truth.rows()) * truth.cols(),
                   std::numeric_limits<double>::quiet_NaN());
    std::vector<double> water;
    for (int i = 0; i < truth.rows(); ++i)
        for (int j = 0; j < truth.cols(); ++j) {
            if (!truth.water(i, j)) continue;
            const double r = rho_speed(truth.u(i, j), truth.v(i, j), predicted.u(i, j),
                                       predicted.v(i, j));
            rep.rho[truth.idx(i, j)] = r;
            water.push_back(r);
        }
    if (water.empty()) throw std::invalid_argument("error_report: no water cells");
    std::sort(water.begin(), water.end());
    double sum = 0.0;
    for (const double r : water) sum += r;
    rep.mean = sum / static_cast<double>(water.size());
    const std::size_t n = water.size();
    rep.median = n % 2 ? water[n / 2] : 0.5 * (water[n / 2 - 1] + water[n / 2]);
    rep.cdf_values = water;
    rep.cdf_fractions.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        rep.cdf_fractions[i] = static_cast<double>(i + 1) / static_cast<double>(n);
    return rep;
}

struct StrategyComparison {
    struct Row {
        std::string strategy;
        double mean = 0.0, median = 0.0;
        double ratio_uniform = std::numeric_limits<double>::quiet_NaN();  // mean(uniform)/mean(strategy)
    };
    std::vector<Row> rows;
    std::vector<std::vector<double>> pairwise;  // mean(row i) / mean(row j)
};

inline StrategyComparison compare_strategies(const std::map<std::string, ErrorReport>& reports) {
    if (reports.size() < 2) throw std::invalid_argument("compare_strategies: need >= 2 strategies");
    StrategyComparison cmp;
    double uniform_mean = std::numeric_limits<double>::quiet_NaN();
    for (const auto& [name, rep] : reports)
        if (name == "uniform") uniform_mean = rep.mean;
    for (const auto& [name, rep] : reports) {
        StrategyComparison::Row row;
        row.strategy = name;
        row.mean = rep.mean;
        row.median = rep.median;
        if (std::isfinite(uniform_mean) && rep.mean > 0.0) row.ratio_uniform = uniform_mean / rep.mean;
        cmp.rows.push_back(row);
    }
    cmp.pairwise.assign(cmp.rows.size(), std::vector<double>(cmp.rows.size(), 1.0));
    for (std::size_t a = 0; a < cmp.rows.size(); ++a)
        for (std::size_t b = 0; b < cmp.rows.size(); ++b)
            cmp.pairwise[a][b] = cmp.rows[b].mean > 0.0
                                     ? cmp.rows[a].mean / cmp.rows[b].mean
                                     : std::numeric_limits<double>::quiet_NaN();
    return cmp;
}

inline void save_error_csv(const ErrorReport& rep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_error_csv: cannot open " + path);
    out << "i,j,rho\n";
    for (int i = 0; i < rep.rows; ++i)
        for (int j = 0; j < rep.cols; ++j) {
            const double r = rep.rho[static_cast<std::size_t>(i) * rep.cols + j];
            if (std::isnan(r)) continue;
            out << i << ',' << j << ',' << detail::fmt17(r) << '\n';
        }
}

inline void save_cdf_csv(const ErrorReport& rep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_cdf_csv: cannot open " + path);
    out << "value,fraction\n";
    for (std::size_t i = 0; i < rep.cdf_values.size(); ++i)
        out << detail::fmt17(rep.cdf_values[i]) << ',' << detail::fmt17(rep.cdf_fractions[i]) << '\n';
}

inline nlohmann::json svr_model_to_json(const SvrModel& m) {
    nlohmann::json svs = nlohmann::json::array();
    for (std::size_t s = 0; s < m.support_vectors.size(); ++s)
        svs.push_back({m.support_vectors[s].x(), m.support_vectors[s].y(), m.dual_coeffs[s]});
    return {{"component", m.component},
            {"gamma", m.gamma},
            {"bias", m.bias},
            {"svs", std::move(svs)},
            {"C", m.C},
            {"epsilon", m.epsilon},
            {"norm",
             {{"x_off", m.scaler.x_off},
              {"y_off", m.scaler.y_off},
              {"x_scale", m.scaler.x_scale},
              {"y_scale", m.scaler.y_scale}}}};
}

inline SvrModel svr_model_from_json(const nlohmann::json& j) {
    SvrModel m;
    m.component = j.at("component").get<std::string>();
    m.gamma = j.at("gamma").get<double>();
    m.bias = j.at("bias").get<double>();
    m.C = j.value("C", 1.0);
    m.epsilon = j.value("epsilon", 0.1);
    for (const auto& sv : j.at("svs")) {
        m.support_vectors.push_back({sv.at(0).get<double>(), sv.at(1).get<double>()});
        m.dual_coeffs.push_back(sv.at(2).get<double>());
    }
    if (j.contains("norm")) {
        m.scaler.x_off = j["norm"].at("x_off").get<double>();
        m.scaler.y_off = j["norm"].at("y_off").get<double>();
        m.scaler.x_scale = j["norm"].at("x_scale").get<double>();
        m.scaler.y_scale = j["norm"].at("y_scale").get<double>();
    }
    return m;
}

// Linear baseline: per-component weighted least squares on (1, x, y).
struct LinearModel {
    Eigen::Vector3d coef_u = Eigen::Vector3d::Zero();
    Eigen::Vector3d coef_v = Eigen::Vector3d::Zero();

    Eigen::Vector2d predict(double x, double y) const {
        const Eigen::Vector3d f(1.0, x, y);
        return {coef_u.dot(f), coef_v.dot(f)};
    }
};

inline LinearModel train_linear(const std::vector<Observation>& obs,
                                const std::vector<double>& weights = {}) {
    if (obs.size() < 3) throw std::invalid_argument("train_linear: need at least 3 observations");
    Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
    Eigen::Vector3d bu = Eigen::Vector3d::Zero(), bv = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        const Eigen::Vector3d f(1.0, obs[i].x, obs[i].y);
        A += w * f * f.transpose();
        bu += w * obs[i].u * f;
        bv += w * obs[i].v * f;
    }
    LinearModel m;
    m.coef_u = A.ldlt().solve(bu);
    m.coef_v = A.ldlt().solve(bv);
    return m;
}

}  // namespace driftplan
