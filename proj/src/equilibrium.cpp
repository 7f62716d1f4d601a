#include "swarmcomp/equilibrium.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "swarmcomp/policy.hpp"

namespace sc {
namespace {

constexpr double kEps = 1e-12;

int trait_index(const std::string& name) {
    const auto& names = PersonalityVector::trait_names();
    for (std::size_t i = 0; i < names.size(); ++i)
        if (name == names[i]) return static_cast<int>(i);
    try {
        return std::stoi(name);
    } catch (...) {
        throw std::invalid_argument("unknown trait: " + name);
    }
}

struct Row {
    int iteration;
    int agent;  // 1-based in transport, 0-based internally
    int trait;
    double value;
};

TraitTrajectory from_rows(std::vector<Row> rows) {
    TraitTrajectory traj;
    if (rows.empty()) return traj;
    int t_max = 0, a_max = 0, k_max = 0;
    for (const auto& r : rows) {
        t_max = std::max(t_max, r.iteration);
        a_max = std::max(a_max, r.agent);
        k_max = std::max(k_max, r.trait);
    }
    traj.n_agents = a_max + 1;
    traj.n_traits = k_max + 1;
    traj.value.assign(static_cast<std::size_t>(t_max + 1),
                      std::vector<std::vector<double>>(
                          static_cast<std::size_t>(traj.n_agents),
                          std::vector<double>(static_cast<std::size_t>(traj.n_traits), 0.0)));
    traj.mask.assign(static_cast<std::size_t>(t_max + 1),
                     std::vector<std::vector<bool>>(
                         static_cast<std::size_t>(traj.n_agents),
                         std::vector<bool>(static_cast<std::size_t>(traj.n_traits), false)));
    for (const auto& r : rows) {
        traj.value[static_cast<std::size_t>(r.iteration)][static_cast<std::size_t>(r.agent)]
                  [static_cast<std::size_t>(r.trait)] = r.value;
        traj.mask[static_cast<std::size_t>(r.iteration)][static_cast<std::size_t>(r.agent)]
                 [static_cast<std::size_t>(r.trait)] = true;
    }
    return traj;
}

}  // namespace

TraitTrajectory TraitTrajectory::from_json(const json& j) {
    if (j.is_array()) {
        std::vector<Row> rows;
        for (const auto& e : j) {
            Row r;
            r.iteration = e.at("iteration").get<int>();
            r.agent = e.at("agent").get<int>() - 1;
            if (e.at("trait").is_string())
                r.trait = trait_index(e.at("trait").get<std::string>());
            else
                r.trait = e.at("trait").get<int>();
            r.value = e.at("value").get<double>();
            if (r.agent < 0 || r.iteration < 0 || r.trait < 0)
                throw std::invalid_argument("trajectory row out of range");
            rows.push_back(r);
        }
        return from_rows(std::move(rows));
    }
    if (j.contains("trajectory")) {
        const auto& t = j.at("trajectory");  // [t][agent][trait]
        TraitTrajectory traj;
        for (const auto& snap : t) {
            std::vector<std::vector<double>> values;
            std::vector<std::vector<bool>> masks;
            for (const auto& agent : snap) {
                std::vector<double> v = agent.get<std::vector<double>>();
                masks.emplace_back(v.size(), true);
                values.push_back(std::move(v));
            }
            traj.value.push_back(std::move(values));
            traj.mask.push_back(std::move(masks));
        }
        if (!traj.value.empty()) {
            traj.n_agents = static_cast<int>(traj.value.front().size());
            traj.n_traits =
                traj.n_agents > 0 ? static_cast<int>(traj.value.front().front().size()) : 0;
        }
        return traj;
    }
    throw std::invalid_argument("unrecognized trajectory JSON shape");
}

TraitTrajectory TraitTrajectory::from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<Row> rows;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line.find("iteration") != std::string::npos) continue;  // header
        }
        std::istringstream ls(line);
        std::string it, agent, trait, value;
        if (!std::getline(ls, it, ',') || !std::getline(ls, agent, ',') ||
            !std::getline(ls, trait, ',') || !std::getline(ls, value, ','))
            throw std::invalid_argument("bad trajectory CSV line: " + line);
        Row r;
        r.iteration = std::stoi(it);
        r.agent = std::stoi(agent) - 1;
        r.trait = trait_index(trait);
        r.value = std::stod(value);
        rows.push_back(r);
    }
    return from_rows(std::move(rows));
}

TraitTrajectory TraitTrajectory::from_tensor(
    const std::vector<std::vector<std::array<double, 5>>>& tensor) {
    TraitTrajectory traj;
    for (const auto& snap : tensor) {
        std::vector<std::vector<double>> values;
        std::vector<std::vector<bool>> masks;
        for (const auto& agent : snap) {
            values.emplace_back(agent.begin(), agent.end());
            masks.emplace_back(5, true);
        }
        traj.value.push_back(std::move(values));
        traj.mask.push_back(std::move(masks));
    }
    if (!traj.value.empty()) {
        traj.n_agents = static_cast<int>(traj.value.front().size());
        traj.n_traits = 5;
    }
    return traj;
}

std::vector<std::optional<double>> mean_step_change(const TraitTrajectory& traj) {
    std::vector<std::optional<double>> out;
    for (int t = 0; t + 1 < traj.n_steps(); ++t) {
        double sum = 0.0;
        int count = 0;
        for (int i = 0; i < traj.n_agents; ++i) {
            for (int k = 0; k < traj.n_traits; ++k) {
                if (traj.mask[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)]
                             [static_cast<std::size_t>(k)] &&
                    traj.mask[static_cast<std::size_t>(t + 1)][static_cast<std::size_t>(i)]
                             [static_cast<std::size_t>(k)]) {
                    sum += std::abs(
                        traj.value[static_cast<std::size_t>(t + 1)][static_cast<std::size_t>(i)]
                                  [static_cast<std::size_t>(k)] -
                        traj.value[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)]
                                  [static_cast<std::size_t>(k)]);
                    ++count;
                }
            }
        }
        if (count > 0)
            out.emplace_back(sum / count);
        else
            out.emplace_back(std::nullopt);
    }
    return out;
}

std::vector<std::vector<double>> path_neighbor_matrix(int n_agents) {
    std::vector<std::vector<double>> p(
        static_cast<std::size_t>(n_agents),
        std::vector<double>(static_cast<std::size_t>(n_agents), 0.0));
    if (n_agents == 1) {
        p[0][0] = 1.0;  // degenerate single node averages itself
        return p;
    }
    for (int i = 0; i < n_agents; ++i) {
        if (i == 0)
            p[0][1] = 1.0;
        else if (i == n_agents - 1)
            p[static_cast<std::size_t>(i)][static_cast<std::size_t>(i - 1)] = 1.0;
        else {
            p[static_cast<std::size_t>(i)][static_cast<std::size_t>(i - 1)] = 0.5;
            p[static_cast<std::size_t>(i)][static_cast<std::size_t>(i + 1)] = 0.5;
        }
    }
    return p;
}

BestResponseFit fit_best_response(const TraitTrajectory& traj) {
    BestResponseFit fit;
    fit.n_agents = traj.n_agents;
    const int n = traj.n_agents;
    if (n < 2) throw std::invalid_argument("fit_best_response needs >= 2 agents");

    auto neighbor_mean = [&](int t, int i, int k, double& out) {
        // require every path neighbor observed at t
        double sum = 0.0;
        int cnt = 0;
        for (int j : {i - 1, i + 1}) {
            if (j < 0 || j >= n) continue;
            if (!traj.mask[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)]
                          [static_cast<std::size_t>(k)])
                return false;
            sum += traj.value[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)]
                             [static_cast<std::size_t>(k)];
            ++cnt;
        }
        if (cnt == 0) return false;
        out = sum / cnt;
        return true;
    };

    Eigen::MatrixXd pmat(n, n);
    {
        auto p = path_neighbor_matrix(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) pmat(i, j) = p[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }

    for (int k = 0; k < traj.n_traits; ++k) {
        std::vector<std::array<double, 3>> x_rows;  // [x, xbar, 1]
        std::vector<double> y_rows;
        for (int t = 0; t + 1 < traj.n_steps(); ++t) {
            for (int i = 0; i < n; ++i) {
                if (!traj.mask[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)]
                              [static_cast<std::size_t>(k)] ||
                    !traj.mask[static_cast<std::size_t>(t + 1)][static_cast<std::size_t>(i)]
                              [static_cast<std::size_t>(k)])
                    continue;
                double xbar;
                if (!neighbor_mean(t, i, k, xbar)) continue;
                x_rows.push_back({traj.value[static_cast<std::size_t>(t)]
                                            [static_cast<std::size_t>(i)]
                                            [static_cast<std::size_t>(k)],
                                  xbar, 1.0});
                y_rows.push_back(traj.value[static_cast<std::size_t>(t + 1)]
                                           [static_cast<std::size_t>(i)]
                                           [static_cast<std::size_t>(k)]);
            }
        }
        if (x_rows.size() < 3)
            throw std::invalid_argument("fit_best_response: fewer than 3 pooled transitions");

        Eigen::MatrixXd X(static_cast<Eigen::Index>(x_rows.size()), 3);
        Eigen::VectorXd Y(static_cast<Eigen::Index>(y_rows.size()));
        for (std::size_t r = 0; r < x_rows.size(); ++r) {
            X(static_cast<Eigen::Index>(r), 0) = x_rows[r][0];
            X(static_cast<Eigen::Index>(r), 1) = x_rows[r][1];
            X(static_cast<Eigen::Index>(r), 2) = x_rows[r][2];
            Y(static_cast<Eigen::Index>(r)) = y_rows[r];
        }

        TraitFit tf;
        tf.n = static_cast<int>(x_rows.size());
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
        qr.setThreshold(1e-10);
        tf.rank_deficient = qr.rank() < 3;
        Eigen::Vector3d beta = qr.solve(Y);
        tf.alpha = beta(0);
        tf.beta = beta(1);
        tf.gamma = beta(2);

        Eigen::VectorXd resid = Y - X * beta;
        double ss_res = resid.squaredNorm();
        double y_mean = Y.mean();
        double ss_tot = (Y.array() - y_mean).matrix().squaredNorm();
        tf.r_squared = ss_tot > kEps ? 1.0 - ss_res / ss_tot : (ss_res <= kEps ? 1.0 : 0.0);

        Eigen::MatrixXd m = tf.alpha * Eigen::MatrixXd::Identity(n, n) + tf.beta * pmat;
        Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
        double rho = 0.0;
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
            rho = std::max(rho, std::abs(es.eigenvalues()(i)));
        tf.rho = rho;
        fit.traits.push_back(tf);
    }
    return fit;
}

std::vector<double> iterate_model(const BestResponseFit& fit,
                                  const std::vector<std::vector<double>>& x0, int steps) {
    const int n = fit.n_agents;
    const int n_traits = static_cast<int>(fit.traits.size());
    auto p = path_neighbor_matrix(n);

    std::vector<std::vector<double>> x = x0;  // [agent][trait]
    std::vector<double> out;
    for (int t = 0; t < steps; ++t) {
        std::vector<std::vector<double>> next(
            static_cast<std::size_t>(n),
            std::vector<double>(static_cast<std::size_t>(n_traits), 0.0));
        double delta = 0.0;
        for (int k = 0; k < n_traits; ++k) {
            const auto& tf = fit.traits[static_cast<std::size_t>(k)];
            for (int i = 0; i < n; ++i) {
                double xbar = 0.0;
                for (int j = 0; j < n; ++j)
                    xbar += p[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] *
                            x[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
                double v = tf.alpha * x[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] +
                           tf.beta * xbar + tf.gamma;
                next[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = v;
                delta += std::abs(v - x[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]);
            }
        }
        out.push_back(delta / (static_cast<double>(n) * n_traits));
        x = std::move(next);
    }
    return out;
}

Calibration calibrate(const std::vector<double>& observed, const std::vector<double>& model) {
    std::size_t n = std::min(observed.size(), model.size());
    if (n < 2) throw std::invalid_argument("calibrate needs >= 2 overlapping points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += model[i];
        my += observed[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (model[i] - mx) * (model[i] - mx);
        sxy += (model[i] - mx) * (observed[i] - my);
    }
    Calibration c;
    if (sxx <= kEps) {
        c.degenerate = true;
        c.lambda = 0.0;
        c.delta = my;
    } else {
        c.lambda = sxy / sxx;
        c.delta = my - c.lambda * mx;
    }
    return c;
}

ResidualReport fixed_point_residuals(const BestResponseFit& fit,
                                     const std::vector<std::vector<double>>& x_terminal) {
    const int n = fit.n_agents;
    const int n_traits = static_cast<int>(fit.traits.size());
    auto p = path_neighbor_matrix(n);
    ResidualReport out;
    out.residual.assign(static_cast<std::size_t>(n),
                        std::vector<double>(static_cast<std::size_t>(n_traits), 0.0));
    for (int k = 0; k < n_traits; ++k) {
        const auto& tf = fit.traits[static_cast<std::size_t>(k)];
        for (int i = 0; i < n; ++i) {
            double xbar = 0.0;
            for (int j = 0; j < n; ++j)
                xbar += p[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] *
                        x_terminal[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
            double f = tf.alpha * x_terminal[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] +
                       tf.beta * xbar + tf.gamma;
            double r = std::abs(f - x_terminal[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]);
            out.residual[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = r;
            out.epsilon = std::max(out.epsilon, r);
        }
    }
    return out;
}

json BestResponseFit::to_json() const {
    json traits_json = json::array();
    const auto& names = PersonalityVector::trait_names();
    for (std::size_t k = 0; k < traits.size(); ++k) {
        const auto& t = traits[k];
        std::string trait_name = k < names.size() ? names[k] : std::to_string(k);
        traits_json.push_back({{"trait", trait_name},
                               {"alpha", t.alpha},
                               {"beta", t.beta},
                               {"gamma", t.gamma},
                               {"r_squared", t.r_squared},
                               {"n", t.n},
                               {"rho", t.rho},
                               {"rank_deficient", t.rank_deficient}});
    }
    return {{"n_agents", n_agents}, {"traits", traits_json}};
}

json ResidualReport::to_json() const {
    return {{"residuals", residual}, {"epsilon", epsilon}};
}

std::string ResidualReport::to_csv() const {
    std::string out = "agent";
    const auto& names = PersonalityVector::trait_names();
    std::size_t n_traits = residual.empty() ? 0 : residual.front().size();
    for (std::size_t k = 0; k < n_traits; ++k)
        out += "," + (k < names.size() ? std::string(names[k]) : std::to_string(k));
    out += "\n";
    for (std::size_t i = 0; i < residual.size(); ++i) {
        out += std::to_string(i + 1);
        for (double r : residual[i]) {
            char buf[40];
            std::snprintf(buf, sizeof(buf), ",%.17g", r);
            out += buf;
        }
        out += "\n";
    }
    return out;
}

json equilibrium_report(const TraitTrajectory& traj) {
    json j;
    auto deltas = mean_step_change(traj);
    json dj = json::array();
    std::vector<double> observed;
    for (const auto& d : deltas) {
        dj.push_back(d ? json(*d) : json());
        if (d) observed.push_back(*d);
    }
    j["mean_step_change"] = dj;

    auto fit = fit_best_response(traj);
    j["fit"] = fit.to_json();

    // model overlay from the first snapshot (unobserved entries -> 0.5)
    std::vector<std::vector<double>> x0(
        static_cast<std::size_t>(traj.n_agents),
        std::vector<double>(static_cast<std::size_t>(traj.n_traits), 0.5));
    for (int i = 0; i < traj.n_agents; ++i)
        for (int k = 0; k < traj.n_traits; ++k)
            if (traj.mask.front()[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)])
                x0[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
                    traj.value.front()[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    auto model = iterate_model(fit, x0, traj.n_steps() - 1);
    j["model_step_change"] = model;

    // calibration over steps where the observed value exists
    std::vector<double> obs_cal, mod_cal;
    for (std::size_t t = 0; t < deltas.size() && t < model.size(); ++t) {
        if (deltas[t]) {
            obs_cal.push_back(*deltas[t]);
            mod_cal.push_back(model[t]);
        }
    }
    if (obs_cal.size() >= 2) j["calibration"] = calibrate(obs_cal, mod_cal).to_json();

    // terminal snapshot (unobserved entries carry the last observed value)
    std::vector<std::vector<double>> xt = x0;
    for (int t = 0; t < traj.n_steps(); ++t)
        for (int i = 0; i < traj.n_agents; ++i)
            for (int k = 0; k < traj.n_traits; ++k)
                if (traj.mask[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)]
                             [static_cast<std::size_t>(k)])
                    xt[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
                        traj.value[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)]
                                  [static_cast<std::size_t>(k)];
    auto residuals = fixed_point_residuals(fit, xt);
    j["residuals"] = residuals.to_json();
    return j;
}

}  // namespace sc
