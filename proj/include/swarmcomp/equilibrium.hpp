#pragma once

#include <optional>

#include "swarmcomp/score.hpp"

namespace sc {

struct RankDeficient : std::runtime_error {
    explicit RankDeficient(const std::string& what) : std::runtime_error(what) {}
};

/// Trait trajectory tensor x[t][agent][trait] with an observation mask of the
/// same shape. Agents 0..N-1 sit on a path interaction graph in index order.
struct TraitTrajectory {
    int n_agents = 0;
    int n_traits = 0;
    // value[t][i][k], valid iff mask[t][i][k]
    std::vector<std::vector<std::vector<double>>> value;
    std::vector<std::vector<std::vector<bool>>> mask;

    int n_steps() const { return static_cast<int>(value.size()); }

    static TraitTrajectory from_json(const json& j);
    static TraitTrajectory from_csv(const std::string& text);
    static TraitTrajectory from_tensor(
        const std::vector<std::vector<std::array<double, 5>>>& tensor);
};

struct TraitFit {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    double r_squared = 0.0;
    int n = 0;  // pooled transitions used
    double rho = 0.0;  // spectral radius of M = alpha*I + beta*P
    bool rank_deficient = false;
};

struct BestResponseFit {
    std::vector<TraitFit> traits;
    int n_agents = 0;

    json to_json() const;
};

struct Calibration {
    double lambda = 0.0;
    double delta = 0.0;
    bool degenerate = false;

    json to_json() const { return {{"lambda", lambda}, {"delta", delta}, {"degenerate", degenerate}}; }
};

struct ResidualReport {
    // residual[i][k] = |(M_k x + c_k)_i - x_{i,k}| at the terminal snapshot
    std::vector<std::vector<double>> residual;
    double epsilon = 0.0;  // max entry

    json to_json() const;
    std::string to_csv() const;
};

/// Mean absolute per-step change over observed (agent, trait) pairs;
/// absent (nullopt) when no pair is observed at both ends of a step.
std::vector<std::optional<double>> mean_step_change(const TraitTrajectory& traj);

/// Row-stochastic path-neighbor averaging matrix (interior agents average
/// both neighbors, ends take their single neighbor).
std::vector<std::vector<double>> path_neighbor_matrix(int n_agents);

BestResponseFit fit_best_response(const TraitTrajectory& traj);

/// Iterates x^{t+1} = M_k x^t + c_k per trait from x0 and returns the model
/// mean-step-change series of length `steps`.
std::vector<double> iterate_model(const BestResponseFit& fit,
                                  const std::vector<std::vector<double>>& x0, int steps);

Calibration calibrate(const std::vector<double>& observed, const std::vector<double>& model);

ResidualReport fixed_point_residuals(const BestResponseFit& fit,
                                     const std::vector<std::vector<double>>& x_terminal);

/// End-to-end report used by the CLI: fits, model overlay, calibration and
/// terminal residuals from one trajectory.
json equilibrium_report(const TraitTrajectory& traj);

}  // namespace sc
