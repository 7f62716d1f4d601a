#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

namespace sc {

using json = nlohmann::json;

struct InteractionRule {
    enum class Kind { LJ, Morse, SALR, Vicsek };
    Kind kind = Kind::LJ;

    // LJ
    double sigma = 1.0;
    double epsilon = 1.0;
    // Morse
    double d_e = 1.0;
    double alpha = 3.0;
    double r_e = 1.1;
    // SALR
    double a = 1.0;
    double sigma_a = 0.8;
    double b = 0.30;
    double sigma_r = 3.0;
    // Vicsek
    double r_v = 1.0;
    double eta = 0.25;
    double v0 = 0.03;

    double r_c = 2.5;

    static InteractionRule lj();
    static InteractionRule morse();
    static InteractionRule salr();
    static InteractionRule vicsek();
    static InteractionRule by_name(const std::string& name);
    std::string name() const;
};

struct AnnealSchedule {
    double t0 = 0.4;
    double t_min = 0.02;
    double p = 1.5;
    int steps = 3000;
};

/// 2-D periodic particle system, positions wrapped into [0, box)^2.
struct ParticleSystem {
    int n = 0;
    double box = 0.0;
    double rho = 0.0;
    std::vector<double> x, y;
    std::vector<double> theta;  // headings (Vicsek)
    std::mt19937_64 rng;
    int step_count = 0;
    long overlap_events = 0;

    // cached cell-linked neighbor list (rebuilt every 10 steps)
    std::vector<std::vector<int>> cell_bins;
    int cell_ncell = 0;
    double cell_size = 0.0;
    int cells_built_at = -1;
};

ParticleSystem init_system(int n = 1024, double rho = 0.8, std::uint64_t seed = 42);

/// Closed-form pair potential / radial force -dU/dr (positive = repulsive);
/// both zero beyond r_c (truncated without shifting).
double pair_potential(const InteractionRule& rule, double r);
double pair_force(const InteractionRule& rule, double r);

/// Net forces on every particle; `use_cells = false` forces the O(N^2)
/// reference path (used to validate the cell-linked list).
void compute_forces(ParticleSystem& sys, const InteractionRule& rule, std::vector<double>& fx,
                    std::vector<double>& fy, bool use_cells = true);

/// One Euler-Maruyama step of overdamped Langevin dynamics. Neighbor cells
/// are rebuilt every 10 steps.
void step_langevin(ParticleSystem& sys, const InteractionRule& rule, double temperature,
                   double dt = 1e-3, double mu = 1.0);

void step_vicsek(ParticleSystem& sys, const InteractionRule& rule, double dt = 1.0);

double temperature(int t, const AnnealSchedule& schedule);

/// g(r) = H(r) / (N * 2 pi r * dr * rho) with minimum-image pair distances;
/// returns (bin center, g) pairs up to r_max (default box/2).
std::vector<std::pair<double, double>> radial_distribution(const ParticleSystem& sys,
                                                           double dr = 0.05,
                                                           double r_max = -1.0);

/// |psi_6| per particle over neighbors within r_nb; zero-neighbor particles
/// get 0.
std::vector<double> hexatic_order(const ParticleSystem& sys, double r_nb = 1.5);

/// Neighbor counts within r, normalized by the maximum count.
std::vector<double> local_density(const ParticleSystem& sys, double r = 1.25);

double mean_potential_energy(ParticleSystem& sys, const InteractionRule& rule);
double polar_order(const ParticleSystem& sys);

/// Full protocol: init, anneal/integrate (or Vicsek), periodic observables.
/// When out_dir is nonempty writes config.csv, gr.csv, series.csv and
/// params.json there. Returns a JSON summary.
json run_experiment(const InteractionRule& rule, const AnnealSchedule& schedule,
                    std::uint64_t seed, const std::string& out_dir, int stride = 50,
                    int n = 1024, double rho = 0.8);

}  // namespace sc
