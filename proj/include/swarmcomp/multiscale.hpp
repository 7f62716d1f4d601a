#pragma once

#include "swarmcomp/structure_graph.hpp"

namespace sc {

struct EmptyGraph : std::runtime_error {
    explicit EmptyGraph(const std::string& what) : std::runtime_error(what) {}
};

/// Monotone edge-weight filtration over a fixed node set: level l keeps the
/// edges with w >= thresholds[l], so levels are nested by construction.
struct Filtration {
    std::vector<double> thresholds;        // descending
    std::vector<SimilarityGraph> levels;   // same node set at every level
    bool collapsed_duplicates = false;     // duplicate quantile values occurred
};

struct SankeyFlow {
    int level = 0;        // source level index
    std::string from;     // community label or "Other"
    std::string to;       // at level + 1
    int flow = 0;         // |C ∩ D| in nodes
};

struct SpectralSummary {
    std::vector<double> eigenvalues;  // normalized Laplacian on the giant
    double von_neumann_entropy = 0.0;
    int giant_size = 0;
};

struct RolesReport {
    std::vector<int> role;             // role label per node
    std::vector<double> bridge_index;  // B_i in [0,1], time-ordered by node
    std::vector<std::array<double, 4>> features;  // z-scored [deg, strength, clust, btw]
};

struct MotifReport {
    long long triangles = 0;
    long long four_cycles = 0;  // common-neighbor approximation
    double z_triangle = 0.0;
    double z_four_cycle = 0.0;
    bool z_triangle_defined = true;
    bool z_four_cycle_defined = true;
};

struct DiffusionSummary {
    std::vector<double> return_curve;  // r_t, t = 1..t_max
    double spectral_gap = 0.0;         // 1 - |lambda_2(P)| on the giant
    int giant_size = 0;
};

inline const std::vector<double> kDefaultQuantiles = {0.95, 0.9, 0.8, 0.7,
                                                      0.6,  0.5, 0.3, 0.1};

Filtration build_filtration(const SimilarityGraph& g,
                            const std::vector<double>& quantiles = kDefaultQuantiles);

/// Mean best-match Jaccard between two labelings of the same node set.
double jaccard_persistence(const std::vector<int>& coarse, const std::vector<int>& fine);

/// Flow table between consecutive level partitions; only the top_K largest
/// communities per level keep their identity, the rest merge into "Other".
/// Labels are stable "birth" identities: a community inherits the label of
/// the previous-level community it overlaps most.
std::vector<SankeyFlow> sankey_flows(const std::vector<std::vector<int>>& partitions,
                                     int top_k = 6);

SpectralSummary spectral_summary(const SimilarityGraph& g);

/// Total variation of a node signal: sum over edges of w * (x_u - x_v)^2.
double signal_tv(const SimilarityGraph& g, const std::vector<double>& signal);
std::vector<double> time_signal(const SimilarityGraph& g);
std::vector<double> degree_signal(const SimilarityGraph& g);

RolesReport roles_and_bridges(const SimilarityGraph& g, const std::vector<int>& communities,
                              int k_roles = 3, std::uint64_t seed = 0);

MotifReport motif_zscores(const SimilarityGraph& g, int n_null = 20, int swaps = -1,
                          std::uint64_t seed = 0);  // swaps < 0 -> 10 * |E|

/// One degree-preserving randomization via repeated double-edge swaps.
SimilarityGraph double_edge_swap(const SimilarityGraph& g, int attempts, std::mt19937_64& rng);

DiffusionSummary diffusion_summary(const SimilarityGraph& g, int t_max = 32);

/// Full multiscale report for the CLI: per-level metrics, persistence curve,
/// sankey table and full-graph signatures.
json multiscale_report(const SimilarityGraph& g, const std::vector<double>& quantiles,
                       int top_k, int n_null, std::uint64_t seed);

}  // namespace sc
