#include "swarmcomp/multiscale.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "swarmcomp/rng.hpp"

namespace sc {
namespace {

constexpr double kEps = 1e-12;

double quantile(std::vector<double> values, double q) {
    // linear interpolation between order statistics (type 7)
    std::sort(values.begin(), values.end());
    if (values.empty()) return 0.0;
    double pos = q * (static_cast<double>(values.size()) - 1.0);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    auto hi = static_cast<std::size_t>(std::ceil(pos));
    double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

std::vector<int> giant_nodes(const SimilarityGraph& g) {
    auto comp = connected_components(g);
    std::map<int, int> sizes;
    for (int c : comp) ++sizes[c];
    int giant = 0;
    for (auto& [c, s] : sizes)
        if (s > sizes[giant]) giant = c;
    std::vector<int> nodes;
    for (int i = 0; i < g.n; ++i)
        if (comp[static_cast<std::size_t>(i)] == giant) nodes.push_back(i);
    return nodes;
}

Eigen::MatrixXd weighted_adjacency(const SimilarityGraph& g, const std::vector<int>& nodes) {
    std::vector<int> index(static_cast<std::size_t>(g.n), -1);
    for (std::size_t i = 0; i < nodes.size(); ++i)
        index[static_cast<std::size_t>(nodes[i])] = static_cast<int>(i);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nodes.size()),
                                              static_cast<Eigen::Index>(nodes.size()));
    for (const auto& e : g.edges) {
        int u = index[static_cast<std::size_t>(e.u)], v = index[static_cast<std::size_t>(e.v)];
        if (u >= 0 && v >= 0) {
            a(u, v) += e.w;
            a(v, u) += e.w;
        }
    }
    return a;
}

std::map<int, std::set<int>> cluster_sets(const std::vector<int>& labels) {
    std::map<int, std::set<int>> out;
    for (std::size_t i = 0; i < labels.size(); ++i)
        out[labels[i]].insert(static_cast<int>(i));
    return out;
}

}  // namespace

Filtration build_filtration(const SimilarityGraph& g, const std::vector<double>& quantiles) {
    if (g.edges.empty()) throw EmptyGraph("filtration needs at least one edge");
    std::vector<double> weights;
    weights.reserve(g.edges.size());
    for (const auto& e : g.edges) weights.push_back(e.w);

    Filtration f;
    std::vector<double> qs(quantiles);
    std::sort(qs.rbegin(), qs.rend());  // descending quantiles -> descending thresholds
    for (double q : qs) {
        double tau = quantile(weights, q);
        if (!f.thresholds.empty() && std::abs(f.thresholds.back() - tau) <= kEps) {
            f.collapsed_duplicates = true;
            continue;
        }
        f.thresholds.push_back(tau);
    }
    for (double tau : f.thresholds) {
        SimilarityGraph level;
        level.n = g.n;
        level.k = g.k;
        level.source = "filtration";
        for (const auto& e : g.edges)
            if (e.w >= tau - kEps) level.edges.push_back(e);
        f.levels.push_back(std::move(level));
    }
    return f;
}

double jaccard_persistence(const std::vector<int>& coarse, const std::vector<int>& fine) {
    if (coarse.size() != fine.size())
        throw std::invalid_argument("jaccard_persistence: partitions over different node sets");
    auto cs = cluster_sets(coarse);
    auto fs = cluster_sets(fine);
    if (cs.empty()) return 0.0;
    double total = 0.0;
    for (auto& [lc, c] : cs) {
        double best = 0.0;
        for (auto& [lf, d] : fs) {
            std::vector<int> inter;
            std::set_intersection(c.begin(), c.end(), d.begin(), d.end(),
                                  std::back_inserter(inter));
            double uni = static_cast<double>(c.size() + d.size() - inter.size());
            if (uni > 0) best = std::max(best, static_cast<double>(inter.size()) / uni);
        }
        total += best;
    }
    return total / static_cast<double>(cs.size());
}

std::vector<SankeyFlow> sankey_flows(const std::vector<std::vector<int>>& partitions,
                                     int top_k) {
    if (partitions.size() < 2)
        throw std::invalid_argument("sankey_flows needs at least two levels");

    // Per-level display label per raw community: top_k largest keep identity,
    // the rest become "Other". Identity is inherited from the previous level's
    // most-overlapping labelled community (stable "birth" names).
    std::vector<std::map<int, std::string>> names(partitions.size());
    int birth_counter = 0;
    for (std::size_t l = 0; l < partitions.size(); ++l) {
        auto sets = cluster_sets(partitions[l]);
        std::vector<std::pair<int, int>> by_size;  // (-size, label)
        for (auto& [lab, s] : sets) by_size.push_back({-static_cast<int>(s.size()), lab});
        std::sort(by_size.begin(), by_size.end());
        int kept = 0;
        for (auto& [neg, lab] : by_size) {
            if (kept >= top_k) {
                names[l][lab] = "Other";
                continue;
            }
            ++kept;
            std::string name;
            if (l > 0) {
                // inherit the name of the previous-level community with the
                // largest overlap, if it is not "Other"
                std::map<std::string, int> overlap;
                for (int node : sets[lab]) {
                    int prev = partitions[l - 1][static_cast<std::size_t>(node)];
                    overlap[names[l - 1][prev]] += 1;
                }
                int best = 0;
                for (auto& [nm, cnt] : overlap)
                    if (nm != "Other" && cnt > best) {
                        best = cnt;
                        name = nm;
                    }
                // one successor per name: if taken, fall through to a new id
                for (auto& [other_lab, other_name] : names[l])
                    if (other_name == name) name.clear();
            }
            if (name.empty()) name = "C" + std::to_string(birth_counter++);
            names[l][lab] = name;
        }
    }

    std::vector<SankeyFlow> flows;
    for (std::size_t l = 0; l + 1 < partitions.size(); ++l) {
        std::map<std::pair<std::string, std::string>, int> counts;
        for (std::size_t node = 0; node < partitions[l].size(); ++node) {
            auto key = std::make_pair(names[l][partitions[l][node]],
                                      names[l + 1][partitions[l + 1][node]]);
            counts[key] += 1;
        }
        for (auto& [key, flow] : counts)
            flows.push_back({static_cast<int>(l), key.first, key.second, flow});
    }
    return flows;
}

SpectralSummary spectral_summary(const SimilarityGraph& g) {
    auto nodes = giant_nodes(g);
    if (nodes.size() < 2) throw DegenerateGraph("spectral_summary: giant component < 2 nodes");
    SpectralSummary out;
    out.giant_size = static_cast<int>(nodes.size());

    Eigen::MatrixXd a = weighted_adjacency(g, nodes);
    Eigen::VectorXd d = a.rowwise().sum();
    Eigen::VectorXd dinv = d.unaryExpr(
        [](double x) { return x > kEps ? 1.0 / std::sqrt(x) : 0.0; });
    Eigen::MatrixXd lap = Eigen::MatrixXd::Identity(a.rows(), a.cols()) -
                          dinv.asDiagonal() * a * dinv.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap);
    out.eigenvalues.assign(solver.eigenvalues().data(),
                           solver.eigenvalues().data() + solver.eigenvalues().size());
    for (double& ev : out.eigenvalues) ev = std::clamp(ev, 0.0, 2.0);

    double total = std::accumulate(out.eigenvalues.begin(), out.eigenvalues.end(), 0.0);
    if (total > kEps) {
        double h = 0.0;
        for (double ev : out.eigenvalues) {
            double p = ev / total;
            if (p > kEps) h -= p * std::log(p);
        }
        out.von_neumann_entropy = h;
    }
    return out;
}

double signal_tv(const SimilarityGraph& g, const std::vector<double>& signal) {
    if (static_cast<int>(signal.size()) != g.n)
        throw std::invalid_argument("signal_tv: signal length mismatch");
    double tv = 0.0;
    for (const auto& e : g.edges) {
        double d = signal[static_cast<std::size_t>(e.u)] - signal[static_cast<std::size_t>(e.v)];
        tv += e.w * d * d;
    }
    return tv;
}

std::vector<double> time_signal(const SimilarityGraph& g) {
    std::vector<double> x(static_cast<std::size_t>(g.n));
    std::iota(x.begin(), x.end(), 0.0);
    return x;
}

std::vector<double> degree_signal(const SimilarityGraph& g) {
    std::vector<double> x(static_cast<std::size_t>(g.n), 0.0);
    for (const auto& e : g.edges) {
        x[static_cast<std::size_t>(e.u)] += 1.0;
        x[static_cast<std::size_t>(e.v)] += 1.0;
    }
    return x;
}

RolesReport roles_and_bridges(const SimilarityGraph& g, const std::vector<int>& communities,
                              int k_roles, std::uint64_t seed) {
    const int n = g.n;
    RolesReport out;
    out.role.assign(static_cast<std::size_t>(n), 0);
    out.bridge_index.assign(static_cast<std::size_t>(n), 0.0);
    if (n == 0) return out;

    // raw features: degree, strength, clustering, betweenness
    std::vector<std::array<double, 4>> feats(static_cast<std::size_t>(n),
                                             std::array<double, 4>{});
    auto adj = g.adjacency();
    auto btw = betweenness_centrality(g, true);
    {
        // per-node clustering
        std::vector<std::set<int>> nb(static_cast<std::size_t>(n));
        for (const auto& e : g.edges) {
            nb[static_cast<std::size_t>(e.u)].insert(e.v);
            nb[static_cast<std::size_t>(e.v)].insert(e.u);
        }
        for (int i = 0; i < n; ++i) {
            auto& f = feats[static_cast<std::size_t>(i)];
            f[0] = static_cast<double>(adj[static_cast<std::size_t>(i)].size());
            for (auto [v, w] : adj[static_cast<std::size_t>(i)]) f[1] += w;
            int d = static_cast<int>(nb[static_cast<std::size_t>(i)].size());
            if (d >= 2) {
                int links = 0;
                for (int u : nb[static_cast<std::size_t>(i)])
                    for (int v : nb[static_cast<std::size_t>(i)])
                        if (u < v && nb[static_cast<std::size_t>(u)].count(v)) ++links;
                f[2] = 2.0 * links / (static_cast<double>(d) * (d - 1));
            }
            f[3] = btw[static_cast<std::size_t>(i)];
        }
    }

    // z-score each feature
    for (int c = 0; c < 4; ++c) {
        double mean = 0.0;
        for (const auto& f : feats) mean += f[static_cast<std::size_t>(c)];
        mean /= n;
        double var = 0.0;
        for (const auto& f : feats) {
            double d = f[static_cast<std::size_t>(c)] - mean;
            var += d * d;
        }
        double sd = std::sqrt(var / n);
        for (auto& f : feats)
            f[static_cast<std::size_t>(c)] =
                sd > kEps ? (f[static_cast<std::size_t>(c)] - mean) / sd : 0.0;
    }
    out.features = feats;

    // k-means, 10 restarts, best inertia
    k_roles = std::clamp(k_roles, 1, std::max(1, n));
    double best_inertia = std::numeric_limits<double>::infinity();
    for (int restart = 0; restart < 10; ++restart) {
        auto rng = make_rng(seed, "kmeans", static_cast<std::uint64_t>(restart));
        std::vector<int> idx(static_cast<std::size_t>(n));
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        std::vector<std::array<double, 4>> centers;
        for (int c = 0; c < k_roles; ++c) centers.push_back(feats[static_cast<std::size_t>(idx[static_cast<std::size_t>(c)])]);
        std::vector<int> labels(static_cast<std::size_t>(n), 0);
        for (int iter = 0; iter < 100; ++iter) {
            bool changed = false;
            for (int i = 0; i < n; ++i) {
                double best = std::numeric_limits<double>::infinity();
                int arg = 0;
                for (int c = 0; c < k_roles; ++c) {
                    double d2 = 0.0;
                    for (int t = 0; t < 4; ++t) {
                        double d = feats[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)] -
                                   centers[static_cast<std::size_t>(c)][static_cast<std::size_t>(t)];
                        d2 += d * d;
                    }
                    if (d2 < best) {
                        best = d2;
                        arg = c;
                    }
                }
                if (labels[static_cast<std::size_t>(i)] != arg) {
                    labels[static_cast<std::size_t>(i)] = arg;
                    changed = true;
                }
            }
            std::vector<std::array<double, 4>> sums(static_cast<std::size_t>(k_roles),
                                                    std::array<double, 4>{});
            std::vector<int> counts(static_cast<std::size_t>(k_roles), 0);
            for (int i = 0; i < n; ++i) {
                for (int t = 0; t < 4; ++t)
                    sums[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])][static_cast<std::size_t>(t)] +=
                        feats[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)];
                ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
            }
            for (int c = 0; c < k_roles; ++c)
                if (counts[static_cast<std::size_t>(c)] > 0)
                    for (int t = 0; t < 4; ++t)
                        centers[static_cast<std::size_t>(c)][static_cast<std::size_t>(t)] =
                            sums[static_cast<std::size_t>(c)][static_cast<std::size_t>(t)] /
                            counts[static_cast<std::size_t>(c)];
            if (!changed) break;
        }
        double inertia = 0.0;
        for (int i = 0; i < n; ++i)
            for (int t = 0; t < 4; ++t) {
                double d = feats[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)] -
                           centers[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])][static_cast<std::size_t>(t)];
                inertia += d * d;
            }
        if (inertia < best_inertia) {
            best_inertia = inertia;
            out.role = labels;
        }
    }

    // bridge index
    for (int i = 0; i < n; ++i) {
        double total = 0.0, cross = 0.0;
        for (auto [v, w] : adj[static_cast<std::size_t>(i)]) {
            total += w;
            if (communities[static_cast<std::size_t>(v)] != communities[static_cast<std::size_t>(i)])
                cross += w;
        }
        out.bridge_index[static_cast<std::size_t>(i)] = total > kEps ? cross / total : 0.0;
    }
    return out;
}

SimilarityGraph double_edge_swap(const SimilarityGraph& g, int attempts, std::mt19937_64& rng) {
    SimilarityGraph out = g;
    if (out.edges.size() < 2) return out;
    std::set<std::pair<int, int>> present;
    for (const auto& e : out.edges) present.insert({std::min(e.u, e.v), std::max(e.u, e.v)});
    std::uniform_int_distribution<std::size_t> pick(0, out.edges.size() - 1);
    for (int t = 0; t < attempts; ++t) {
        std::size_t i = pick(rng), j = pick(rng);
        if (i == j) continue;
        auto& e1 = out.edges[i];
        auto& e2 = out.edges[j];
        int a = e1.u, b = e1.v, c = e2.u, d = e2.v;
        if (a == c || a == d || b == c || b == d) continue;  // shared endpoint
        // rewire (a,b),(c,d) -> (a,d),(c,b)
        auto k1 = std::make_pair(std::min(a, d), std::max(a, d));
        auto k2 = std::make_pair(std::min(c, b), std::max(c, b));
        if (present.count(k1) || present.count(k2)) continue;
        present.erase({std::min(a, b), std::max(a, b)});
        present.erase({std::min(c, d), std::max(c, d)});
        present.insert(k1);
        present.insert(k2);
        e1.v = d;
        e2.v = b;
    }
    return out;
}

namespace {

long long triangle_count(const SimilarityGraph& g) {
    std::vector<std::set<int>> nb(static_cast<std::size_t>(g.n));
    for (const auto& e : g.edges) {
        nb[static_cast<std::size_t>(e.u)].insert(e.v);
        nb[static_cast<std::size_t>(e.v)].insert(e.u);
    }
    long long tri = 0;
    for (const auto& e : g.edges) {
        const auto& a = nb[static_cast<std::size_t>(e.u)];
        const auto& b = nb[static_cast<std::size_t>(e.v)];
        for (int x : a)
            if (b.count(x)) ++tri;
    }
    return tri / 3;  // each triangle seen from 3 edges
}

long long four_cycle_count(const SimilarityGraph& g) {
    std::vector<std::set<int>> nb(static_cast<std::size_t>(g.n));
    for (const auto& e : g.edges) {
        nb[static_cast<std::size_t>(e.u)].insert(e.v);
        nb[static_cast<std::size_t>(e.v)].insert(e.u);
    }
    long long total = 0;
    for (int i = 0; i < g.n; ++i) {
        for (int j = i + 1; j < g.n; ++j) {
            long long cn = 0;
            const auto& a = nb[static_cast<std::size_t>(i)];
            const auto& b = nb[static_cast<std::size_t>(j)];
            for (int x : a)
                if (b.count(x)) ++cn;
            total += cn * (cn - 1) / 2;
        }
    }
    return total / 2;  // each 4-cycle counted from both diagonals
}

}  // namespace

MotifReport motif_zscores(const SimilarityGraph& g, int n_null, int swaps, std::uint64_t seed) {
    if (g.edges.size() < 2) throw std::invalid_argument("motif_zscores: needs >= 2 edges");
    if (swaps < 0) swaps = 10 * static_cast<int>(g.edges.size());
    MotifReport out;
    out.triangles = triangle_count(g);
    out.four_cycles = four_cycle_count(g);

    std::vector<int> original_degrees(static_cast<std::size_t>(g.n), 0);
    for (const auto& e : g.edges) {
        ++original_degrees[static_cast<std::size_t>(e.u)];
        ++original_degrees[static_cast<std::size_t>(e.v)];
    }

    std::vector<double> tri_null, quad_null;
    for (int s = 0; s < n_null; ++s) {
        auto rng = make_rng(seed, "motif-null", static_cast<std::uint64_t>(s));
        auto null_g = double_edge_swap(g, swaps, rng);
        std::vector<int> deg(static_cast<std::size_t>(g.n), 0);
        for (const auto& e : null_g.edges) {
            ++deg[static_cast<std::size_t>(e.u)];
            ++deg[static_cast<std::size_t>(e.v)];
        }
        if (deg != original_degrees)
            throw std::logic_error("double_edge_swap broke the degree sequence");
        tri_null.push_back(static_cast<double>(triangle_count(null_g)));
        quad_null.push_back(static_cast<double>(four_cycle_count(null_g)));
    }

    auto z_of = [](double obs, const std::vector<double>& null_vals, double& z, bool& defined) {
        double mean = std::accumulate(null_vals.begin(), null_vals.end(), 0.0) /
                      static_cast<double>(null_vals.size());
        double var = 0.0;
        for (double v : null_vals) var += (v - mean) * (v - mean);
        double sd = std::sqrt(var / static_cast<double>(null_vals.size()));
        if (sd > kEps) {
            z = (obs - mean) / sd;
            defined = true;
        } else {
            z = 0.0;
            defined = false;
        }
    };
    z_of(static_cast<double>(out.triangles), tri_null, out.z_triangle, out.z_triangle_defined);
    z_of(static_cast<double>(out.four_cycles), quad_null, out.z_four_cycle,
         out.z_four_cycle_defined);
    return out;
}

DiffusionSummary diffusion_summary(const SimilarityGraph& g, int t_max) {
    auto nodes = giant_nodes(g);
    if (nodes.size() < 2) throw DegenerateGraph("diffusion_summary: giant component < 2 nodes");
    DiffusionSummary out;
    out.giant_size = static_cast<int>(nodes.size());

    // Eigenvalues of P = D^-1 A equal those of the symmetric D^-1/2 A D^-1/2.
    Eigen::MatrixXd a = weighted_adjacency(g, nodes);
    Eigen::VectorXd d = a.rowwise().sum();
    Eigen::VectorXd dinv = d.unaryExpr(
        [](double x) { return x > kEps ? 1.0 / std::sqrt(x) : 0.0; });
    Eigen::MatrixXd m = dinv.asDiagonal() * a * dinv.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
    Eigen::VectorXd ev = solver.eigenvalues();

    for (int t = 1; t <= t_max; ++t) {
        double tr = 0.0;
        for (Eigen::Index i = 0; i < ev.size(); ++i) tr += std::pow(ev(i), t);
        out.return_curve.push_back(std::clamp(tr / static_cast<double>(nodes.size()), 0.0, 1.0));
    }

    std::vector<double> mods;
    for (Eigen::Index i = 0; i < ev.size(); ++i) mods.push_back(std::abs(ev(i)));
    std::sort(mods.rbegin(), mods.rend());
    double lambda2 = mods.size() > 1 ? mods[1] : 0.0;
    out.spectral_gap = 1.0 - lambda2;
    return out;
}

json multiscale_report(const SimilarityGraph& g, const std::vector<double>& quantiles,
                       int top_k, int n_null, std::uint64_t seed) {
    json j;
    auto filtration = build_filtration(g, quantiles);
    j["thresholds"] = filtration.thresholds;
    j["collapsed_duplicates"] = filtration.collapsed_duplicates;

    std::vector<std::vector<int>> partitions;
    json levels = json::array();
    for (std::size_t l = 0; l < filtration.levels.size(); ++l) {
        auto metrics = graph_metrics(filtration.levels[l], n_null,
                                     stream_seed(seed, "level", static_cast<std::uint64_t>(l)));
        partitions.push_back(metrics.communities);
        json lj = metrics.to_json();
        lj["threshold"] = filtration.thresholds[l];
        levels.push_back(std::move(lj));
    }
    j["levels"] = levels;

    json persistence = json::array();
    for (std::size_t l = 0; l + 1 < partitions.size(); ++l)
        persistence.push_back(jaccard_persistence(partitions[l], partitions[l + 1]));
    j["persistence"] = persistence;

    if (partitions.size() >= 2) {
        json flows = json::array();
        for (const auto& f : sankey_flows(partitions, top_k))
            flows.push_back(
                {{"level", f.level}, {"from", f.from}, {"to", f.to}, {"flow", f.flow}});
        j["sankey"] = flows;
    }

    // full-graph (finest-scale) signatures
    auto spectral = spectral_summary(g);
    j["spectral"] = {{"eigenvalues", spectral.eigenvalues},
                     {"von_neumann_entropy", spectral.von_neumann_entropy},
                     {"giant_size", spectral.giant_size}};
    j["tv_time"] = signal_tv(g, time_signal(g));
    j["tv_degree"] = signal_tv(g, degree_signal(g));

    auto communities = greedy_modularity(g).second;
    auto roles = roles_and_bridges(g, communities, 3, seed);
    j["roles"] = roles.role;
    j["bridge_index"] = roles.bridge_index;

    auto motifs = motif_zscores(g, n_null, -1, seed);
    j["motifs"] = {{"triangles", motifs.triangles},
                   {"four_cycles", motifs.four_cycles},
                   {"z_triangle", motifs.z_triangle_defined ? json(motifs.z_triangle) : json()},
                   {"z_four_cycle",
                    motifs.z_four_cycle_defined ? json(motifs.z_four_cycle) : json()}};

    auto diffusion = diffusion_summary(g);
    j["diffusion"] = {{"return_curve", diffusion.return_curve},
                      {"spectral_gap", diffusion.spectral_gap},
                      {"giant_size", diffusion.giant_size}};
    return j;
}

}  // namespace sc
