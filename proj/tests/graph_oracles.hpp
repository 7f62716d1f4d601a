#pragma once

// Brute-force reference implementations (Floyd-Warshall distances with
// shortest-path counts) used to validate the long-range graph metrics.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "swarmcomp/structure_graph.hpp"

namespace sc::test {

inline int circ_lag(int i, int j, int n) {
    return std::min(std::abs(i - j), n - std::abs(i - j));
}

struct BruteGraph {
    int n;
    std::vector<std::vector<double>> dist;   // lengths 1/w
    std::vector<std::vector<double>> paths;  // shortest-path counts
    std::vector<std::vector<double>> w;      // adjacency weights
};

inline BruteGraph floyd_warshall(const SimilarityGraph& g) {
    const double inf = std::numeric_limits<double>::infinity();
    BruteGraph b;
    b.n = g.n;
    b.dist.assign(g.n, std::vector<double>(g.n, inf));
    b.paths.assign(g.n, std::vector<double>(g.n, 0.0));
    b.w.assign(g.n, std::vector<double>(g.n, 0.0));
    for (int i = 0; i < g.n; ++i) {
        b.dist[i][i] = 0.0;
        b.paths[i][i] = 1.0;
    }
    for (const auto& e : g.edges) {
        double len = 1.0 / std::max(e.w, 1e-12);
        b.dist[e.u][e.v] = b.dist[e.v][e.u] = len;
        b.paths[e.u][e.v] = b.paths[e.v][e.u] = 1.0;
        b.w[e.u][e.v] = b.w[e.v][e.u] = e.w;
    }
    for (int k = 0; k < g.n; ++k)
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j) {
                if (i == j || i == k || j == k) continue;
                double via = b.dist[i][k] + b.dist[k][j];
                if (via < b.dist[i][j] - 1e-12) {
                    b.dist[i][j] = via;
                    b.paths[i][j] = b.paths[i][k] * b.paths[k][j];
                } else if (std::abs(via - b.dist[i][j]) <= 1e-12 && std::isfinite(via)) {
                    b.paths[i][j] += b.paths[i][k] * b.paths[k][j];
                }
            }
    return b;
}

inline std::vector<double> betweenness_oracle(const BruteGraph& b) {
    std::vector<double> bc(b.n, 0.0);
    for (int w = 0; w < b.n; ++w)
        for (int u = 0; u < b.n; ++u)
            for (int v = u + 1; v < b.n; ++v) {
                if (u == w || v == w || !std::isfinite(b.dist[u][v]) || b.paths[u][v] == 0.0)
                    continue;
                if (std::abs(b.dist[u][w] + b.dist[w][v] - b.dist[u][v]) <= 1e-9)
                    bc[w] += b.paths[u][w] * b.paths[w][v] / b.paths[u][v];
            }
    return bc;
}

inline double gini_oracle(std::vector<double> v) {
    if (v.empty()) return 0.0;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    if (mean <= 0.0) return 0.0;
    double sum = 0.0;
    for (double a : v)
        for (double c : v) sum += std::abs(a - c);
    return sum / (2.0 * static_cast<double>(v.size()) * static_cast<double>(v.size()) * mean);
}

inline LongRangeMetrics longrange_oracle(const SimilarityGraph& g, const std::vector<int>& comms) {
    LongRangeMetrics out;
    int n = g.n;
    double tau = n / 4.0;
    auto b = floyd_warshall(g);

    double w_total = 0.0, w_long = 0.0;
    for (const auto& e : g.edges) {
        w_total += e.w;
        if (circ_lag(e.u, e.v, n) > tau) w_long += e.w;
    }
    out.lr_ef = w_total > 1e-12 ? w_long / w_total : 0.0;

    double eff = 0.0;
    long long distant = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            if (circ_lag(i, j, n) <= tau) continue;
            ++distant;
            if (std::isfinite(b.dist[i][j]) && b.dist[i][j] > 1e-12) eff += 1.0 / b.dist[i][j];
        }
    if (distant > 0)
        out.lr_eff = std::min(1.0, eff / static_cast<double>(distant));
    else
        out.no_distant_pairs = true;

    std::map<int, std::vector<int>> members;
    for (int i = 0; i < n; ++i) members[comms[i]].push_back(i);
    double cpt = 0.0;
    for (auto& [c, nodes] : members) {
        double span = 1.0;
        if (static_cast<int>(nodes.size()) < n) {
            int maxgap = 0;
            for (std::size_t t = 0; t < nodes.size(); ++t) {
                int cur = nodes[t], nxt = nodes[(t + 1) % nodes.size()];
                int gap = t + 1 == nodes.size() ? n - cur + nxt : nxt - cur;
                maxgap = std::max(maxgap, gap);
            }
            span = 1.0 - static_cast<double>(maxgap) / n;
        }
        cpt += static_cast<double>(nodes.size()) / n * span;
    }
    out.cpt = std::clamp(cpt, 0.0, 1.0);

    int lag_max = n / 2;
    if (lag_max >= 2) {
        std::map<int, double> lagw;
        double tot = 0.0;
        for (const auto& e : g.edges) {
            int lag = circ_lag(e.u, e.v, n);
            if (lag >= 1) {
                lagw[lag] += e.w;
                tot += e.w;
            }
        }
        if (tot > 1e-12) {
            double h = 0.0;
            for (auto& [lag, wt] : lagw) {
                double p = wt / tot;
                if (p > 1e-12) h -= p * std::log(p);
            }
            out.ele = std::clamp(h / std::log(static_cast<double>(lag_max)), 0.0, 1.0);
        }
    }

    out.evenness = 1.0 - gini_oracle(betweenness_oracle(b));

    double pc_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        std::map<int, int> per_comm;
        int deg = 0;
        for (int j = 0; j < n; ++j)
            if (b.w[i][j] > 0.0) {
                ++per_comm[comms[j]];
                ++deg;
            }
        if (deg == 0) continue;
        double s = 0.0;
        for (auto& [c, kc] : per_comm) {
            double f = static_cast<double>(kc) / deg;
            s += f * f;
        }
        pc_sum += 1.0 - s;
    }
    out.pc = pc_sum / n;
    return out;
}

inline SimilarityGraph random_connected_graph(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> weight(0.05, 1.0);
    SimilarityGraph g;
    g.n = n;
    std::set<std::pair<int, int>> used;
    // random spanning tree keeps it connected
    for (int v = 1; v < n; ++v) {
        int u = static_cast<int>(rng() % v);
        g.edges.push_back({u, v, weight(rng)});
        used.insert({u, v});
    }
    int extra = static_cast<int>(rng() % (n * 2));
    for (int e = 0; e < extra; ++e) {
        int u = static_cast<int>(rng() % n), v = static_cast<int>(rng() % n);
        if (u == v) continue;
        auto key = std::minmax(u, v);
        if (used.count({key.first, key.second})) continue;
        used.insert({key.first, key.second});
        g.edges.push_back({key.first, key.second, weight(rng)});
    }
    return g;
}

}  // namespace sc::test
