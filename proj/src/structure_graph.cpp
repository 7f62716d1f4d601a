#include "swarmcomp/structure_graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <set>

#include "swarmcomp/musicology.hpp"
#include "swarmcomp/rng.hpp"

namespace sc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = 1e-12;

double l2_norm(const double* v, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += v[i] * v[i];
    return std::sqrt(s);
}

std::vector<int> degrees(const SimilarityGraph& g) {
    std::vector<int> deg(static_cast<std::size_t>(g.n), 0);
    for (const auto& e : g.edges) {
        ++deg[static_cast<std::size_t>(e.u)];
        ++deg[static_cast<std::size_t>(e.v)];
    }
    return deg;
}

int circular_lag(int i, int j, int n) {
    int d = std::abs(i - j);
    return std::min(d, n - d);
}

}  // namespace

std::vector<std::vector<std::pair<int, double>>> SimilarityGraph::adjacency() const {
    std::vector<std::vector<std::pair<int, double>>> adj(static_cast<std::size_t>(n));
    for (const auto& e : edges) {
        adj[static_cast<std::size_t>(e.u)].emplace_back(e.v, e.w);
        adj[static_cast<std::size_t>(e.v)].emplace_back(e.u, e.w);
    }
    return adj;
}

FeatureFrames frame_features(const Piece& piece, double frame_len) {
    if (frame_len <= 0.0) throw std::invalid_argument("frame_len must be positive");
    FeatureFrames out;
    out.frame_len = frame_len;

    // Bar start offsets on the global beat timeline. Bar length is taken from
    // the longest voice so short/degenerate bars still land somewhere sane.
    std::vector<double> bar_start(piece.bars.size());
    double total = 0.0;
    for (std::size_t b = 0; b < piece.bars.size(); ++b) {
        bar_start[b] = total;
        double len = 0.0;
        for (const auto& voice : piece.bars[b].voices) len = std::max(len, voice.total_beats());
        total += len;
    }
    if (total <= kEps) return out;

    int n_frames = static_cast<int>(std::ceil(total / frame_len - kEps));
    std::vector<std::array<double, 12>> chroma(static_cast<std::size_t>(n_frames),
                                                std::array<double, 12>{});
    std::vector<double> onsets(static_cast<std::size_t>(n_frames), 0.0);

    for (std::size_t b = 0; b < piece.bars.size(); ++b) {
        for (const auto& voice : piece.bars[b].voices) {
            double pos = bar_start[b];
            for (const auto& note : voice.notes) {
                if (!note.is_rest()) {
                    int pc = pitch_class(note.pitch);
                    int f0 = static_cast<int>(std::floor(pos / frame_len + kEps));
                    if (f0 >= 0 && f0 < n_frames) onsets[static_cast<std::size_t>(f0)] += 1.0;
                    // Spread duration-weighted mass over every frame the note
                    // overlaps.
                    double start = pos, end = pos + note.duration;
                    int f_lo = std::max(0, static_cast<int>(std::floor(start / frame_len + kEps)));
                    int f_hi = std::min(n_frames - 1,
                                        static_cast<int>(std::floor((end - kEps) / frame_len)));
                    for (int f = f_lo; f <= f_hi; ++f) {
                        double overlap = std::min(end, (f + 1) * frame_len) -
                                         std::max(start, f * frame_len);
                        if (overlap > kEps)
                            chroma[static_cast<std::size_t>(f)][static_cast<std::size_t>(pc)] +=
                                overlap;
                    }
                }
                pos += note.duration;
            }
        }
    }

    out.frames.resize(static_cast<std::size_t>(n_frames));
    for (int f = 0; f < n_frames; ++f) {
        auto& vec = out.frames[static_cast<std::size_t>(f)];
        const auto& c = chroma[static_cast<std::size_t>(f)];
        double cn = l2_norm(c.data(), 12);
        for (int i = 0; i < 12; ++i) vec[static_cast<std::size_t>(i)] = cn > kEps ? c[static_cast<std::size_t>(i)] / cn : 0.0;
        vec[12] = onsets[static_cast<std::size_t>(f)] > kEps ? 1.0 : 0.0;  // L2 of a scalar block
    }
    return out;
}

std::vector<std::vector<double>> build_ssm(const FeatureFrames& frames) {
    const int n = static_cast<int>(frames.frames.size());
    std::vector<std::vector<double>> s(static_cast<std::size_t>(n),
                                       std::vector<double>(static_cast<std::size_t>(n), 0.0));
    std::vector<double> norms(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i)
        norms[static_cast<std::size_t>(i)] = l2_norm(frames.frames[static_cast<std::size_t>(i)].data(), 13);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            double ni = norms[static_cast<std::size_t>(i)], nj = norms[static_cast<std::size_t>(j)];
            double v = 0.0;
            if (ni > kEps && nj > kEps) {
                double dot = 0.0;
                for (int d = 0; d < 13; ++d)
                    dot += frames.frames[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)] *
                           frames.frames[static_cast<std::size_t>(j)][static_cast<std::size_t>(d)];
                v = std::clamp(dot / (ni * nj), 0.0, 1.0);
            }
            s[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = v;
            s[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = v;
        }
    }
    return s;
}

SimilarityGraph knn_graph(const std::vector<std::vector<double>>& ssm, int k) {
    if (k < 1) throw std::invalid_argument("knn_graph: k must be >= 1");
    const int n = static_cast<int>(ssm.size());
    SimilarityGraph g;
    g.n = n;
    g.k = k;
    std::set<std::pair<int, int>> chosen;
    for (int i = 0; i < n; ++i) {
        std::vector<int> order;
        order.reserve(static_cast<std::size_t>(n) - 1);
        for (int j = 0; j < n; ++j)
            if (j != i) order.push_back(j);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            double sa = ssm[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)];
            double sb = ssm[static_cast<std::size_t>(i)][static_cast<std::size_t>(b)];
            if (sa != sb) return sa > sb;
            return a < b;  // tie toward the lower index
        });
        int take = std::min<int>(k, static_cast<int>(order.size()));
        for (int t = 0; t < take; ++t) {
            int j = order[static_cast<std::size_t>(t)];
            chosen.insert({std::min(i, j), std::max(i, j)});
        }
    }
    for (const auto& [u, v] : chosen)
        g.edges.push_back({u, v, ssm[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)]});
    return g;
}

std::vector<int> connected_components(const SimilarityGraph& g) {
    std::vector<int> comp(static_cast<std::size_t>(g.n), -1);
    auto adj = g.adjacency();
    int c = 0;
    for (int s = 0; s < g.n; ++s) {
        if (comp[static_cast<std::size_t>(s)] >= 0) continue;
        std::queue<int> q;
        q.push(s);
        comp[static_cast<std::size_t>(s)] = c;
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            for (auto [v, w] : adj[static_cast<std::size_t>(u)]) {
                if (comp[static_cast<std::size_t>(v)] < 0) {
                    comp[static_cast<std::size_t>(v)] = c;
                    q.push(v);
                }
            }
        }
        ++c;
    }
    return comp;
}

double average_clustering(const SimilarityGraph& g) {
    if (g.n == 0) return 0.0;
    auto adj = g.adjacency();
    std::vector<std::set<int>> nb(static_cast<std::size_t>(g.n));
    for (const auto& e : g.edges) {
        nb[static_cast<std::size_t>(e.u)].insert(e.v);
        nb[static_cast<std::size_t>(e.v)].insert(e.u);
    }
    double total = 0.0;
    for (int i = 0; i < g.n; ++i) {
        const auto& s = nb[static_cast<std::size_t>(i)];
        int d = static_cast<int>(s.size());
        if (d < 2) continue;
        int links = 0;
        for (int u : s)
            for (int v : s)
                if (u < v && nb[static_cast<std::size_t>(u)].count(v)) ++links;
        total += 2.0 * links / (static_cast<double>(d) * (d - 1));
    }
    return total / g.n;
}

double transitivity(const SimilarityGraph& g) {
    std::vector<std::set<int>> nb(static_cast<std::size_t>(g.n));
    for (const auto& e : g.edges) {
        nb[static_cast<std::size_t>(e.u)].insert(e.v);
        nb[static_cast<std::size_t>(e.v)].insert(e.u);
    }
    long long triangles = 0, triples = 0;
    for (int i = 0; i < g.n; ++i) {
        long long d = static_cast<long long>(nb[static_cast<std::size_t>(i)].size());
        triples += d * (d - 1) / 2;
        for (int u : nb[static_cast<std::size_t>(i)])
            for (int v : nb[static_cast<std::size_t>(i)])
                if (u < v && nb[static_cast<std::size_t>(u)].count(v)) ++triangles;
    }
    // each triangle counted once per corner
    return triples > 0 ? static_cast<double>(triangles) / static_cast<double>(triples) : 0.0;
}

double degree_assortativity(const SimilarityGraph& g) {
    if (g.edges.empty()) return 0.0;
    auto deg = degrees(g);
    double sum_xy = 0.0, sum_x = 0.0, sum_y = 0.0, sum_x2 = 0.0, sum_y2 = 0.0;
    double m = 0.0;
    for (const auto& e : g.edges) {
        // each undirected edge contributes both orientations
        double a = deg[static_cast<std::size_t>(e.u)], b = deg[static_cast<std::size_t>(e.v)];
        sum_xy += 2.0 * a * b;
        sum_x += a + b;
        sum_y += a + b;
        sum_x2 += a * a + b * b;
        sum_y2 += a * a + b * b;
        m += 2.0;
    }
    double num = sum_xy / m - (sum_x / m) * (sum_y / m);
    double den = std::sqrt(std::max(0.0, sum_x2 / m - (sum_x / m) * (sum_x / m))) *
                 std::sqrt(std::max(0.0, sum_y2 / m - (sum_y / m) * (sum_y / m)));
    return den > kEps ? num / den : 0.0;
}

std::pair<double, std::vector<int>> greedy_modularity(const SimilarityGraph& g) {
    const int n = g.n;
    std::vector<int> comm(static_cast<std::size_t>(n));
    std::iota(comm.begin(), comm.end(), 0);
    const double m = static_cast<double>(g.edges.size());
    if (n == 0 || m == 0.0) return {0.0, comm};

    auto deg = degrees(g);
    // e[c][d]: fraction of edge endpoints between communities; a[c]: row sums.
    std::map<int, std::map<int, double>> e;
    std::map<int, double> a;
    for (const auto& ed : g.edges) {
        e[ed.u][ed.v] += 0.5 / m;
        e[ed.v][ed.u] += 0.5 / m;
        if (ed.u == ed.v) e[ed.u][ed.u] += 0.5 / m;  // not expected (no self loops)
    }
    for (int i = 0; i < n; ++i) {
        e[i];  // ensure present
        a[i] = deg[static_cast<std::size_t>(i)] / (2.0 * m);
    }
    auto q_of = [&] {
        double q = 0.0;
        for (auto& [c, row] : e) {
            auto it = row.find(c);
            double ecc = it != row.end() ? it->second : 0.0;
            q += ecc - a[c] * a[c];
        }
        return q;
    };

    double q = q_of();
    double best_q = q;
    std::vector<int> best_comm = comm;

    while (e.size() > 1) {
        double best_dq = -kInf;
        int bi = -1, bj = -1;
        for (auto& [ci, row] : e) {
            for (auto& [cj, eij] : row) {
                if (cj <= ci) continue;
                double dq = 2.0 * (eij - a[ci] * a[cj]);
                if (dq > best_dq + kEps ||
                    (dq > best_dq - kEps && (bi == -1 || ci < bi || (ci == bi && cj < bj)))) {
                    best_dq = dq;
                    bi = ci;
                    bj = cj;
                }
            }
        }
        if (bi < 0) break;
        // merge bj into bi
        for (auto& [cd, val] : e[bj]) {
            if (cd == bi || cd == bj) continue;
            e[bi][cd] += val;
            e[cd][bi] += val;
            e[cd].erase(bj);
        }
        double self_gain = (e[bi].count(bi) ? e[bi][bi] : 0.0) +
                           (e[bj].count(bj) ? e[bj][bj] : 0.0) +
                           (e[bi].count(bj) ? e[bi][bj] : 0.0) +
                           (e[bj].count(bi) ? e[bj][bi] : 0.0);
        e[bi].erase(bj);
        e[bi][bi] = self_gain;
        e.erase(bj);
        for (auto& [c, row] : e) row.erase(bj);
        a[bi] += a[bj];
        a.erase(bj);
        for (auto& c : comm)
            if (c == bj) c = bi;
        q = q_of();
        if (q > best_q + kEps) {
            best_q = q;
            best_comm = comm;
        }
        if (best_dq < -kEps && q < best_q - 0.2) break;  // far past the peak
    }

    // relabel to dense 0..K-1
    std::map<int, int> relabel;
    for (int& c : best_comm) {
        auto [it, inserted] = relabel.emplace(c, static_cast<int>(relabel.size()));
        c = it->second;
    }
    return {best_q, best_comm};
}

std::vector<double> shortest_paths(const SimilarityGraph& g, int src, bool weighted) {
    auto adj = g.adjacency();
    std::vector<double> dist(static_cast<std::size_t>(g.n), kInf);
    dist[static_cast<std::size_t>(src)] = 0.0;
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    pq.push({0.0, src});
    while (!pq.empty()) {
        auto [d, u] = pq.top();
        pq.pop();
        if (d > dist[static_cast<std::size_t>(u)] + kEps) continue;
        for (auto [v, w] : adj[static_cast<std::size_t>(u)]) {
            double len = weighted ? 1.0 / std::max(w, kEps) : 1.0;
            double nd = d + len;
            if (nd < dist[static_cast<std::size_t>(v)] - kEps) {
                dist[static_cast<std::size_t>(v)] = nd;
                pq.push({nd, v});
            }
        }
    }
    return dist;
}

double average_shortest_path(const SimilarityGraph& g, bool weighted) {
    auto comp = connected_components(g);
    if (g.n == 0) return 0.0;
    std::map<int, int> sizes;
    for (int c : comp) ++sizes[c];
    int giant = 0;
    for (auto& [c, s] : sizes)
        if (s > sizes[giant]) giant = c;
    std::vector<int> nodes;
    for (int i = 0; i < g.n; ++i)
        if (comp[static_cast<std::size_t>(i)] == giant) nodes.push_back(i);
    if (nodes.size() < 2) return 0.0;
    double total = 0.0;
    long long pairs = 0;
    for (int s : nodes) {
        auto dist = shortest_paths(g, s, weighted);
        for (int t : nodes) {
            if (t <= s) continue;
            if (std::isfinite(dist[static_cast<std::size_t>(t)])) {
                total += dist[static_cast<std::size_t>(t)];
                ++pairs;
            }
        }
    }
    return pairs > 0 ? total / static_cast<double>(pairs) : 0.0;
}

std::vector<double> betweenness_centrality(const SimilarityGraph& g, bool weighted) {
    const int n = g.n;
    std::vector<double> bc(static_cast<std::size_t>(n), 0.0);
    auto adj = g.adjacency();
    for (int s = 0; s < n; ++s) {
        // Brandes: SSSP + dependency accumulation.
        std::vector<double> dist(static_cast<std::size_t>(n), kInf);
        std::vector<double> sigma(static_cast<std::size_t>(n), 0.0);
        std::vector<std::vector<int>> preds(static_cast<std::size_t>(n));
        std::vector<int> order;
        dist[static_cast<std::size_t>(s)] = 0.0;
        sigma[static_cast<std::size_t>(s)] = 1.0;
        using Item = std::pair<double, int>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
        pq.push({0.0, s});
        std::vector<bool> done(static_cast<std::size_t>(n), false);
        while (!pq.empty()) {
            auto [d, u] = pq.top();
            pq.pop();
            if (done[static_cast<std::size_t>(u)]) continue;
            done[static_cast<std::size_t>(u)] = true;
            order.push_back(u);
            for (auto [v, w] : adj[static_cast<std::size_t>(u)]) {
                double len = weighted ? 1.0 / std::max(w, kEps) : 1.0;
                double nd = d + len;
                if (nd < dist[static_cast<std::size_t>(v)] - 1e-12) {
                    dist[static_cast<std::size_t>(v)] = nd;
                    sigma[static_cast<std::size_t>(v)] = sigma[static_cast<std::size_t>(u)];
                    preds[static_cast<std::size_t>(v)] = {u};
                    pq.push({nd, v});
                } else if (std::abs(nd - dist[static_cast<std::size_t>(v)]) <= 1e-12) {
                    sigma[static_cast<std::size_t>(v)] += sigma[static_cast<std::size_t>(u)];
                    preds[static_cast<std::size_t>(v)].push_back(u);
                }
            }
        }
        std::vector<double> delta(static_cast<std::size_t>(n), 0.0);
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            int w = *it;
            for (int v : preds[static_cast<std::size_t>(w)])
                delta[static_cast<std::size_t>(v)] +=
                    sigma[static_cast<std::size_t>(v)] / sigma[static_cast<std::size_t>(w)] *
                    (1.0 + delta[static_cast<std::size_t>(w)]);
            if (w != s) bc[static_cast<std::size_t>(w)] += delta[static_cast<std::size_t>(w)];
        }
    }
    for (double& b : bc) b /= 2.0;  // undirected: each pair counted twice
    return bc;
}

double gini(const std::vector<double>& values) {
    const std::size_t n = values.size();
    if (n == 0) return 0.0;
    double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
    if (mean <= kEps) return 0.0;  // zero vector: defined as perfectly even
    double mad = 0.0;
    for (double a : values)
        for (double b : values) mad += std::abs(a - b);
    return mad / (2.0 * static_cast<double>(n) * static_cast<double>(n) * mean);
}

SimilarityGraph gnm_random(int n, int m, std::mt19937_64& rng) {
    SimilarityGraph g;
    g.n = n;
    g.source = "er";
    long long max_edges = static_cast<long long>(n) * (n - 1) / 2;
    m = static_cast<int>(std::min<long long>(m, max_edges));
    std::set<std::pair<int, int>> chosen;
    std::uniform_int_distribution<int> pick(0, n - 1);
    while (static_cast<int>(chosen.size()) < m) {
        int u = pick(rng), v = pick(rng);
        if (u == v) continue;
        chosen.insert({std::min(u, v), std::max(u, v)});
    }
    for (auto& [u, v] : chosen) g.edges.push_back({u, v, 1.0});
    return g;
}

GraphMetricsReport graph_metrics(const SimilarityGraph& g, int n_null, std::uint64_t seed) {
    GraphMetricsReport r;
    r.nodes = g.n;
    r.edge_count = static_cast<int>(g.edges.size());
    if (g.n == 0) throw DegenerateGraph("empty graph");
    r.density = g.n > 1 ? 2.0 * r.edge_count / (static_cast<double>(g.n) * (g.n - 1)) : 0.0;

    auto comp = connected_components(g);
    std::map<int, int> sizes;
    for (int c : comp) ++sizes[c];
    r.components = static_cast<int>(sizes.size());
    for (auto& [c, s] : sizes) r.giant_size = std::max(r.giant_size, s);

    r.clustering = average_clustering(g);
    r.transitivity = transitivity(g);
    r.assortativity = degree_assortativity(g);
    auto [q, communities] = greedy_modularity(g);
    r.modularity = q;
    r.communities = std::move(communities);
    r.betweenness = betweenness_centrality(g, true);
    r.mean_betweenness =
        r.betweenness.empty()
            ? 0.0
            : std::accumulate(r.betweenness.begin(), r.betweenness.end(), 0.0) /
                  static_cast<double>(r.betweenness.size());
    r.aspl_weighted = average_shortest_path(g, true);

    // Degree entropy, normalized by the log of the support size.
    auto deg = degrees(g);
    std::map<int, int> hist;
    for (int d : deg) ++hist[d];
    if (hist.size() > 1) {
        double h = 0.0;
        for (auto& [d, c] : hist) {
            double p = static_cast<double>(c) / static_cast<double>(g.n);
            h -= p * std::log(p);
        }
        r.degree_entropy = h / std::log(static_cast<double>(hist.size()));
    }

    if (g.n < 3) {
        r.degenerate = true;
        return r;
    }

    // Watts-Strogatz sigma against seeded ER nulls with matched (n, m),
    // unweighted C and L. C is the global transitivity: the per-node average
    // is dominated by low-degree nodes and far too noisy on sparse graphs.
    double c_obs = r.transitivity;
    double l_obs = average_shortest_path(g, false);
    double c_rand = 0.0, l_rand = 0.0;
    for (int i = 0; i < n_null; ++i) {
        auto rng = make_rng(seed, "er-null", static_cast<std::uint64_t>(i));
        auto er = gnm_random(g.n, r.edge_count, rng);
        c_rand += transitivity(er);
        l_rand += average_shortest_path(er, false);
    }
    c_rand /= n_null;
    l_rand /= n_null;
    if (c_rand > kEps && l_rand > kEps && l_obs > kEps && c_obs > kEps)
        r.small_world_sigma = (c_obs / c_rand) / (l_obs / l_rand);
    return r;
}

double js_divergence(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) throw std::invalid_argument("js_divergence: size mismatch");
    const double eps = 1e-12;
    std::vector<double> pn(p), qn(q);
    double ps = 0.0, qs = 0.0;
    for (std::size_t i = 0; i < pn.size(); ++i) {
        pn[i] += eps;
        qn[i] += eps;
        ps += pn[i];
        qs += qn[i];
    }
    double js = 0.0;
    for (std::size_t i = 0; i < pn.size(); ++i) {
        double a = pn[i] / ps, b = qn[i] / qs, m = 0.5 * (a + b);
        js += 0.5 * a * std::log2(a / m) + 0.5 * b * std::log2(b / m);
    }
    return std::clamp(js, 0.0, 1.0);
}

NoveltyResult js_novelty(const FeatureFrames& frames, int window, int peak_min_dist) {
    NoveltyResult out;
    const int n = static_cast<int>(frames.frames.size());
    out.curve.assign(static_cast<std::size_t>(n), 0.0);
    if (n < 2 * window || window < 1) return out;

    auto window_chroma = [&](int start) {
        std::vector<double> acc(12, 0.0);
        for (int f = start; f < start + window; ++f)
            for (int d = 0; d < 12; ++d)
                acc[static_cast<std::size_t>(d)] +=
                    frames.frames[static_cast<std::size_t>(f)][static_cast<std::size_t>(d)];
        return acc;
    };

    for (int t = window; t + window <= n; ++t)
        out.curve[static_cast<std::size_t>(t)] =
            js_divergence(window_chroma(t - window), window_chroma(t));

    // Peaks: strict local maxima above mean + 1 std, greedy min-distance.
    double mean = std::accumulate(out.curve.begin(), out.curve.end(), 0.0) / n;
    double var = 0.0;
    for (double v : out.curve) var += (v - mean) * (v - mean);
    double thr = mean + std::sqrt(var / n);
    std::vector<int> candidates;
    for (int t = 1; t + 1 < n; ++t) {
        double v = out.curve[static_cast<std::size_t>(t)];
        if (v > thr && v > out.curve[static_cast<std::size_t>(t - 1)] &&
            v > out.curve[static_cast<std::size_t>(t + 1)])
            candidates.push_back(t);
    }
    std::stable_sort(candidates.begin(), candidates.end(), [&](int a, int b) {
        return out.curve[static_cast<std::size_t>(a)] > out.curve[static_cast<std::size_t>(b)];
    });
    for (int t : candidates) {
        bool ok = true;
        for (int kept : out.peaks)
            if (std::abs(kept - t) < peak_min_dist) ok = false;
        if (ok) out.peaks.push_back(t);
    }
    std::sort(out.peaks.begin(), out.peaks.end());
    out.peak_density = n > 0 ? static_cast<double>(out.peaks.size()) / n : 0.0;
    return out;
}

DegreeFitReport degree_fit(const SimilarityGraph& g) {
    if (g.n < 10) throw DegenerateGraph("degree_fit requires >= 10 nodes");
    auto degs = degrees(g);
    const double n = static_cast<double>(degs.size());
    DegreeFitReport r;

    double mean = std::accumulate(degs.begin(), degs.end(), 0.0) / n;
    bool constant = std::all_of(degs.begin(), degs.end(),
                                [&](int d) { return d == degs.front(); });

    // Poisson MLE.
    r.poisson.name = "poisson";
    double lambda = mean;
    double ll = 0.0;
    for (int k : degs) {
        double lgamma_k1 = std::lgamma(static_cast<double>(k) + 1.0);
        ll += k * std::log(std::max(lambda, kEps)) - lambda - lgamma_k1;
    }
    r.poisson.loglik = ll;
    r.poisson.aic = 2.0 * 1 - 2.0 * ll;
    r.poisson.params = {{"lambda", lambda}};
    r.poisson.zero_variance = constant;
    {
        // KS against the Poisson CDF at observed support.
        std::vector<int> sorted(degs.begin(), degs.end());
        std::sort(sorted.begin(), sorted.end());
        double ks = 0.0;
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            double emp = static_cast<double>(i + 1) / n;
            double cdf = 0.0, term = std::exp(-lambda);
            for (int k = 0; k <= sorted[i]; ++k) {
                cdf += term;
                term *= lambda / (k + 1);
            }
            ks = std::max(ks, std::abs(emp - std::min(cdf, 1.0)));
        }
        r.poisson.ks = ks;
    }

    // Lognormal MLE on log(k + 1).
    r.lognormal.name = "lognormal";
    std::vector<double> y;
    y.reserve(degs.size());
    for (int k : degs) y.push_back(std::log(static_cast<double>(k) + 1.0));
    double mu = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double s2 = 0.0;
    for (double v : y) s2 += (v - mu) * (v - mu);
    s2 /= n;
    double sigma = std::sqrt(s2);
    r.lognormal.zero_variance = sigma <= kEps;
    if (!r.lognormal.zero_variance) {
        double ll2 = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i)
            ll2 += -y[i] - 0.5 * std::log(2.0 * M_PI * s2) - (y[i] - mu) * (y[i] - mu) / (2.0 * s2);
        r.lognormal.loglik = ll2;
        r.lognormal.aic = 2.0 * 2 - 2.0 * ll2;
        std::vector<double> sorted(y);
        std::sort(sorted.begin(), sorted.end());
        double ks = 0.0;
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            double emp = static_cast<double>(i + 1) / n;
            double z = (sorted[i] - mu) / sigma;
            double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
            ks = std::max(ks, std::abs(emp - cdf));
        }
        r.lognormal.ks = ks;
    }
    r.lognormal.params = {{"mu", mu}, {"sigma", sigma}};

    // Power-law tail with k_min chosen by minimal KS (continuous
    // approximation with the half-integer shift).
    r.power_law.name = "power_law";
    if (constant) {
        r.power_law.skipped = true;
    } else {
        std::set<int> kmins;
        for (int k : degs)
            if (k >= 1) kmins.insert(k);
        double best_ks = kInf, best_alpha = 0.0;
        int best_kmin = 0;
        double best_ll = 0.0;
        for (int kmin : kmins) {
            std::vector<int> tail;
            for (int k : degs)
                if (k >= kmin) tail.push_back(k);
            if (tail.size() < 5) continue;
            double x0 = kmin - 0.5;
            double slog = 0.0;
            for (int k : tail) slog += std::log(k / x0);
            if (slog <= kEps) continue;
            double alpha = 1.0 + tail.size() / slog;
            std::sort(tail.begin(), tail.end());
            double ks = 0.0;
            for (std::size_t i = 0; i < tail.size(); ++i) {
                double emp = static_cast<double>(i + 1) / tail.size();
                double cdf = 1.0 - std::pow(tail[i] / x0, 1.0 - alpha);
                ks = std::max(ks, std::abs(emp - cdf));
            }
            if (ks < best_ks) {
                best_ks = ks;
                best_alpha = alpha;
                best_kmin = kmin;
                double ll3 = 0.0;
                for (int k : tail)
                    ll3 += std::log(alpha - 1.0) - std::log(x0) - alpha * std::log(k / x0);
                best_ll = ll3;
            }
        }
        if (best_kmin == 0) {
            r.power_law.skipped = true;
        } else {
            r.power_law.ks = best_ks;
            r.power_law.loglik = best_ll;
            r.power_law.aic = 2.0 * 1 - 2.0 * best_ll;
            r.power_law.params = {{"alpha", best_alpha}, {"k_min", best_kmin}};
        }
    }
    return r;
}

LongRangeMetrics longrange_metrics(const SimilarityGraph& g,
                                   const std::vector<int>& communities) {
    LongRangeMetrics out;
    const int n = g.n;
    if (n < 2) {
        out.no_distant_pairs = true;
        out.evenness = 1.0;
        return out;
    }
    const double tau = n / 4.0;

    // LR-EF: fraction of total edge weight on circular lags > tau.
    double w_total = 0.0, w_long = 0.0;
    for (const auto& e : g.edges) {
        w_total += e.w;
        if (circular_lag(e.u, e.v, n) > tau) w_long += e.w;
    }
    out.lr_ef = w_total > kEps ? w_long / w_total : 0.0;

    // LR-Eff: mean inverse shortest-path distance over distant node pairs.
    double eff = 0.0;
    long long distant = 0;
    for (int i = 0; i < n; ++i) {
        auto dist = shortest_paths(g, i, true);
        for (int j = i + 1; j < n; ++j) {
            if (circular_lag(i, j, n) <= tau) continue;
            ++distant;
            if (std::isfinite(dist[static_cast<std::size_t>(j)]) &&
                dist[static_cast<std::size_t>(j)] > kEps)
                eff += 1.0 / dist[static_cast<std::size_t>(j)];
        }
    }
    if (distant > 0)
        out.lr_eff = std::min(1.0, eff / static_cast<double>(distant));
    else
        out.no_distant_pairs = true;

    // CPT: size-weighted circular span of each community, span = 1 - maxgap/N.
    std::map<int, std::vector<int>> members;
    for (int i = 0; i < n; ++i) members[communities[static_cast<std::size_t>(i)]].push_back(i);
    double cpt = 0.0;
    for (auto& [c, nodes] : members) {
        double span;
        if (nodes.size() == static_cast<std::size_t>(n)) {
            span = 1.0;
        } else {
            int maxgap = 0;
            for (std::size_t t = 0; t < nodes.size(); ++t) {
                int cur = nodes[t];
                int nxt = nodes[(t + 1) % nodes.size()];
                int gap = (t + 1 == nodes.size()) ? (n - cur + nxt) : (nxt - cur);
                maxgap = std::max(maxgap, gap);
            }
            span = 1.0 - static_cast<double>(maxgap) / n;
        }
        cpt += static_cast<double>(nodes.size()) / n * span;
    }
    out.cpt = std::clamp(cpt, 0.0, 1.0);

    // ELE: entropy of the weighted circular-lag distribution over 1..floor(N/2).
    int lag_max = n / 2;
    if (lag_max >= 2) {
        std::map<int, double> lagw;
        double tot = 0.0;
        for (const auto& e : g.edges) {
            int lag = circular_lag(e.u, e.v, n);
            if (lag >= 1) {
                lagw[lag] += e.w;
                tot += e.w;
            }
        }
        if (tot > kEps) {
            double h = 0.0;
            for (auto& [lag, w] : lagw) {
                double p = w / tot;
                if (p > kEps) h -= p * std::log(p);
            }
            out.ele = std::clamp(h / std::log(static_cast<double>(lag_max)), 0.0, 1.0);
        }
    }

    out.evenness = 1.0 - gini(betweenness_centrality(g, true));

    // PC: mean participation coefficient over nodes with nonzero degree.
    auto adj = g.adjacency();
    double pc_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto& nbrs = adj[static_cast<std::size_t>(i)];
        if (nbrs.empty()) continue;  // contributes 0
        std::map<int, int> per_comm;
        for (auto [v, w] : nbrs) ++per_comm[communities[static_cast<std::size_t>(v)]];
        double s = 0.0;
        for (auto& [c, kc] : per_comm) {
            double f = static_cast<double>(kc) / static_cast<double>(nbrs.size());
            s += f * f;
        }
        pc_sum += 1.0 - s;
    }
    out.pc = pc_sum / n;
    return out;
}

LongRangeMetrics longrange_metrics(const SimilarityGraph& g) {
    return longrange_metrics(g, greedy_modularity(g).second);
}

json GraphMetricsReport::to_json() const {
    json j;
    j["nodes"] = nodes;
    j["edges"] = edge_count;
    j["density"] = density;
    j["components"] = components;
    j["giant_size"] = giant_size;
    j["clustering"] = clustering;
    j["transitivity"] = transitivity;
    j["assortativity"] = assortativity;
    j["modularity"] = modularity;
    j["communities"] = communities;
    j["mean_betweenness"] = mean_betweenness;
    j["aspl_weighted"] = aspl_weighted;
    if (small_world_sigma)
        j["small_world_sigma"] = *small_world_sigma;
    else
        j["small_world_sigma"] = nullptr;
    j["degree_entropy"] = degree_entropy;
    j["degenerate"] = degenerate;
    return j;
}

json DegreeFitReport::to_json() const {
    auto model = [](const DegreeFitModel& m) {
        json j;
        j["loglik"] = m.loglik;
        j["aic"] = m.aic;
        j["ks"] = m.ks;
        j["params"] = m.params;
        j["skipped"] = m.skipped;
        j["zero_variance"] = m.zero_variance;
        return j;
    };
    return {{"poisson", model(poisson)},
            {"lognormal", model(lognormal)},
            {"power_law", model(power_law)}};
}

json LongRangeMetrics::to_json() const {
    return {{"lr_ef", lr_ef},       {"lr_eff", lr_eff},     {"cpt", cpt},
            {"ele", ele},           {"evenness", evenness}, {"pc", pc},
            {"no_distant_pairs", no_distant_pairs}};
}

json structure_report(const Piece& piece, double frame_len, int k, int n_null,
                      std::uint64_t seed) {
    auto frames = frame_features(piece, frame_len);
    json j;
    j["frame_len"] = frame_len;
    j["frames"] = frames.frames.size();
    if (frames.frames.size() < 2) {
        j["degenerate"] = true;
        return j;
    }
    auto ssm = build_ssm(frames);
    auto g = knn_graph(ssm, k);
    auto metrics = graph_metrics(g, n_null, seed);
    j["graph"] = metrics.to_json();
    j["long_range"] = longrange_metrics(g, metrics.communities).to_json();
    auto novelty = js_novelty(frames);
    j["novelty"] = {{"curve", novelty.curve},
                    {"peaks", novelty.peaks},
                    {"peak_density", novelty.peak_density}};
    if (g.n >= 10) j["degree_fit"] = degree_fit(g).to_json();
    json edges = json::array();
    for (const auto& e : g.edges) edges.push_back({e.u, e.v, e.w});
    j["edges"] = edges;
    return j;
}

}  // namespace sc
