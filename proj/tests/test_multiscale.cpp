#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "swarmcomp/multiscale.hpp"

using namespace sc;
using namespace sc::test;

namespace {

SimilarityGraph complete_graph(int n, double w = 1.0) {
    SimilarityGraph g;
    g.n = n;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) g.edges.push_back({i, j, w});
    return g;
}

SimilarityGraph random_weighted_graph(std::mt19937_64& rng, int n, double edge_prob = 0.4) {
    std::uniform_real_distribution<double> weight(0.05, 1.0), unit(0.0, 1.0);
    SimilarityGraph g;
    g.n = n;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (unit(rng) < edge_prob) g.edges.push_back({i, j, weight(rng)});
    return g;
}

/// Exhaustive best-match Jaccard oracle over explicit member sets.
double jaccard_oracle(const std::vector<int>& coarse, const std::vector<int>& fine) {
    std::map<int, std::set<int>> cs, fs;
    for (std::size_t i = 0; i < coarse.size(); ++i) cs[coarse[i]].insert(static_cast<int>(i));
    for (std::size_t i = 0; i < fine.size(); ++i) fs[fine[i]].insert(static_cast<int>(i));
    double total = 0.0;
    for (const auto& [c, members] : cs) {
        double best = 0.0;
        for (const auto& [f, other] : fs) {
            std::vector<int> inter, uni;
            std::set_intersection(members.begin(), members.end(), other.begin(), other.end(),
                                  std::back_inserter(inter));
            std::set_union(members.begin(), members.end(), other.begin(), other.end(),
                           std::back_inserter(uni));
            best = std::max(best, static_cast<double>(inter.size()) /
                                      static_cast<double>(uni.size()));
        }
        total += best;
    }
    return total / static_cast<double>(cs.size());
}

/// All partitions of {0..n-1} via restricted growth strings.
void all_partitions(int n, std::vector<std::vector<int>>& out) {
    std::vector<int> label(static_cast<std::size_t>(n), 0);
    while (true) {
        out.push_back(label);
        int i = n - 1;
        while (i > 0) {
            int max_before = 0;
            for (int j = 0; j < i; ++j) max_before = std::max(max_before, label[j]);
            if (label[i] <= max_before) break;
            --i;
        }
        if (i == 0) return;
        ++label[i];
        for (int j = i + 1; j < n; ++j) label[j] = 0;
    }
}

std::multiset<int> degree_sequence(const SimilarityGraph& g) {
    std::vector<int> deg(static_cast<std::size_t>(g.n), 0);
    for (const auto& e : g.edges) {
        ++deg[static_cast<std::size_t>(e.u)];
        ++deg[static_cast<std::size_t>(e.v)];
    }
    return {deg.begin(), deg.end()};
}

}  // namespace

TEST_CASE("build_filtration: nestedness, strict level, equal weights") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 40; ++trial) {
        auto g = random_weighted_graph(rng, 5 + static_cast<int>(rng() % 12));
        if (g.edges.empty()) continue;
        auto filt = build_filtration(g);
        REQUIRE(filt.levels.size() >= 1);
        for (std::size_t l = 0; l + 1 < filt.levels.size(); ++l) {
            CHECK(filt.thresholds[l] >= filt.thresholds[l + 1]);
            // nested: every level-l edge appears at level l+1
            std::set<std::pair<int, int>> next;
            for (const auto& e : filt.levels[l + 1].edges) next.insert({e.u, e.v});
            for (const auto& e : filt.levels[l].edges) CHECK(next.count({e.u, e.v}) == 1);
            CHECK(filt.levels[l].edges.size() <= filt.levels[l + 1].edges.size());
        }
    }

    // all weights equal -> one effective level
    auto flat = build_filtration(complete_graph(4, 0.5));
    CHECK(flat.collapsed_duplicates);
    CHECK(flat.levels.size() == 1);

    // strict threshold keeps only the heavy edge
    SimilarityGraph two;
    two.n = 3;
    two.edges = {{0, 1, 0.2}, {1, 2, 0.9}};
    auto levels = build_filtration(two, {0.95});
    REQUIRE(levels.levels.size() == 1);
    CHECK(levels.levels[0].edges.size() == 1);
    CHECK(levels.levels[0].edges[0].w == doctest::Approx(0.9));

    CHECK_THROWS_AS(build_filtration(SimilarityGraph{}, kDefaultQuantiles), EmptyGraph);
}

TEST_CASE("jaccard_persistence: fixtures and exhaustive n<=8 oracle") {
    std::vector<int> a = {0, 0, 1, 1};
    CHECK(jaccard_persistence(a, a) == doctest::Approx(1.0));

    // singletons vs one block of size n -> 1/n
    std::vector<int> singles = {0, 1, 2, 3, 4};
    std::vector<int> merged(5, 0);
    CHECK(jaccard_persistence(singles, merged) == doctest::Approx(0.2));

    // label permutation invariance
    std::vector<int> relabeled = {7, 7, 3, 3};
    CHECK(jaccard_persistence(relabeled, a) == doctest::Approx(1.0));

    SUBCASE("equals the exhaustive computation on all partition pairs, n=4") {
        std::vector<std::vector<int>> parts;
        all_partitions(4, parts);
        for (const auto& p : parts)
            for (const auto& q : parts)
                CHECK(jaccard_persistence(p, q) == doctest::Approx(jaccard_oracle(p, q))
                                                       .epsilon(1e-12));
    }
    SUBCASE("random sample of n=8 partition pairs matches the oracle") {
        std::vector<std::vector<int>> parts;
        all_partitions(8, parts);  // 4140 partitions
        std::mt19937_64 rng(77);
        for (int i = 0; i < 400; ++i) {
            const auto& p = parts[rng() % parts.size()];
            const auto& q = parts[rng() % parts.size()];
            CHECK(jaccard_persistence(p, q) == doctest::Approx(jaccard_oracle(p, q))
                                                   .epsilon(1e-12));
        }
    }
}

TEST_CASE("sankey_flows: diagonal flows, conservation, top_K collapse") {
    std::vector<std::vector<int>> identical = {{0, 0, 1, 1}, {0, 0, 1, 1}};
    auto flows = sankey_flows(identical, 6);
    REQUIRE(flows.size() == 2);
    for (const auto& f : flows) {
        CHECK(f.from == f.to);
        CHECK(f.flow == 2);
    }

    SUBCASE("flow conservation on random partition stacks") {
        std::mt19937_64 rng(5);
        for (int trial = 0; trial < 30; ++trial) {
            int n = 6 + static_cast<int>(rng() % 10);
            std::vector<std::vector<int>> partitions;
            for (int l = 0; l < 4; ++l) {
                std::vector<int> p(static_cast<std::size_t>(n));
                for (auto& x : p) x = static_cast<int>(rng() % 4);
                partitions.push_back(p);
            }
            auto fl = sankey_flows(partitions, 6);
            for (int level = 0; level + 1 < 4; ++level) {
                // out-mass per level equals n
                int out_mass = 0;
                for (const auto& f : fl)
                    if (f.level == level) out_mass += f.flow;
                CHECK(out_mass == n);
            }
        }
    }

    SUBCASE("top_K = 1 collapses everything but the largest into Other") {
        std::vector<std::vector<int>> parts = {{0, 0, 0, 1, 2}, {0, 0, 0, 1, 2}};
        auto fl = sankey_flows(parts, 1);
        std::set<std::string> names;
        for (const auto& f : fl) {
            names.insert(f.from);
            names.insert(f.to);
        }
        CHECK(names.count("Other") == 1);
        CHECK(names.size() == 2);  // the largest community and Other
    }
}

TEST_CASE("spectral_summary: K2 closed form and eigenvalue bounds") {
    auto k2 = spectral_summary(complete_graph(2));
    REQUIRE(k2.eigenvalues.size() == 2);
    CHECK(k2.eigenvalues[0] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(k2.eigenvalues[1] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(k2.von_neumann_entropy == doctest::Approx(0.0).epsilon(1e-9));

    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 25; ++trial) {
        auto g = random_weighted_graph(rng, 5 + static_cast<int>(rng() % 15));
        if (g.edges.empty()) continue;
        auto s = spectral_summary(g);
        for (double ev : s.eigenvalues) {
            CHECK(ev >= -1e-9);
            CHECK(ev <= 2.0 + 1e-9);
        }
        CHECK(s.von_neumann_entropy >= 0.0);
    }
}

TEST_CASE("signal_tv: constant, single edge, quadratic scaling") {
    auto k2 = complete_graph(2);
    CHECK(signal_tv(k2, {5.0, 5.0}) == doctest::Approx(0.0));
    CHECK(signal_tv(k2, {0.0, 1.0}) == doctest::Approx(1.0));

    std::mt19937_64 rng(9);
    auto g = random_weighted_graph(rng, 10);
    std::vector<double> x(10);
    for (auto& v : x) v = static_cast<double>(rng() % 100) / 10.0;
    std::vector<double> x2 = x;
    for (auto& v : x2) v *= 2.0;
    CHECK(signal_tv(g, x2) == doctest::Approx(4.0 * signal_tv(g, x)).epsilon(1e-9));
}

TEST_CASE("roles_and_bridges: boundary bridge indices and planted blobs") {
    // two triangles joined by one edge: the joint nodes have B > 0, pure
    // interior nodes B = 0
    SimilarityGraph g;
    g.n = 6;
    for (auto [u, v] : {std::pair{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}})
        g.edges.push_back({u, v, 1.0});
    g.edges.push_back({2, 3, 1.0});
    std::vector<int> comms = {0, 0, 0, 1, 1, 1};
    auto roles = roles_and_bridges(g, comms, 2, 1);
    CHECK(roles.bridge_index[0] == doctest::Approx(0.0));
    CHECK(roles.bridge_index[2] == doctest::Approx(1.0 / 3.0));
    for (double b : roles.bridge_index) {
        CHECK(b >= 0.0);
        CHECK(b <= 1.0);
    }

    // node with all neighbors outside its community
    std::vector<int> lonely = {0, 1, 1, 1, 1, 1};
    auto r2 = roles_and_bridges(g, lonely, 2, 1);
    CHECK(r2.bridge_index[0] == doctest::Approx(1.0));

    // planted feature blobs: two dense cliques of different size/weight
    // produce two separable roles
    SimilarityGraph blobs;
    blobs.n = 12;
    for (int i = 0; i < 6; ++i)
        for (int j = i + 1; j < 6; ++j) blobs.edges.push_back({i, j, 1.0});
    for (int i = 6; i < 12; ++i) blobs.edges.push_back({i, (i + 1 - 6) % 6 + 6, 0.1});
    auto planted = roles_and_bridges(blobs, std::vector<int>(12, 0), 2, 3);
    std::set<int> clique_roles, ring_roles;
    for (int i = 0; i < 6; ++i) clique_roles.insert(planted.role[i]);
    for (int i = 6; i < 12; ++i) ring_roles.insert(planted.role[i]);
    CHECK(clique_roles.size() == 1);
    CHECK(ring_roles.size() == 1);
    CHECK(*clique_roles.begin() != *ring_roles.begin());
}

TEST_CASE("motif_zscores: fixtures and degree-preserving nulls") {
    auto triangle = complete_graph(3);
    auto m = motif_zscores(triangle, 5, -1, 1);
    CHECK(m.triangles == 1);

    // tree: no triangles, z flagged (nulls of a tree are trees)
    SimilarityGraph tree;
    tree.n = 6;
    for (int v = 1; v < 6; ++v) tree.edges.push_back({(v - 1) / 2, v, 1.0});
    auto t = motif_zscores(tree, 10, -1, 2);
    CHECK(t.triangles == 0);
    CHECK(!t.z_triangle_defined);

    SUBCASE("double_edge_swap preserves the degree sequence") {
        std::mt19937_64 rng(13);
        for (int trial = 0; trial < 20; ++trial) {
            auto g = random_weighted_graph(rng, 10, 0.5);
            if (g.edges.size() < 2) continue;
            auto swapped = double_edge_swap(g, 10 * static_cast<int>(g.edges.size()), rng);
            CHECK(degree_sequence(swapped) == degree_sequence(g));
            CHECK(swapped.edges.size() == g.edges.size());
        }
    }

    SUBCASE("K4 four-cycle approximation matches the common-neighbor formula") {
        auto k4 = complete_graph(4);
        auto r = motif_zscores(k4, 5, -1, 3);
        CHECK(r.triangles == 4);     // C(4,3)
        CHECK(r.four_cycles == 3);   // 6 pairs x C(2,2) / 2
    }
}

TEST_CASE("diffusion_summary: K2 alternation and K_n closed form") {
    auto k2 = diffusion_summary(complete_graph(2), 8);
    REQUIRE(k2.return_curve.size() == 8);
    for (int t = 1; t <= 8; ++t)
        CHECK(k2.return_curve[t - 1] == doctest::Approx(t % 2 == 0 ? 1.0 : 0.0).epsilon(1e-9));
    CHECK(k2.spectral_gap == doctest::Approx(0.0).epsilon(1e-9));

    for (int n : {3, 5, 8}) {
        auto kn = diffusion_summary(complete_graph(n), 16);
        double lambda2 = -1.0 / (n - 1.0);
        CHECK(kn.spectral_gap == doctest::Approx(1.0 - std::abs(lambda2)).epsilon(1e-9));
        // closed form: r_t = (1 + (n-1) * lambda2^t) / n
        for (int t = 1; t <= 16; ++t) {
            double expected = (1.0 + (n - 1.0) * std::pow(lambda2, t)) / n;
            CHECK(kn.return_curve[t - 1] == doctest::Approx(expected).epsilon(1e-9));
        }
    }

    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        auto g = random_weighted_graph(rng, 4 + static_cast<int>(rng() % 10));
        if (g.edges.empty()) continue;
        auto d = diffusion_summary(g, 12);
        for (double r : d.return_curve) {
            CHECK(r >= -1e-12);
            CHECK(r <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("multiscale_report end to end") {
    std::mt19937_64 rng(2);
    auto g = random_weighted_graph(rng, 20, 0.3);
    auto report = multiscale_report(g, kDefaultQuantiles, 6, 5, 9);
    CHECK(report.contains("levels"));
    CHECK(report.contains("persistence"));
    CHECK(report.contains("sankey"));
    CHECK(report.contains("spectral"));
}
