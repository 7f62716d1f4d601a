#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "graph_oracles.hpp"
#include "helpers.hpp"
#include "swarmcomp/rng.hpp"
#include "swarmcomp/structure_graph.hpp"

using namespace sc;
using namespace sc::test;

namespace {

SimilarityGraph graph_from_edges(int n, const std::vector<GraphEdge>& edges) {
    SimilarityGraph g;
    g.n = n;
    g.edges = edges;
    return g;
}

SimilarityGraph complete_graph(int n, double w = 1.0) {
    SimilarityGraph g;
    g.n = n;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) g.edges.push_back({i, j, w});
    return g;
}

SimilarityGraph cycle_graph(int n, double w = 1.0) {
    SimilarityGraph g;
    g.n = n;
    for (int i = 0; i < n; ++i) g.edges.push_back({i, (i + 1) % n, w});
    return g;
}

}  // namespace

TEST_CASE("frame_features: one-hot chroma, rest frames, frame count") {
    Piece held = make_piece({make_bar(1, {{"C4", 1.0}, {"rest", 3.0}})});
    auto frames = frame_features(held, 1.0);
    REQUIRE(frames.frames.size() == 4);
    CHECK(frames.frames[0][0] == doctest::Approx(1.0));  // chroma one-hot at C
    for (int pc = 1; pc < 12; ++pc) CHECK(frames.frames[0][pc] == doctest::Approx(0.0));
    for (int pc = 0; pc < 12; ++pc) CHECK(frames.frames[1][pc] == doctest::Approx(0.0));
    CHECK(frames.frames[1][12] == doctest::Approx(0.0));  // no onset in a rest frame

    std::vector<Bar> eight;
    for (int b = 1; b <= 8; ++b) eight.push_back(quarters_bar(b, {"C4", "E4", "G4", "C5"}));
    CHECK(frame_features(make_piece(eight), 1.0).frames.size() == 32);
}

TEST_CASE("build_ssm: identity, orthogonality, symmetry, zero frames") {
    // held notes: frames 1 and 3 carry pure chroma with no onset, so the
    // C-only and F#-only continuation frames are exactly orthogonal; frames 0
    // and 4 (onset + C chroma) are identical
    Piece piece = make_piece({make_bar(1, {{"C4", 2.0}, {"F#4", 2.0}}),
                              make_bar(2, {{"C4", 2.0}, {"rest", 2.0}})});
    auto frames = frame_features(piece, 1.0);
    auto ssm = build_ssm(frames);
    CHECK(ssm[0][4] == doctest::Approx(1.0));
    CHECK(ssm[1][3] == doctest::Approx(0.0).epsilon(1e-9));

    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        auto f = frame_features(random_piece(rng, 3), 1.0);
        auto s = build_ssm(f);
        for (std::size_t i = 0; i < s.size(); ++i)
            for (std::size_t j = 0; j < s.size(); ++j) {
                CHECK(s[i][j] == doctest::Approx(s[j][i]).epsilon(1e-12));
                CHECK(s[i][j] >= 0.0);
                CHECK(s[i][j] <= 1.0 + 1e-12);
            }
    }

    // the all-rest frame (index 7) is similar to nothing, itself included
    CHECK(ssm[7][7] == doctest::Approx(0.0));
    CHECK(ssm[7][0] == doctest::Approx(0.0));
}

TEST_CASE("knn_graph: triangle completion, union rule, weights from SSM") {
    std::vector<std::vector<double>> ssm = {
        {1.0, 0.8, 0.3}, {0.8, 1.0, 0.5}, {0.3, 0.5, 1.0}};
    auto g = knn_graph(ssm, 2);
    CHECK(g.n == 3);
    CHECK(g.edges.size() == 3);  // complete triangle
    for (const auto& e : g.edges) CHECK(e.w == doctest::Approx(ssm[e.u][e.v]));

    // union rule can exceed degree k: star-shaped similarity
    std::vector<std::vector<double>> star(5, std::vector<double>(5, 0.01));
    for (int i = 0; i < 5; ++i) star[i][i] = 1.0;
    for (int j = 1; j < 5; ++j) star[0][j] = star[j][0] = 0.9;
    auto sg = knn_graph(star, 1);
    int deg0 = 0;
    for (const auto& e : sg.edges)
        if (e.u == 0 || e.v == 0) ++deg0;
    CHECK(deg0 == 4);
}

TEST_CASE("graph_metrics on K5 and disjoint triangles") {
    auto k5 = graph_metrics(complete_graph(5), 5, 1);
    CHECK(k5.clustering == doctest::Approx(1.0));
    CHECK(k5.transitivity == doctest::Approx(1.0));
    CHECK(k5.aspl_weighted == doctest::Approx(1.0));
    CHECK(k5.density == doctest::Approx(1.0));
    CHECK(k5.components == 1);
    CHECK(std::abs(k5.modularity) < 0.3);
    CHECK(k5.degree_entropy == doctest::Approx(0.0));

    SimilarityGraph two_triangles;
    two_triangles.n = 6;
    for (auto [u, v] : {std::pair{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}})
        two_triangles.edges.push_back({u, v, 1.0});
    auto tt = graph_metrics(two_triangles, 5, 1);
    CHECK(tt.components == 2);
    CHECK(tt.giant_size == 3);
    CHECK(tt.clustering == doctest::Approx(1.0));

    CHECK(graph_metrics(graph_from_edges(2, {{0, 1, 1.0}}), 5, 1).degenerate);
}

TEST_CASE("js_divergence and js_novelty basics") {
    CHECK(js_divergence({0.25, 0.25, 0.25, 0.25}, {0.25, 0.25, 0.25, 0.25}) ==
          doctest::Approx(0.0).epsilon(1e-9));
    CHECK(js_divergence({1.0, 0.0}, {0.0, 1.0}) == doctest::Approx(1.0).epsilon(1e-6));

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        std::vector<double> p(6), q(6);
        for (int k = 0; k < 6; ++k) {
            p[k] = unit(rng);
            q[k] = unit(rng);
        }
        double a = js_divergence(p, q), b = js_divergence(q, p);
        CHECK(a == doctest::Approx(b).epsilon(1e-12));
        CHECK(a >= 0.0);
        CHECK(a <= 1.0 + 1e-12);
    }

    // constant piece -> flat novelty curve, no peaks
    std::vector<Bar> same;
    for (int b = 1; b <= 8; ++b) same.push_back(quarters_bar(b, {"C4", "E4", "G4", "C5"}));
    auto novelty = js_novelty(frame_features(make_piece(same), 1.0));
    CHECK(novelty.peaks.empty());
    CHECK(novelty.peak_density == doctest::Approx(0.0));
}

TEST_CASE("degree_fit: constant sample, Poisson and power-law recovery") {
    auto report = degree_fit(complete_graph(12));
    CHECK(report.poisson.params["lambda"].get<double>() == doctest::Approx(11.0));
    CHECK(report.poisson.zero_variance);
    CHECK(report.power_law.skipped);

    SUBCASE("synthetic Poisson(4) degrees, n = 10^4") {
        // build via a direct degree histogram check on the fitter: the MLE is
        // the sample mean, so feed a graph whose degrees sample Poisson(4).
        std::mt19937_64 rng(2);
        std::poisson_distribution<int> pois(4);
        // fabricate a graph-free degree check through gnm: mean degree of
        // G(n, m) is 2m/n -> use the fitter on an actual ER graph instead.
        auto er = gnm_random(10000, 20000, rng);
        auto fit = degree_fit(er);
        CHECK(fit.poisson.params["lambda"].get<double>() == doctest::Approx(4.0).epsilon(0.05));
    }
}

TEST_CASE("longrange_metrics spec fixtures") {
    SUBCASE("C8: no lag above tau, uniform betweenness") {
        auto c8 = cycle_graph(8);
        auto m = longrange_metrics(c8, std::vector<int>(8, 0));
        CHECK(m.lr_ef == doctest::Approx(0.0));
        CHECK(m.evenness == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(m.pc == doctest::Approx(0.0));  // single community
    }
    SUBCASE("values bounded in [0,1]") {
        std::mt19937_64 rng(5);
        for (int i = 0; i < 30; ++i) {
            auto g = random_connected_graph(rng, 4 + static_cast<int>(rng() % 9));
            auto comms = greedy_modularity(g).second;
            auto m = longrange_metrics(g, comms);
            for (double v : {m.lr_ef, m.lr_eff, m.cpt, m.ele, m.evenness, m.pc}) {
                CHECK(v >= 0.0);
                CHECK(v <= 1.0 + 1e-9);
            }
        }
    }
}

TEST_CASE("long-range metrics match the Floyd-Warshall brute force on 500 graphs") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 500; ++trial) {
        int n = 4 + static_cast<int>(rng() % 9);  // 4..12 nodes
        auto g = random_connected_graph(rng, n);
        auto comms = greedy_modularity(g).second;
        auto got = longrange_metrics(g, comms);
        auto want = longrange_oracle(g, comms);
        CHECK(got.lr_ef == doctest::Approx(want.lr_ef).epsilon(1e-9));
        CHECK(got.lr_eff == doctest::Approx(want.lr_eff).epsilon(1e-9));
        CHECK(got.cpt == doctest::Approx(want.cpt).epsilon(1e-9));
        CHECK(got.ele == doctest::Approx(want.ele).epsilon(1e-9));
        CHECK(got.evenness == doctest::Approx(want.evenness).epsilon(1e-9));
        CHECK(got.pc == doctest::Approx(want.pc).epsilon(1e-9));
    }
}

TEST_CASE("small-worldness calibration: ER near 1, rewired ring far above") {
    // ER graphs, n=200, m=600, 20 seeds: sigma within [0.7, 1.3]
    for (std::uint64_t s = 1; s <= 20; ++s) {
        auto rng = make_rng(7000 + s, "er-accept");
        auto er = gnm_random(200, 600, rng);
        auto report = graph_metrics(er, 20, s);
        REQUIRE(report.small_world_sigma.has_value());
        CHECK(*report.small_world_sigma > 0.7);
        CHECK(*report.small_world_sigma < 1.3);
    }

    // Watts-Strogatz-style ring (n=200, k=6, p=0.1)
    auto rng = make_rng(4242, "ws-fixture");
    SimilarityGraph ws;
    ws.n = 200;
    std::set<std::pair<int, int>> used;
    for (int i = 0; i < 200; ++i)
        for (int d = 1; d <= 3; ++d) {
            int j = (i + d) % 200;
            auto key = std::minmax(i, j);
            if (used.insert(key).second) ws.edges.push_back({key.first, key.second, 1.0});
        }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (auto& e : ws.edges) {
        if (unit(rng) >= 0.1) continue;
        for (int attempt = 0; attempt < 50; ++attempt) {
            int v = static_cast<int>(rng() % 200);
            if (v == e.u) continue;
            auto key = std::minmax(e.u, v);
            if (used.count(key)) continue;
            used.erase(std::minmax(e.u, e.v));
            used.insert(key);
            e.v = key.second;
            e.u = key.first;
            break;
        }
    }
    auto ws_report = graph_metrics(ws, 20, 7);
    REQUIRE(ws_report.small_world_sigma.has_value());
    CHECK(*ws_report.small_world_sigma > 3.0);
}

TEST_CASE("structure_report end to end") {
    std::mt19937_64 rng(12);
    auto report = structure_report(random_piece(rng, 8), 1.0, 6, 5, 3);
    CHECK(report.contains("graph"));
    CHECK(report.contains("long_range"));
    CHECK(report.contains("novelty"));
    CHECK(report.contains("degree_fit"));
}
