#include "doctest.h"

#include <algorithm>
#include <set>

#include "mci/eval.hpp"
#include "mci/knng.hpp"
#include "support.hpp"

using namespace mci;

namespace {

std::vector<NodeId> ids_of(std::span<const Neighbor> row) {
    std::vector<NodeId> out;
    for (const auto& nb : row) out.push_back(nb.id);
    return out;
}

void check_well_formed(const KnnGraph& g) {
    for (NodeId u = 0; u < g.size(); ++u) {
        const auto row = g.neighbors(u);
        std::set<NodeId> seen;
        for (std::size_t i = 0; i < row.size(); ++i) {
            CHECK(row[i].id != u);
            CHECK(row[i].id < g.size());
            CHECK(seen.insert(row[i].id).second);
            if (i > 0) CHECK_FALSE(closer(row[i], row[i - 1]));
        }
    }
}

}  // namespace

TEST_CASE("three collinear points, k'=1") {
    Dataset ds(1, {0.0F, 1.0F, 3.0F});
    const auto g = exact_knn(ds, 1);
    CHECK(g.k_prime() == 1);
    CHECK(g.neighbors(0)[0].id == 1);
    CHECK(g.neighbors(1)[0].id == 0);
    CHECK(g.neighbors(2)[0].id == 1);
    CHECK(g.neighbors(2)[0].distance == 4.0F);
}

TEST_CASE("construction example: rows match the distance matrix's 4 nearest") {
    const auto ds = testing::fig4_dataset();
    const auto g = exact_knn(ds, 4);
    const auto& m = testing::fig4_matrix();
    for (NodeId u = 0; u < 9; ++u) {
        std::vector<NodeId> order;
        for (NodeId v = 0; v < 9; ++v) {
            if (v != u) order.push_back(v);
        }
        std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) { return m[u][a] < m[u][b]; });
        // Row u's 4th and 5th matrix entries differ, so the set is unambiguous
        // unless the matrix itself has a tie at the boundary.
        if (m[u][order[3]] == m[u][order[4]]) continue;
        std::vector<NodeId> want(order.begin(), order.begin() + 4);
        std::vector<NodeId> got = ids_of(g.neighbors(u));
        std::sort(want.begin(), want.end());
        std::sort(got.begin(), got.end());
        CHECK(got == want);
    }
    CHECK(ids_of(g.neighbors(2)) == std::vector<NodeId>{4, 1, 6, 7});
    CHECK(ids_of(g.neighbors(3)) == std::vector<NodeId>{5, 0, 8, 7});
}

TEST_CASE("exact_knn equals an independent brute force on 200x16") {
    Dataset ds(16, testing::random_matrix(200, 16, 3));
    const auto g = exact_knn(ds, 10);
    const auto oracle = testing::brute_knn(ds, 10);
    for (NodeId u = 0; u < 200; ++u) CHECK(ids_of(g.neighbors(u)) == oracle[u]);
    const auto g4 = exact_knn(ds, 10, 4);
    for (NodeId u = 0; u < 200; ++u) CHECK(ids_of(g4.neighbors(u)) == oracle[u]);
}

TEST_CASE("exact_knn satisfies the k-NN set definition by full scan") {
    Dataset ds(8, testing::random_matrix(1500, 8, 4));
    const auto g = exact_knn(ds, 12);
    check_well_formed(g);
    for (NodeId u = 0; u < ds.size(); ++u) {
        const auto row = g.neighbors(u);
        std::vector<char> in(ds.size(), 0);
        for (const auto& nb : row) in[nb.id] = 1;
        double worst = 0.0;
        for (const auto& nb : row) worst = std::max(worst, testing::true_dist(ds, u, nb.id));
        double best_out = 1e300;
        for (NodeId v = 0; v < ds.size(); ++v) {
            if (v != u && in[v] == 0) best_out = std::min(best_out, testing::true_dist(ds, u, v));
        }
        CHECK(worst <= best_out * (1.0 + 1e-6));
    }
}

TEST_CASE("ties break toward the smaller id") {
    Dataset ds(1, {0.0F, 1.0F, -1.0F, 2.0F, -2.0F});
    const auto g = exact_knn(ds, 2);
    CHECK(ids_of(g.neighbors(0)) == std::vector<NodeId>{1, 2});
}

TEST_CASE("k' >= n clamps to n-1 with a warning; k'=0 is rejected") {
    Dataset ds(1, {0.0F, 1.0F, 3.0F});
    const auto g = exact_knn(ds, 5);
    CHECK(g.k_prime() == 2);
    CHECK_FALSE(g.warnings.empty());
    const auto nd = nn_descent(ds, 5, {});
    CHECK(nd.k_prime() == 2);
    CHECK_FALSE(nd.warnings.empty());
    CHECK_THROWS(exact_knn(ds, 0));
    CHECK_THROWS(nn_descent(ds, 0, {}));
}

TEST_CASE("nn_descent parameter validation") {
    Dataset ds(1, {0.0F, 1.0F, 3.0F});
    NnDescentParams p;
    p.iterations = 0;
    CHECK_THROWS(nn_descent(ds, 1, p));
    p.iterations = 1;
    p.sample_rate = 0.0;
    CHECK_THROWS(nn_descent(ds, 1, p));
    p.sample_rate = 1.5;
    CHECK_THROWS(nn_descent(ds, 1, p));
}

TEST_CASE("nn_descent with one iteration on three points is exact") {
    Dataset ds(1, {0.0F, 1.0F, 3.0F});
    NnDescentParams p;
    p.iterations = 1;
    p.sample_rate = 1.0;
    const auto g = nn_descent(ds, 1, p);
    CHECK(graph_recall(g, exact_knn(ds, 1)) == 1.0);
}

TEST_CASE("nn_descent reaches recall >= 0.85 on a 5k Gaussian cloud") {
    Dataset ds(16, gaussian_mixture(5000, 16, 10, 1.0F, 21));
    const auto exact = exact_knn(ds, 20);
    NnDescentParams p;
    p.iterations = 12;
    const auto approx = nn_descent(ds, 20, p);
    check_well_formed(approx);
    const double r = graph_recall(approx, exact);
    MESSAGE("nn_descent recall@20 = " << r);
    CHECK(r >= 0.85);
}

TEST_CASE("nn_descent recall is monotone in iterations and never self-loops") {
    Dataset ds(32, testing::random_matrix(3000, 32, 8));
    const auto exact = exact_knn(ds, 16);
    double prev = -1.0;
    for (std::size_t it : {1, 2, 6, 10}) {
        NnDescentParams p;
        p.iterations = it;
        p.delta = 0.0;
        p.seed = 77;
        const auto g = nn_descent(ds, 16, p);
        check_well_formed(g);
        const double r = graph_recall(g, exact);
        MESSAGE("iterations=" << it << " recall=" << r);
        CHECK(r >= prev);
        prev = r;
    }
}

TEST_CASE("nn_descent is deterministic single-threaded") {
    Dataset ds(8, testing::random_matrix(800, 8, 12));
    NnDescentParams p;
    p.iterations = 4;
    p.sample_rate = 0.5;
    const auto a = nn_descent(ds, 8, p);
    const auto b = nn_descent(ds, 8, p);
    for (NodeId u = 0; u < ds.size(); ++u) CHECK(ids_of(a.neighbors(u)) == ids_of(b.neighbors(u)));
}

TEST_CASE("nn_descent multi-threaded output is well formed") {
    Dataset ds(8, testing::random_matrix(2000, 8, 13));
    const auto g = nn_descent(ds, 10, {}, 4);
    check_well_formed(g);
    CHECK(graph_recall(g, exact_knn(ds, 10)) >= 0.85);
}

TEST_CASE("graph_recall examples") {
    KnnGraph a(2, 4);
    KnnGraph b(2, 4);
    for (NodeId u = 0; u < 2; ++u) {
        for (std::size_t i = 0; i < 4; ++i) {
            a.neighbors(u)[i] = {static_cast<NodeId>(10 + i), 0.0F};
            b.neighbors(u)[i] = {static_cast<NodeId>(10 + i), 0.0F};
        }
    }
    CHECK(graph_recall(a, b) == 1.0);
    for (NodeId u = 0; u < 2; ++u) b.neighbors(u)[3].id = 99;
    CHECK(graph_recall(a, b) == doctest::Approx(0.75));
    for (NodeId u = 0; u < 2; ++u) {
        for (std::size_t i = 0; i < 4; ++i) b.neighbors(u)[i].id = static_cast<NodeId>(50 + i);
    }
    CHECK(graph_recall(a, b) == 0.0);
    CHECK_THROWS(graph_recall(a, KnnGraph(2, 3)));
    CHECK_THROWS(graph_recall(a, KnnGraph(3, 4)));
}

TEST_CASE("build_knng switches to NN-Descent above the exact limit") {
    Dataset ds(4, testing::random_matrix(300, 4, 2));
    const auto exact = build_knng(ds, 5, 1, {}, 1000);
    CHECK(graph_recall(exact, exact_knn(ds, 5)) == 1.0);
    const auto approx = build_knng(ds, 5, 1, {}, 100);
    check_well_formed(approx);
}
