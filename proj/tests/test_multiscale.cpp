#include "hydronet/multiscale.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>

using namespace hydronet;

namespace {

NetworkGraph graph_from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
    std::vector<Node> nodes(n);
    for (int i = 0; i < n; ++i) {
        char id[8];
        std::snprintf(id, sizeof(id), "N%02d", i);
        nodes[i] = {id, i == 0 ? NodeKind::Reservoir : NodeKind::Junction,
                    0.0, 0.0, true, 0.0, i == 0 ? 50.0 : 0.0};
    }
    std::vector<Edge> list;
    int e = 0;
    for (auto [a, b] : edges) {
        char id[8];
        std::snprintf(id, sizeof(id), "E%02d", e++);
        list.push_back({id, nodes[a].id, nodes[b].id, EdgeKind::Pipe, 100.0, 0.3, 100.0,
                        0.0, 0.0, EdgeStatus::Open});
    }
    return NetworkGraph(std::move(nodes), std::move(list));
}

// Brute-force maximum modularity over all set partitions (n <= 8).
double best_partition_modularity(const NetworkGraph& g, std::vector<int>* best_out) {
    const int n = g.node_count();
    std::vector<int> assign(n, 0);
    double best = -1e9;
    std::function<void(int, int)> recurse = [&](int i, int used) {
        if (i == n) {
            const double q = modularity(g, assign);
            if (q > best) {
                best = q;
                if (best_out != nullptr) *best_out = assign;
            }
            return;
        }
        for (int c = 0; c <= used; ++c) {
            assign[i] = c;
            recurse(i + 1, std::max(used, c + 1));
        }
    };
    recurse(0, 0);
    return best;
}

NetworkGraph dumbbell_graph() {
    // Two 4-cliques joined by one edge between nodes 0 and 4.
    std::vector<std::pair<int, int>> edges;
    for (int a = 0; a < 4; ++a) {
        for (int b = a + 1; b < 4; ++b) edges.push_back({a, b});
    }
    for (int a = 4; a < 8; ++a) {
        for (int b = a + 1; b < 8; ++b) edges.push_back({a, b});
    }
    edges.push_back({0, 4});
    return graph_from_edges(8, edges);
}

}  // namespace

TEST_CASE("louvain: single node gives one cluster with Q = 0") {
    NetworkGraph g = graph_from_edges(1, {});
    Clustering c = louvain(g);
    CHECK(c.count == 1);
    CHECK(c.modularity == 0.0);
}

TEST_CASE("louvain recovers the dumbbell cliques (brute-force optimum)") {
    NetworkGraph g = dumbbell_graph();
    std::vector<int> best_assign;
    const double best_q = best_partition_modularity(g, &best_assign);

    Clustering c = louvain(g);
    CHECK(c.count == 2);
    CHECK(c.modularity == doctest::Approx(best_q).epsilon(1e-12));
    // The two cliques are exactly the clusters.
    for (int i = 1; i < 4; ++i) CHECK(c.assignment[i] == c.assignment[0]);
    for (int i = 5; i < 8; ++i) CHECK(c.assignment[i] == c.assignment[4]);
    CHECK(c.assignment[0] != c.assignment[4]);
}

TEST_CASE("louvain keeps K4 whole (no split improves Q)") {
    NetworkGraph g = graph_from_edges(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
    const double best_q = best_partition_modularity(g, nullptr);
    Clustering c = louvain(g);
    CHECK(c.count == 1);
    CHECK(c.modularity == doctest::Approx(best_q).epsilon(1e-12));
    CHECK(c.modularity == doctest::Approx(0.0));
}

TEST_CASE("louvain is deterministic and beats the singleton partition") {
    NetworkGraph g = dumbbell_graph();
    Clustering a = louvain(g);
    Clustering b = louvain(g);
    CHECK(a.assignment == b.assignment);
    CHECK(a.modularity == b.modularity);

    std::vector<int> singletons(g.node_count());
    for (int i = 0; i < g.node_count(); ++i) singletons[i] = i;
    CHECK(a.modularity >= modularity(g, singletons));

    // Every node assigned exactly once to a valid cluster.
    for (int i = 0; i < g.node_count(); ++i) {
        CHECK(a.assignment[i] >= 0);
        CHECK(a.assignment[i] < a.count);
    }
}

// ----------------------------------------------------------------------------
// Attention pooling
// ----------------------------------------------------------------------------

TEST_CASE("attention_pool: singleton cluster copies the micro score") {
    Rng rng(5);
    FusionParams params;
    params.W_pool = Matrix::Random(4, 6);
    params.v = Vector::Random(4);
    params.W_lambda = Matrix::Zero(3, 3);

    Vector micro(3);
    micro << 0.2, 0.7, 0.4;
    Matrix fused = Matrix::Random(3, 6);
    std::vector<double> beta;
    const double meso = attention_pool({1}, micro, fused, params, &beta);
    CHECK(meso == doctest::Approx(0.7));
    CHECK(beta[0] == doctest::Approx(1.0));
}

TEST_CASE("attention_pool: identical features give the mean; always convex") {
    FusionParams params;
    params.W_pool = Matrix::Random(4, 6);
    params.v = Vector::Random(4);
    params.W_lambda = Matrix::Zero(3, 3);

    Vector micro(3);
    micro << 0.1, 0.5, 0.9;
    Matrix fused(3, 6);
    fused.row(0) = Vector::Random(6).transpose();
    fused.row(1) = fused.row(0);
    fused.row(2) = fused.row(0);
    std::vector<double> beta;
    const double meso = attention_pool({0, 1, 2}, micro, fused, params, &beta);
    CHECK(meso == doctest::Approx(0.5).epsilon(1e-12));
    for (double b : beta) CHECK(b == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    Matrix varied = Matrix::Random(3, 6);
    const double meso2 = attention_pool({0, 1, 2}, micro, varied, params);
    CHECK(meso2 >= micro.minCoeff());
    CHECK(meso2 <= micro.maxCoeff());
}

// ----------------------------------------------------------------------------
// Fusion
// ----------------------------------------------------------------------------

TEST_CASE("fuse: zero W_lambda gives equal weights and the plain average") {
    NetworkGraph g = graph_from_edges(4, {{0, 1}, {1, 2}, {2, 3}});
    Clustering clustering = louvain(g);
    FusionParams params;
    params.W_pool = Matrix::Random(4, 6);
    params.v = Vector::Random(4);
    params.W_lambda = Matrix::Zero(3, 3);

    Vector micro(4);
    micro << 0.1, 0.9, 0.3, 0.6;
    Matrix fused = Matrix::Random(4, 6);
    FusionCache cache;
    ScoreBundle bundle = fuse_scores(micro, fused, clustering, params,
                                     FusionMode::Adaptive, cache);
    for (int k = 0; k < 3; ++k) {
        CHECK(bundle.lambda[k] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }
    for (int i = 0; i < 4; ++i) {
        const double expected = (micro[i] + bundle.meso[clustering.assignment[i]] +
                                 bundle.macro) /
                                3.0;
        CHECK(bundle.final[i] == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("fuse: constant micro scores are a fixed point") {
    NetworkGraph g = graph_from_edges(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
    Clustering clustering = louvain(g);
    FusionParams params;
    params.W_pool = Matrix::Random(4, 6);
    params.v = Vector::Random(4);
    params.W_lambda = Matrix::Random(3, 3);

    Vector micro = Vector::Constant(5, 0.42);
    Matrix fused = Matrix::Random(5, 6);
    FusionCache cache;
    ScoreBundle bundle = fuse_scores(micro, fused, clustering, params,
                                     FusionMode::Adaptive, cache);
    CHECK(bundle.s[0] == doctest::Approx(0.0));
    for (int i = 0; i < 5; ++i) {
        CHECK(bundle.final[i] == doctest::Approx(0.42).epsilon(1e-12));
    }
}

TEST_CASE("fuse: lambda lies on the simplex and final is the convex combination") {
    NetworkGraph g = dumbbell_graph();
    Clustering clustering = louvain(g);
    Rng rng(77);
    for (int trial = 0; trial < 10; ++trial) {
        FusionParams params;
        params.W_pool = Matrix::Random(4, 6);
        params.v = Vector::Random(4);
        params.W_lambda = Matrix::Random(3, 3) * 5.0;

        Vector micro(8);
        for (int i = 0; i < 8; ++i) micro[i] = rng.uniform(0.05, 0.95);
        Matrix fused = Matrix::Random(8, 6);
        FusionCache cache;
        ScoreBundle bundle = fuse_scores(micro, fused, clustering, params,
                                         FusionMode::Adaptive, cache);
        CHECK(bundle.lambda.minCoeff() >= 0.0);
        CHECK(bundle.lambda.sum() == doctest::Approx(1.0).epsilon(1e-12));
        double lo = std::min(bundle.micro.minCoeff(),
                             std::min(bundle.meso.minCoeff(), bundle.macro));
        double hi = std::max(bundle.micro.maxCoeff(),
                             std::max(bundle.meso.maxCoeff(), bundle.macro));
        for (int i = 0; i < 8; ++i) {
            CHECK(bundle.final[i] >= lo - 1e-12);
            CHECK(bundle.final[i] <= hi + 1e-12);
            const double expected = bundle.lambda[0] * micro[i] +
                                    bundle.lambda[1] *
                                        bundle.meso[clustering.assignment[i]] +
                                    bundle.lambda[2] * bundle.macro;
            CHECK(bundle.final[i] == doctest::Approx(expected).epsilon(1e-14));
        }
    }
}

TEST_CASE("fuse: micro-only mode forces lambda = (1,0,0)") {
    NetworkGraph g = graph_from_edges(4, {{0, 1}, {1, 2}, {2, 3}});
    Clustering clustering = louvain(g);
    FusionParams params;
    params.W_pool = Matrix::Random(4, 6);
    params.v = Vector::Random(4);
    params.W_lambda = Matrix::Random(3, 3);

    Vector micro(4);
    micro << 0.15, 0.85, 0.25, 0.65;
    Matrix fused = Matrix::Random(4, 6);
    FusionCache cache;
    ScoreBundle bundle = fuse_scores(micro, fused, clustering, params,
                                     FusionMode::MicroOnly, cache);
    CHECK(bundle.lambda[0] == 1.0);
    for (int i = 0; i < 4; ++i) CHECK(bundle.final[i] == micro[i]);
}

TEST_CASE("fuse matches independent step-by-step arithmetic on a 6-node case") {
    // Two 3-cliques joined by an edge -> two clusters.
    NetworkGraph g = graph_from_edges(
        6, {{0, 1}, {0, 2}, {1, 2}, {3, 4}, {3, 5}, {4, 5}, {2, 3}});
    Clustering clustering = louvain(g);
    REQUIRE(clustering.count == 2);

    const int pool = 2, width = 4;
    FusionParams params;
    params.W_pool.resize(pool, width);
    params.W_pool << 0.3, -0.2, 0.5, 0.1,
                     -0.4, 0.6, 0.2, -0.1;
    params.v.resize(pool);
    params.v << 0.7, -0.3;
    params.W_lambda.resize(3, 3);
    params.W_lambda << 0.2, -0.5, 0.8,
                       1.0, 0.3, -0.2,
                       -0.6, 0.4, 0.1;

    Vector micro(6);
    micro << 0.12, 0.91, 0.33, 0.47, 0.08, 0.76;
    Matrix fused(6, width);
    fused << 0.5, -0.1, 0.2, 0.7,
             -0.3, 0.4, 0.1, -0.2,
             0.6, 0.2, -0.5, 0.3,
             0.1, -0.6, 0.4, 0.2,
             -0.2, 0.3, 0.6, -0.4,
             0.4, 0.1, -0.3, 0.5;

    FusionCache cache;
    ScoreBundle bundle = fuse_scores(micro, fused, clustering, params,
                                     FusionMode::Adaptive, cache);

    // Independent spreadsheet-style evaluation.
    auto pool_cluster = [&](const std::vector<int>& members) {
        std::vector<double> logits;
        for (int i : members) {
            double q0 = 0, q1 = 0;
            for (int c = 0; c < width; ++c) {
                q0 += params.W_pool(0, c) * fused(i, c);
                q1 += params.W_pool(1, c) * fused(i, c);
            }
            logits.push_back(params.v[0] * std::tanh(q0) + params.v[1] * std::tanh(q1));
        }
        double denom = 0;
        for (double u : logits) denom += std::exp(u);
        double meso = 0;
        for (std::size_t m = 0; m < members.size(); ++m) {
            meso += std::exp(logits[m]) / denom * micro[members[m]];
        }
        return meso;
    };
    const auto members = cluster_members(clustering);
    const double meso0 = pool_cluster(members[0]);
    const double meso1 = pool_cluster(members[1]);
    const double macro = micro.mean();
    double var = 0;
    for (int i = 0; i < 6; ++i) var += (micro[i] - macro) * (micro[i] - macro);
    const double stddev = std::sqrt(var / 6.0);
    const double smax = std::max(meso0, meso1);
    double z[3];
    for (int r = 0; r < 3; ++r) {
        z[r] = params.W_lambda(r, 0) * stddev + params.W_lambda(r, 1) * smax +
               params.W_lambda(r, 2) * macro;
    }
    const double zmax = std::max({z[0], z[1], z[2]});
    double esum = 0;
    for (double& v : z) {
        v = std::exp(v - zmax);
        esum += v;
    }
    for (int i = 0; i < 6; ++i) {
        const double meso_i = clustering.assignment[i] == 0 ? meso0 : meso1;
        const double expected =
            z[0] / esum * micro[i] + z[1] / esum * meso_i + z[2] / esum * macro;
        CHECK(bundle.final[i] == doctest::Approx(expected).epsilon(1e-12));
    }
}
