#include <doctest.h>

#include <cmath>

#include "test_helpers.hpp"
#include "xgcn/adjacency.hpp"
#include "xgcn/errors.hpp"
#include "xgcn/model.hpp"

using namespace xgcn;
using namespace xgcn::testing;

TEST_CASE("normalize_adjacency: single keypoint gives the unit self-loop") {
    KeypointGraph g;
    g.num_keypoints = 1;
    g.parent = {0};
    g.partition_count = 1;
    const NormalizedAdjacency adj = normalize_adjacency(g, PartitionStrategy::kUniform);
    REQUIRE(adj.partitions.size() == 1);
    CHECK(adj.partitions[0].at(0, 0) == 1.0);
}

TEST_CASE("normalize_adjacency: 2-keypoint path, uniform partitioning") {
    KeypointGraph g;
    g.num_keypoints = 2;
    g.parent = {0, 0};
    g.edges = {{0, 1}};
    g.partition_count = 1;
    const NormalizedAdjacency adj = normalize_adjacency(g, PartitionStrategy::kUniform);
    for (int u = 0; u < 2; ++u)
        for (int w = 0; w < 2; ++w) CHECK(adj.partitions[0].at(u, w) == doctest::Approx(0.5));
}

TEST_CASE("normalize_adjacency matches the per-entry loop oracle") {
    const KeypointGraph g = make_synthetic_graph(11);
    const NormalizedAdjacency adj = normalize_adjacency(g, PartitionStrategy::kStgcn);
    const auto oracle = oracle_normalized_partitions(g, PartitionStrategy::kStgcn);
    REQUIRE(adj.partitions.size() == 3);
    for (int p = 0; p < 3; ++p)
        for (int u = 0; u < 11; ++u)
            for (int w = 0; w < 11; ++w)
                CHECK(adj.partitions[p].at(u, w) ==
                      doctest::Approx(oracle[p][u][w]).epsilon(1e-12));
}

TEST_CASE("build_partitions sum to A + I") {
    for (std::uint64_t seed : {3u, 4u, 5u}) {
        const KeypointGraph g = random_graph(9, seed, 0.2);
        const auto parts = build_partitions(g, PartitionStrategy::kStgcn);
        for (int u = 0; u < 9; ++u)
            for (int w = 0; w < 9; ++w) {
                double sum = 0.0;
                for (const auto& p : parts) sum += p.at(u, w);
                const double expect = (u == w) ? 1.0 : (g.has_edge(u, w) ? 1.0 : 0.0);
                CHECK(sum == expect);
            }
    }
}

namespace {

GcnModel tiny_model(std::uint64_t seed, int num_classes = 3, int V = 5) {
    const KeypointGraph g = make_synthetic_graph(V);
    return random_model(g, num_classes, 2, 3, 4, 5, seed);
}

}  // namespace

TEST_CASE("graph conv: zero edge importance annihilates the output") {
    GcnModel m = tiny_model(1);
    for (auto& e : m.branches[0].gconv.edge_importance)
        std::fill(e.begin(), e.end(), 0.0);
    const FeatureStreams s = random_streams(2, 6, 5, 2);
    const auto res = forward(m, s, {"j/input"});
    for (double x : res.records[0].activations.data) CHECK(x == 0.0);
}

TEST_CASE("graph conv: identity partition, unit E, identity W passes input through") {
    GraphConvLayer layer;
    layer.in_channels = 2;
    layer.out_channels = 2;
    layer.partitions = 1;
    layer.weights = {{1.0, 0.0, 0.0, 1.0}};
    layer.edge_importance = {{1.0, 1.0, 1.0}};

    NormalizedAdjacency adj;
    MatV eye(3);
    for (int i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
    adj.partitions = {eye};

    Rng rng(4);
    const Tensor3 in = random_tensor(2, 4, 3, rng);
    const Tensor3 out = graph_conv_forward(layer, adj, in);
    for (std::size_t n = 0; n < in.size(); ++n) CHECK(out.data[n] == in.data[n]);
}

TEST_CASE("graph conv: random instance matches the loop oracle (arbitrary partitions)") {
    // C_in=2, C_out=3, T=4, V=5, P=2 with dense random partition matrices
    Rng rng(99);
    GraphConvLayer layer;
    layer.in_channels = 2;
    layer.out_channels = 3;
    layer.partitions = 2;
    NormalizedAdjacency adj;
    for (int j = 0; j < 2; ++j) {
        std::vector<double> w(6);
        for (double& x : w) x = rng.uniform(-1, 1);
        layer.weights.push_back(w);
        std::vector<double> e(5);
        for (double& x : e) x = rng.uniform(0.2, 1.5);
        layer.edge_importance.push_back(e);
        MatV a(5);
        for (double& x : a.data) x = rng.uniform(-0.5, 0.5);
        adj.partitions.push_back(a);
    }
    const Tensor3 in = random_tensor(2, 4, 5, rng);
    const Tensor3 got = graph_conv_forward(layer, adj, in);

    Tensor3 expect(3, 4, 5);
    for (int j = 0; j < 2; ++j)
        for (int o = 0; o < 3; ++o)
            for (int i = 0; i < 2; ++i)
                for (int t = 0; t < 4; ++t)
                    for (int w = 0; w < 5; ++w)
                        for (int u = 0; u < 5; ++u)
                            expect.at(o, t, w) += layer.w(j, o, i) * in.at(i, t, u) *
                                                  adj.partitions[j].at(u, w) *
                                                  layer.edge_importance[j][w];
    for (std::size_t n = 0; n < expect.size(); ++n)
        CHECK(got.data[n] == doctest::Approx(expect.data[n]).epsilon(1e-10));
}

TEST_CASE("graph conv inside the model matches the graph-derived loop oracle") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const int V = 4 + static_cast<int>(seed % 4);
        const KeypointGraph g = random_graph(V, seed + 10, 0.25);
        GcnModel m = random_model(g, 2, 2, 3, 4, 3, seed + 20);
        const FeatureStreams s = random_streams(2, 4, V, seed + 30);
        const auto res = forward(m, s, {"b/input"});
        const Tensor3 oracle =
            oracle_graph_conv(m.branches[2].gconv, g, m.config.strategy, s.b);
        REQUIRE(res.records[0].activations.size() == oracle.size());
        for (std::size_t n = 0; n < oracle.size(); ++n)
            CHECK(res.records[0].activations.data[n] ==
                  doctest::Approx(oracle.data[n]).epsilon(1e-10));
    }
}

TEST_CASE("forward: zero parameters give zero logits") {
    GcnModel m = tiny_model(3);
    for (NamedTensor& t : named_tensors(m))
        std::fill(t.data->begin(), t.data->end(), 0.0);
    const FeatureStreams s = random_streams(2, 6, 5, 5);
    const auto res = forward(m, s, {"j/input", "main/input"});
    for (double l : res.logits) CHECK(l == 0.0);
    for (const auto& rec : res.records)
        for (double x : rec.activations.data) CHECK(x == 0.0);
}

TEST_CASE("forward is deterministic") {
    GcnModel m = tiny_model(6);
    const FeatureStreams s = random_streams(2, 7, 5, 6);
    CHECK(forward_logits(m, s) == forward_logits(m, s));
}

TEST_CASE("forward matches the straight-line oracle") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const KeypointGraph g = random_graph(6, seed + 1, 0.15);
        GcnModel m = random_model(g, 3, 2, 3, 5, 5, seed + 40);
        const FeatureStreams s = random_streams(2, 8, 6, seed + 50);
        const std::vector<double> got = forward_logits(m, s);
        const std::vector<double> expect = oracle_forward(m, s);
        REQUIRE(got.size() == expect.size());
        for (std::size_t c = 0; c < got.size(); ++c)
            CHECK(got[c] == doctest::Approx(expect[c]).epsilon(1e-10));
    }
}

TEST_CASE("forward rejects unknown capture layers before compute") {
    GcnModel m = tiny_model(9);
    const FeatureStreams s = random_streams(2, 4, 5, 9);
    CHECK_THROWS_AS(forward(m, s, {"nope/input"}), UsageError);
    CHECK_THROWS_AS(forward(m, s, {"main/pool"}), UsageError);
}

TEST_CASE("scaling one keypoint's edge importance scales exactly its output column") {
    GcnModel m = tiny_model(11);
    const FeatureStreams s = random_streams(2, 5, 5, 12);
    const auto base = forward(m, s, {"j/input"});

    const int n = 2;
    const double scale = 3.5;
    GcnModel scaled = m;
    for (auto& e : scaled.branches[0].gconv.edge_importance) e[n] *= scale;
    const auto out = forward(scaled, s, {"j/input"});

    const Tensor3& a = base.records[0].activations;
    const Tensor3& b = out.records[0].activations;
    for (int o = 0; o < a.c; ++o)
        for (int t = 0; t < a.t; ++t)
            for (int v = 0; v < a.v; ++v) {
                if (v == n)
                    CHECK(b.at(o, t, v) == doctest::Approx(scale * a.at(o, t, v)).epsilon(1e-12));
                else
                    CHECK(b.at(o, t, v) == a.at(o, t, v));
            }
}

TEST_CASE("single-keypoint model: retention factor scales the conv output exactly") {
    // With one keypoint the whole feature map is that keypoint's column, so
    // the layer output must scale by exactly the retention factor.
    KeypointGraph g;
    g.num_keypoints = 1;
    g.parent = {0};
    g.partition_count = 1;
    GcnModel m = random_model(g, 2, 2, 3, 4, 3, 5, PartitionStrategy::kUniform);
    const FeatureStreams s = random_streams(2, 5, 1, 6);

    const double factor = 0.0035;
    GcnModel scaled = m;
    for (auto& e : scaled.branches[0].gconv.edge_importance) e[0] *= factor;

    const auto base = forward(m, s, {"j/input"});
    const auto out = forward(scaled, s, {"j/input"});
    for (std::size_t n = 0; n < base.records[0].activations.size(); ++n)
        CHECK(out.records[0].activations.data[n] ==
              doctest::Approx(factor * base.records[0].activations.data[n]).epsilon(1e-12));
}

TEST_CASE("relabeling keypoints permutes nothing observable") {
    const KeypointGraph g = make_synthetic_graph(6);
    GcnModel m = random_model(g, 3, 2, 3, 4, 5, 31);
    const FeatureStreams s = random_streams(2, 6, 6, 32);
    const std::vector<double> base = forward_logits(m, s);

    // permutation keeping 0 as root for a valid rooted tree
    const std::vector<int> perm = {0, 3, 1, 5, 2, 4};  // old -> new index
    KeypointGraph pg;
    pg.num_keypoints = 6;
    pg.partition_count = g.partition_count;
    pg.parent.assign(6, 0);
    for (int i = 0; i < 6; ++i) pg.parent[perm[i]] = perm[g.parent[i]];
    for (const auto& [a, b] : g.edges) pg.edges.emplace_back(perm[a], perm[b]);
    pg.validate();

    GcnModel pm = m;
    pm.graph = pg;
    pm.adj = normalize_adjacency(pg, m.config.strategy);
    auto permute_block = [&](BranchBlock& blk) {
        for (auto& e : blk.gconv.edge_importance) {
            std::vector<double> ne(6);
            for (int i = 0; i < 6; ++i) ne[perm[i]] = e[i];
            e = ne;
        }
        std::vector<double> np(6);
        for (int i = 0; i < 6; ++i) np[perm[i]] = blk.att.proj[i];
        blk.att.proj = np;
    };
    for (auto& blk : pm.branches) permute_block(blk);
    permute_block(pm.main);

    FeatureStreams ps = s;
    for (int st = 0; st < 4; ++st)
        for (int c = 0; c < 2; ++c)
            for (int t = 0; t < 6; ++t)
                for (int v = 0; v < 6; ++v)
                    ps.stream(st).at(c, t, perm[v]) = s.stream(st).at(c, t, v);

    const std::vector<double> permuted = forward_logits(pm, ps);
    for (std::size_t c = 0; c < base.size(); ++c)
        CHECK(permuted[c] == doctest::Approx(base[c]).epsilon(1e-10));
}

TEST_CASE("frame attention requires matching frame count") {
    const KeypointGraph g = make_synthetic_graph(5);
    ModelConfig cfg;
    cfg.num_classes = 2;
    cfg.in_channels = 2;
    cfg.branch_channels = 2;
    cfg.main_channels = 3;
    cfg.tcn_kernel = 3;
    cfg.main_attention = AttentionMode::kFrame;
    cfg.frame_length = 10;
    GcnModel m = make_model(cfg, g, 3);
    CHECK_NOTHROW(forward_logits(m, random_streams(2, 10, 5, 1)));
    CHECK_THROWS_AS(forward_logits(m, random_streams(2, 9, 5, 1)), DataError);

    cfg.frame_length = 0;
    CHECK_THROWS_AS(make_model(cfg, g, 3), UsageError);
}
