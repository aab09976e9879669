#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "test_helpers.hpp"
#include "xgcn/errors.hpp"
#include "xgcn/shapley.hpp"

using namespace xgcn;
using namespace xgcn::testing;

namespace {

std::vector<FeatureStreams> random_background(int count, int c, int t, int v,
                                              std::uint64_t seed) {
    std::vector<FeatureStreams> out;
    for (int i = 0; i < count; ++i) out.push_back(random_streams(c, t, v, seed + i));
    return out;
}

// Brute-force Shapley by averaging marginal contributions over all F!
// player orderings.
std::vector<double> permutation_enumeration_oracle(const ValueFn& value,
                                                   const FeatureStreams& x,
                                                   const PlayerScheme& scheme,
                                                   const std::vector<FeatureStreams>& bg) {
    const int F = scheme.count();
    std::vector<int> perm(F);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<double> phi(F, 0.0);
    std::size_t count = 0;
    do {
        std::vector<bool> coalition(F, false);
        double prev = masked_value(value, x, scheme, coalition, bg);
        for (int step = 0; step < F; ++step) {
            coalition[perm[step]] = true;
            const double cur = masked_value(value, x, scheme, coalition, bg);
            phi[perm[step]] += cur - prev;
            prev = cur;
        }
        ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
    for (double& p : phi) p /= static_cast<double>(count);
    return phi;
}

}  // namespace

TEST_CASE("masked_predict: full coalition returns f(x) regardless of background") {
    const KeypointGraph g = make_synthetic_graph(5);
    GcnModel m = random_model(g, 2, 2, 2, 3, 3, 1);
    const FeatureStreams x = random_streams(2, 6, 5, 2);
    const PlayerScheme scheme = make_player_scheme(PlayerGranularity::kKeypoint, 5);

    BackgroundSet bg;
    bg.samples = random_background(3, 2, 6, 5, 10);
    bg.subsample_size = 3;

    const std::vector<bool> full(scheme.count(), true);
    const double fx = forward_logits(m, x)[1];
    CHECK(masked_predict(m, x, scheme, full, bg, 1) == doctest::Approx(fx).epsilon(1e-12));
}

TEST_CASE("masked_predict: empty coalition is the background mean logit") {
    const KeypointGraph g = make_synthetic_graph(5);
    GcnModel m = random_model(g, 2, 2, 2, 3, 3, 3);
    const FeatureStreams x = random_streams(2, 6, 5, 4);
    const PlayerScheme scheme = make_player_scheme(PlayerGranularity::kKeypoint, 5);

    BackgroundSet bg;
    bg.samples = random_background(4, 2, 6, 5, 20);
    bg.subsample_size = 4;

    double expect = 0.0;
    for (const auto& b : bg.samples) expect += forward_logits(m, b)[0] / 4.0;
    const std::vector<bool> empty(scheme.count(), false);
    CHECK(masked_predict(m, x, scheme, empty, bg, 0) ==
          doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("masked_predict matches an explicit composite-input oracle") {
    const KeypointGraph g = make_synthetic_graph(6);
    GcnModel m = random_model(g, 3, 2, 3, 4, 3, 5);
    const FeatureStreams x = random_streams(2, 5, 6, 6);

    for (PlayerGranularity gran :
         {PlayerGranularity::kKeypoint, PlayerGranularity::kStream,
          PlayerGranularity::kKeypointStream}) {
        const PlayerScheme scheme = make_player_scheme(gran, 6);
        BackgroundSet bg;
        bg.samples = random_background(3, 2, 5, 6, 30);
        bg.subsample_size = 3;

        Rng rng(40);
        std::vector<bool> coalition(scheme.count());
        for (std::size_t i = 0; i < coalition.size(); ++i) coalition[i] = rng.uniform01() < 0.5;

        // explicit composite build, block by block
        double expect = 0.0;
        for (const auto& b : bg.samples) {
            FeatureStreams comp = b;
            for (int p = 0; p < scheme.count(); ++p) {
                if (!coalition[p]) continue;
                for (const PlayerBlock& blk : scheme.players[p]) {
                    Tensor3& dst = comp.stream(blk.stream);
                    const Tensor3& src = x.stream(blk.stream);
                    for (int c = 0; c < dst.c; ++c)
                        for (int t = 0; t < dst.t; ++t)
                            for (int v = 0; v < dst.v; ++v)
                                if (blk.keypoint < 0 || blk.keypoint == v)
                                    dst.at(c, t, v) = src.at(c, t, v);
                }
            }
            expect += forward_logits(m, comp)[2];
        }
        expect /= static_cast<double>(bg.samples.size());
        CHECK(masked_predict(m, x, scheme, coalition, bg, 2) ==
              doctest::Approx(expect).epsilon(1e-10));
    }
}

TEST_CASE("masked_predict rejects an empty background") {
    const KeypointGraph g = make_synthetic_graph(5);
    GcnModel m = random_model(g, 2, 2, 2, 3, 3, 7);
    const FeatureStreams x = random_streams(2, 6, 5, 8);
    const PlayerScheme scheme = make_player_scheme(PlayerGranularity::kKeypoint, 5);
    BackgroundSet bg;
    bg.subsample_size = 1;
    CHECK_THROWS_AS(
        masked_predict(m, x, scheme, std::vector<bool>(scheme.count(), true), bg, 0),
        DataError);
}

TEST_CASE("exact shapley: additive surrogate gives w_i (g_i(x_i) - g_i(b_i)) exactly") {
    // value = sum over streams of w_s * sum(stream s entries)
    const int V = 4, T = 5, C = 2;
    const PlayerScheme scheme = make_player_scheme(PlayerGranularity::kStream, V);
    const double w[4] = {0.7, -1.3, 0.4, 2.1};
    const ValueFn value = [&](const FeatureStreams& s) {
        double acc = 0.0;
        for (int st = 0; st < 4; ++st)
            for (double xv : s.stream(st).data) acc += w[st] * xv;
        return acc;
    };
    const FeatureStreams x = random_streams(C, T, V, 50);
    const std::vector<FeatureStreams> bg = {random_streams(C, T, V, 51)};

    const ShapResult res = exact_shapley_fn(value, x, scheme, bg);
    for (int st = 0; st < 4; ++st) {
        double gx = 0.0, gb = 0.0;
        for (double xv : x.stream(st).data) gx += xv;
        for (double xv : bg[0].stream(st).data) gb += xv;
        CHECK(res.phi[st] == doctest::Approx(w[st] * (gx - gb)).epsilon(1e-9));
    }
    CHECK(std::abs(std::accumulate(res.phi.begin(), res.phi.end(), res.phi0) - res.fx) <
          1e-6);
}

TEST_CASE("exact shapley: symmetric players receive equal phi") {
    // star graph: keypoints 1 and 2 are interchangeable when their features
    // and background values coincide
    KeypointGraph g;
    g.num_keypoints = 4;
    g.parent = {0, 0, 0, 0};
    g.edges = {{0, 1}, {0, 2}, {0, 3}};
    g.partition_count = 3;
    GcnModel m = random_model(g, 2, 2, 2, 3, 3, 60);
    // make every per-keypoint parameter equal at keypoints 1 and 2
    auto equalize = [&](BranchBlock& blk) {
        for (auto& e : blk.gconv.edge_importance) e[2] = e[1];
        blk.att.proj[2] = blk.att.proj[1];
    };
    for (auto& b : m.branches) equalize(b);
    equalize(m.main);

    FeatureStreams x = random_streams(2, 5, 4, 61);
    FeatureStreams b0 = random_streams(2, 5, 4, 62);
    for (int st = 0; st < 4; ++st)
        for (int c = 0; c < 2; ++c)
            for (int t = 0; t < 5; ++t) {
                x.stream(st).at(c, t, 2) = x.stream(st).at(c, t, 1);
                b0.stream(st).at(c, t, 2) = b0.stream(st).at(c, t, 1);
            }

    BackgroundSet bg;
    bg.samples = {b0};
    bg.subsample_size = 1;
    const PlayerScheme scheme = make_player_scheme(PlayerGranularity::kKeypoint, 4);
    const ShapResult res = exact_shapley(m, x, scheme, bg, 1);
    CHECK(res.phi[1] == doctest::Approx(res.phi[2]).epsilon(1e-9));
}

TEST_CASE("exact shapley equals the 5!-permutation enumeration oracle") {
    const KeypointGraph g = make_synthetic_graph(5);
    GcnModel m = random_model(g, 2, 2, 2, 3, 3, 70);
    const FeatureStreams x = random_streams(2, 4, 5, 71);
    const std::vector<FeatureStreams> bg = random_background(2, 2, 4, 5, 72);
    const PlayerScheme scheme = make_player_scheme(PlayerGranularity::kKeypoint, 5);

    const ValueFn value = [&](const FeatureStreams& s) { return forward_logits(m, s)[0]; };
    const ShapResult fast = exact_shapley_fn(value, x, scheme, bg);
    const std::vector<double> oracle = permutation_enumeration_oracle(value, x, scheme, bg);
    for (int i = 0; i < 5; ++i)
        CHECK(fast.phi[i] == doctest::Approx(oracle[i]).epsilon(1e-9));
}

TEST_CASE("exact shapley: efficiency holds by construction") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const KeypointGraph g = make_synthetic_graph(6);
        GcnModel m = random_model(g, 3, 2, 2, 3, 3, 80 + seed);
        const FeatureStreams x = random_streams(2, 4, 6, 90 + seed);
        BackgroundSet bg;
        bg.samples = random_background(2, 2, 4, 6, 100 + seed);
        bg.subsample_size = 2;
        const PlayerScheme scheme = make_player_scheme(PlayerGranularity::kKeypoint, 6);
        const ShapResult res = exact_shapley(m, x, scheme, bg, 2);
        const double total = std::accumulate(res.phi.begin(), res.phi.end(), res.phi0);
        CHECK(std::abs(total - res.fx) <= 1e-6);
    }
}

TEST_CASE("exact shapley rejects player counts beyond the enumeration cap") {
    const KeypointGraph g = make_synthetic_graph(8);
    GcnModel m = random_model(g, 2, 2, 2, 3, 3, 110);
    const FeatureStreams x = random_streams(2, 4, 8, 111);
    BackgroundSet bg;
    bg.samples = random_background(1, 2, 4, 8, 112);
    bg.subsample_size = 1;
    // keypoint_stream: 8 * 4 = 32 players > 14
    const PlayerScheme scheme = make_player_scheme(PlayerGranularity::kKeypointStream, 8);
    try {
        exact_shapley(m, x, scheme, bg, 0);
        FAIL("expected rejection");
    } catch (const UsageError& e) {
        CHECK(std::string(e.what()).find("sampled_shapley") != std::string::npos);
    }
}

TEST_CASE("missingness: a player with zero downstream weight gets phi exactly zero") {
    const KeypointGraph g = make_synthetic_graph(5);
    GcnModel m = random_model(g, 2, 2, 2, 3, 3, 120);
    // silence keypoint 3 and everything it can reach in one hop: with those
    // destination columns zeroed in every branch conv, its input cannot alter
    // any activation
    std::vector<int> dead = {3};
    for (const auto& [a, b] : g.edges) {
        if (a == 3) dead.push_back(b);
        if (b == 3) dead.push_back(a);
    }
    for (auto& blk : m.branches)
        for (auto& e : blk.gconv.edge_importance)
            for (int v : dead) e[v] = 0.0;

    const FeatureStreams x = random_streams(2, 4, 5, 121);
    BackgroundSet bg;
    bg.samples = random_background(2, 2, 4, 5, 122);
    bg.subsample_size = 2;
    const PlayerScheme scheme = make_player_scheme(PlayerGranularity::kKeypoint, 5);
    const ShapResult res = exact_shapley(m, x, scheme, bg, 1);
    CHECK(std::abs(res.phi[3]) <= 1e-9);
}

TEST_CASE("sampled shapley: deterministic given the seed, and converges at F=2") {
    const int V = 4;
    const PlayerScheme scheme = make_player_scheme(PlayerGranularity::kStream, V);
    // nonlinear value so the estimator actually has work to do
    const ValueFn value = [](const FeatureStreams& s) {
        double acc = 0.0;
        for (int st = 0; st < 4; ++st)
            for (double x : s.stream(st).data) acc += x;
        return acc + 0.3 * std::sin(acc);
    };
    const FeatureStreams x = random_streams(2, 3, V, 130);
    const std::vector<FeatureStreams> bg = {random_streams(2, 3, V, 131)};

    const ShapResult a = sampled_shapley_fn(value, x, scheme, bg, 40, 7);
    const ShapResult b = sampled_shapley_fn(value, x, scheme, bg, 40, 7);
    CHECK(a.phi == b.phi);

    // F = 2: a two-player scheme enumerates both orders almost immediately
    PlayerScheme two;
    two.granularity = PlayerGranularity::kStream;
    two.num_keypoints = V;
    two.players = {{{0, -1}, {1, -1}}, {{2, -1}, {3, -1}}};
    const ShapResult exact = exact_shapley_fn(value, x, two, bg);
    const ShapResult sampled = sampled_shapley_fn(value, x, two, bg, 64, 3);
    for (int i = 0; i < 2; ++i)
        CHECK(sampled.phi[i] == doctest::Approx(exact.phi[i]).epsilon(1e-9));
}

TEST_CASE("sampled shapley approaches exact as permutations grow") {
    const KeypointGraph g = make_synthetic_graph(6);
    GcnModel m = random_model(g, 2, 2, 2, 3, 3, 140);
    const FeatureStreams x = random_streams(2, 4, 6, 141);
    BackgroundSet bg;
    bg.samples = random_background(2, 2, 4, 6, 142);
    bg.subsample_size = 2;
    const PlayerScheme scheme = make_player_scheme(PlayerGranularity::kKeypoint, 6);

    const ShapResult exact = exact_shapley(m, x, scheme, bg, 0);
    const ShapResult sampled = sampled_shapley(m, x, scheme, bg, 0, 600, 4);
    double worst = 0.0, scale = 0.0;
    for (int i = 0; i < 6; ++i) {
        worst = std::max(worst, std::abs(sampled.phi[i] - exact.phi[i]));
        scale = std::max(scale, std::abs(exact.phi[i]));
    }
    CHECK(worst < 0.05 * (scale + 1e-12));
    CHECK(sampled.estimator == "permutation");
}

TEST_CASE("aggregate_subsampled: identity, idempotence, and the even-split identity") {
    const KeypointGraph g = make_synthetic_graph(4);
    GcnModel m = random_model(g, 2, 2, 2, 3, 3, 150);
    const FeatureStreams x = random_streams(2, 4, 4, 151);
    const PlayerScheme scheme = make_player_scheme(PlayerGranularity::kStream, 4);

    BackgroundSet bg;
    bg.samples = random_background(10, 2, 4, 4, 152);
    bg.subsample_size = 2;

    const ShapResult whole = exact_shapley(m, x, scheme, bg, 1);
    CHECK(aggregate_subsampled({whole}).phi == whole.phi);

    const ShapResult twice = aggregate_subsampled({whole, whole});
    for (int i = 0; i < 4; ++i) CHECK(twice.phi[i] == doctest::Approx(whole.phi[i]));

    // 10 samples split 5 x 2 must equal the single pass over the union
    std::vector<ShapResult> parts;
    for (const BackgroundSet& sub : split_background(bg))
        parts.push_back(exact_shapley(m, x, scheme, sub, 1));
    REQUIRE(parts.size() == 5);
    const ShapResult agg = aggregate_subsampled(parts);
    for (int i = 0; i < 4; ++i)
        CHECK(agg.phi[i] == doctest::Approx(whole.phi[i]).epsilon(1e-9));
    CHECK(agg.phi0 == doctest::Approx(whole.phi0).epsilon(1e-9));

    // mismatched class index is rejected
    ShapResult other = whole;
    other.class_index = 0;
    CHECK_THROWS_AS(aggregate_subsampled({whole, other}), DataError);
}

TEST_CASE("shap_to_keypoint_scores: keypoint identity and keypoint_stream sums") {
    ShapResult res;
    res.granularity = PlayerGranularity::kKeypoint;
    res.num_keypoints = 3;
    res.phi = {0.5, -1.0, 2.0};
    res.class_index = 1;
    const PlayerScheme kp = make_player_scheme(PlayerGranularity::kKeypoint, 3);
    const ExplanationMap e = shap_to_keypoint_scores(res, kp);
    CHECK(e.scores == res.phi);
    CHECK(e.method == "shap");
    CHECK(e.layer == "input");

    ShapResult ks;
    ks.granularity = PlayerGranularity::kKeypointStream;
    ks.num_keypoints = 2;
    ks.phi = {0.1, 0.2, 0.3, 0.4, -1.0, 0.0, 0.0, 0.5};
    const PlayerScheme ks_scheme = make_player_scheme(PlayerGranularity::kKeypointStream, 2);
    const ExplanationMap e2 = shap_to_keypoint_scores(ks, ks_scheme);
    CHECK(e2.scores[0] == doctest::Approx(1.0));
    CHECK(e2.scores[1] == doctest::Approx(-0.5));

    ShapResult st;
    st.granularity = PlayerGranularity::kStream;
    st.num_keypoints = 2;
    st.phi = {1, 2, 3, 4};
    const PlayerScheme st_scheme = make_player_scheme(PlayerGranularity::kStream, 2);
    CHECK_THROWS_AS(shap_to_keypoint_scores(st, st_scheme), UsageError);
}

TEST_CASE("make_background draws from the pool deterministically") {
    const auto pool = random_background(8, 2, 3, 4, 160);
    const BackgroundSet a = make_background(pool, 5, 2, 9);
    const BackgroundSet b = make_background(pool, 5, 2, 9);
    REQUIRE(a.samples.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(a.samples[i].j.data == b.samples[i].j.data);
    CHECK_THROWS_AS(make_background(pool, 4, 5, 9), DataError);
}
