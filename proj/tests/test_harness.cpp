#include <doctest.h>

#include <cmath>
#include <numeric>

#include "test_helpers.hpp"
#include "xgcn/errors.hpp"
#include "xgcn/gradcam.hpp"
#include "xgcn/harness.hpp"

using namespace xgcn;
using namespace xgcn::testing;

namespace {

std::vector<LabeledExample> random_split(const KeypointGraph& g, int count, int frames,
                                         std::uint64_t seed, int num_classes = 2) {
    std::vector<LabeledExample> out;
    for (int i = 0; i < count; ++i)
        out.push_back({random_streams(2, frames, g.num_keypoints, seed + i),
                       i % num_classes});
    return out;
}

KeypointRanking trivial_ranking(int V) {
    KeypointRanking r;
    r.order.resize(V);
    std::iota(r.order.begin(), r.order.end(), 0);
    r.score_by_keypoint.assign(V, 0.0);
    for (int v = 0; v < V; ++v) r.score_by_keypoint[v] = V - v;
    return r;
}

}  // namespace

TEST_CASE("perturb_model: factor 1 is the identity on logits") {
    const KeypointGraph g = make_synthetic_graph(6);
    GcnModel m = random_model(g, 2, 2, 3, 4, 5, 1);
    const FeatureStreams s = random_streams(2, 8, 6, 2);
    const GcnModel p = perturb_model(m, {0, 2, 5}, 1.0, all_gconv_layers());
    CHECK(forward_logits(m, s) == forward_logits(p, s));
}

TEST_CASE("perturb_model: factor 0 on all keypoints zeroes the main conv output") {
    const KeypointGraph g = make_synthetic_graph(6);
    GcnModel m = random_model(g, 2, 2, 3, 4, 5, 3);
    std::vector<int> all(6);
    std::iota(all.begin(), all.end(), 0);
    const GcnModel p = perturb_model(m, all, 0.0, {"main"});
    const FeatureStreams s = random_streams(2, 8, 6, 4);
    const auto res = forward(p, s, {"main/input"});
    for (double x : res.records[0].activations.data) CHECK(x == 0.0);
}

TEST_CASE("perturb_model leaves the original untouched and validates input") {
    const KeypointGraph g = make_synthetic_graph(5);
    GcnModel m = random_model(g, 2, 2, 2, 3, 3, 5);
    const std::vector<double> before = m.main.gconv.edge_importance[0];
    (void)perturb_model(m, {1}, 0.5, {"main"});
    CHECK(m.main.gconv.edge_importance[0] == before);

    CHECK_THROWS_AS(perturb_model(m, {1}, 0.5, {}), UsageError);
    CHECK_THROWS_AS(perturb_model(m, {9}, 0.5, {"main"}), std::invalid_argument);
    CHECK_THROWS_AS(perturb_model(m, {1}, 0.5, {"spine"}), UsageError);
}

TEST_CASE("perturbation_sweep: k_max 0 is the baseline point") {
    const KeypointGraph g = make_synthetic_graph(5);
    GcnModel m = random_model(g, 2, 2, 2, 3, 3, 6);
    const auto split = random_split(g, 6, 8, 10);

    PerturbationPlan plan;
    plan.ranking = trivial_ranking(5);
    plan.k_max = 0;
    const PerturbationCurve c = perturbation_sweep(m, split, plan);
    REQUIRE(c.points.size() == 1);
    CHECK(c.points[0].first == 0);
    CHECK(c.points[0].second == doctest::Approx(accuracy(m, split)));
}

TEST_CASE("perturbation_sweep: random mode reproduces with a fixed seed") {
    const KeypointGraph g = make_synthetic_graph(5);
    GcnModel m = random_model(g, 2, 2, 2, 3, 3, 7);
    const auto split = random_split(g, 8, 8, 20);

    PerturbationPlan plan;
    plan.ranking = trivial_ranking(5);
    plan.k_max = 4;
    plan.mode = PerturbMode::kRandom;
    plan.trials = 3;
    plan.seed = 77;
    const PerturbationCurve a = perturbation_sweep(m, split, plan);
    const PerturbationCurve b = perturbation_sweep(m, split, plan);
    CHECK(a.points == b.points);
    CHECK(a.points.front().first == 0);
    for (std::size_t i = 1; i < a.points.size(); ++i)
        CHECK(a.points[i].first == static_cast<int>(i));
}

TEST_CASE("perturbation_sweep rejects auc on non-binary data") {
    const KeypointGraph g = make_synthetic_graph(5);
    GcnModel m = random_model(g, 3, 2, 2, 3, 3, 8);
    auto split = random_split(g, 6, 8, 30, 3);
    PerturbationPlan plan;
    plan.ranking = trivial_ranking(5);
    plan.k_max = 1;
    plan.metric = Metric::kAuc;
    CHECK_THROWS_AS(perturbation_sweep(m, split, plan), DataError);
}

TEST_CASE("rank_keypoints: single map and dominance ordering") {
    ExplanationMap m;
    m.method = "gradcam";
    m.num_windows = 1;
    m.num_keypoints = 3;
    m.scores = {0.2, -0.9, 0.1};
    const RankingTable t = rank_keypoints({m});
    REQUIRE(t.rows.size() == 3);
    CHECK(t.rows[0].keypoint == 1);
    CHECK(t.rows[0].median == doctest::Approx(0.9));
    CHECK(t.rows[0].q1 == t.rows[0].q3);  // single observation

    ExplanationMap a = m, b = m;
    a.scores = {0.2, 0.1, 5.0};
    b.scores = {0.3, 0.2, 4.0};
    const RankingTable t2 = rank_keypoints({a, b});
    CHECK(t2.rows[0].keypoint == 2);
}

TEST_CASE("rank_keypoints quartiles match the sort oracle over many maps") {
    Rng rng(40);
    std::vector<ExplanationMap> maps;
    std::vector<std::vector<double>> per_kp(4);
    for (int i = 0; i < 50; ++i) {
        ExplanationMap m;
        m.method = "shap";
        m.num_windows = 2;
        m.num_keypoints = 4;
        m.scores.resize(8);
        for (double& s : m.scores) s = rng.uniform(-1, 1);
        for (int w = 0; w < 2; ++w)
            for (int v = 0; v < 4; ++v) per_kp[v].push_back(std::abs(m.score(w, v)));
        maps.push_back(std::move(m));
    }
    const RankingTable t = rank_keypoints(maps);
    for (const RankingRow& row : t.rows) {
        CHECK(row.median ==
              doctest::Approx(quantile_type7(per_kp[row.keypoint], 0.5)).epsilon(1e-12));
        CHECK(row.q1 ==
              doctest::Approx(quantile_type7(per_kp[row.keypoint], 0.25)).epsilon(1e-12));
        CHECK(row.q3 ==
              doctest::Approx(quantile_type7(per_kp[row.keypoint], 0.75)).epsilon(1e-12));
    }
    for (std::size_t i = 1; i < t.rows.size(); ++i)
        CHECK(t.rows[i - 1].median >= t.rows[i].median);
}

TEST_CASE("correlation_report: reference against itself is rho = 1") {
    const KeypointGraph g = make_synthetic_graph(6);
    GcnModel m = random_model(g, 2, 2, 3, 4, 5, 50);
    const auto split = random_split(g, 4, 10, 60);
    const CorrelationReport r =
        correlation_report(m, split, {"main/attention"}, "main/attention");
    REQUIRE(r.rows.size() == 1);
    CHECK(r.rows[0].defined);
    CHECK(r.rows[0].rho == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("correlation_report covers branch and sum layers") {
    const KeypointGraph g = make_synthetic_graph(5);
    GcnModel m = random_model(g, 2, 2, 2, 3, 3, 51);
    const auto split = random_split(g, 3, 8, 70);
    const std::vector<std::string> layers = {"j/input", "v/tcn", "sum/input", "main/tcn"};
    const CorrelationReport r = correlation_report(m, split, layers, "main/attention");
    CHECK(r.rows.size() == layers.size());
    for (const auto& row : r.rows)
        if (row.defined) CHECK(std::abs(row.rho) <= 1.0 + 1e-12);
}

TEST_CASE("spearman null check: independent random scores decorrelate") {
    Rng rng(80);
    std::vector<double> a(1000), b(1000);
    for (int i = 0; i < 1000; ++i) {
        a[i] = rng.uniform(0, 1);
        b[i] = rng.uniform(0, 1);
    }
    CHECK(std::abs(spearman(a, b).rho) < 0.1);
}

TEST_CASE("pgi_pgu: identity factor gives exactly zero, full k makes them equal") {
    const KeypointGraph g = make_synthetic_graph(5);
    GcnModel m = random_model(g, 2, 2, 2, 3, 3, 90);
    const FeatureStreams x = random_streams(2, 8, 5, 91);

    ExplanationMap e;
    e.method = "gradcam";
    e.num_windows = 1;
    e.num_keypoints = 5;
    e.scores = {0.5, 0.1, 0.9, 0.3, 0.2};

    const auto [pgi1, pgu1] = pgi_pgu(m, x, e, 3, 1.0);
    CHECK(pgi1 == 0.0);
    CHECK(pgu1 == 0.0);

    const auto [pgi_full, pgu_full] = pgi_pgu(m, x, e, 5, 0.0035);
    CHECK(pgi_full == doctest::Approx(pgu_full).epsilon(1e-12));

    CHECK_THROWS_AS(pgi_pgu(m, x, e, 6, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(pgi_pgu(m, x, e, 0, 0.5), std::invalid_argument);
}

TEST_CASE("runtime_benchmark: empty config list yields an empty report") {
    const KeypointGraph g = make_synthetic_graph(5);
    GcnModel m = random_model(g, 2, 2, 2, 3, 3, 95);
    const auto split = random_split(g, 3, 6, 96);
    BackgroundSet bg;
    bg.samples = {random_streams(2, 6, 5, 97)};
    bg.subsample_size = 1;
    const RuntimeReport r = runtime_benchmark(m, split, bg, {});
    CHECK(r.entries.empty());
}

TEST_CASE("runtime_benchmark measures both explainers") {
    const KeypointGraph g = make_synthetic_graph(5);
    GcnModel m = random_model(g, 2, 2, 2, 3, 3, 98);
    const auto split = random_split(g, 4, 6, 99);
    BackgroundSet bg;
    bg.samples = {random_streams(2, 6, 5, 100), random_streams(2, 6, 5, 101)};
    bg.subsample_size = 2;

    ExplainerBenchConfig gc;
    gc.method = "gradcam";
    ExplainerBenchConfig sh;
    sh.method = "shap";
    sh.permutations = 5;
    const RuntimeReport r = runtime_benchmark(m, split, bg, {gc, sh});
    REQUIRE(r.entries.size() == 2);
    for (const auto& e : r.entries) {
        CHECK(e.seconds > 0.0);
        CHECK(e.samples == 4);
    }
}

TEST_CASE("csv writers emit deterministic bodies") {
    PerturbationCurve c;
    c.explainer = "gradcam";
    c.points = {{0, 1.0}, {1, 0.875}};
    const std::string body = curve_csv({c});
    CHECK(body.find("explainer,metric,mode,factor,k,value\n") == 0);
    CHECK(body.find("gradcam,accuracy,important,0.0035,1,0.875") != std::string::npos);

    RuntimeReport rt;
    rt.entries.push_back({"shap", 12.5, 3, "scheme=keypoint"});
    const std::string rts = runtime_csv(rt);
    CHECK(rts.find("12.5") == std::string::npos);  // seconds stay out of the CSV body
}
