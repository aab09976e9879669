#include "xgcn/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "xgcn/errors.hpp"
#include "xgcn/gradcam.hpp"
#include "xgcn/rng.hpp"

namespace xgcn {

PerturbMode perturb_mode_from_string(const std::string& s) {
    if (s == "important") return PerturbMode::kImportant;
    if (s == "unimportant") return PerturbMode::kUnimportant;
    if (s == "random") return PerturbMode::kRandom;
    throw UsageError("unknown perturbation mode: " + s);
}

std::string to_string(PerturbMode m) {
    switch (m) {
        case PerturbMode::kImportant: return "important";
        case PerturbMode::kUnimportant: return "unimportant";
        default: return "random";
    }
}

Metric metric_from_string(const std::string& s) {
    if (s == "accuracy") return Metric::kAccuracy;
    if (s == "auc") return Metric::kAuc;
    throw UsageError("unknown metric: " + s);
}

std::string to_string(Metric m) { return m == Metric::kAccuracy ? "accuracy" : "auc"; }

std::vector<std::string> all_gconv_layers() { return {"j", "v", "b", "a", "main"}; }

GcnModel perturb_model(const GcnModel& model, const std::vector<int>& keypoints, double factor,
                       const std::vector<std::string>& target_layers) {
    if (target_layers.empty())
        throw UsageError("perturb_model: empty target layer set");
    const int V = model.graph.num_keypoints;
    for (int k : keypoints)
        if (k < 0 || k >= V) throw std::invalid_argument("perturb_model: keypoint out of range");

    GcnModel out = model;
    auto scale = [&](BranchBlock& blk) {
        for (auto& e : blk.gconv.edge_importance)
            for (int k : keypoints) e[k] *= factor;
    };
    for (const std::string& layer : target_layers) {
        if (layer == "main") {
            scale(out.main);
        } else {
            static const std::map<std::string, int> branch_idx = {
                {"j", 0}, {"v", 1}, {"b", 2}, {"a", 3}};
            const auto it = branch_idx.find(layer);
            if (it == branch_idx.end())
                throw UsageError("perturb_model: unknown target layer '" + layer + "'");
            scale(out.branches[it->second]);
        }
    }
    return out;
}

double evaluate_metric(const GcnModel& model, const std::vector<LabeledExample>& split,
                       Metric metric) {
    if (split.empty()) throw DataError("metric evaluation: empty split");
    if (metric == Metric::kAccuracy) return accuracy(model, split);

    if (model.config.num_classes != 2)
        throw DataError("auc metric requires a binary classifier");
    std::vector<double> scores;
    std::vector<int> labels;
    ForwardTrace trace;
    for (const auto& ex : split) {
        if (ex.label != 0 && ex.label != 1)
            throw DataError("auc metric requires binary labels");
        const std::vector<double> logits = forward_logits(model, ex.streams, trace);
        scores.push_back(logits[1] - logits[0]);
        labels.push_back(ex.label);
    }
    return roc_auc(scores, labels);
}

PerturbationCurve perturbation_sweep(const GcnModel& model,
                                     const std::vector<LabeledExample>& split,
                                     const PerturbationPlan& plan) {
    const int V = model.graph.num_keypoints;
    if (static_cast<int>(plan.ranking.order.size()) != V)
        throw DataError("perturbation plan ranking must cover all keypoints");
    if (plan.k_max < 0 || plan.k_max > V)
        throw std::invalid_argument("perturbation k_max out of range");
    if (plan.factor < 0.0 || plan.factor > 1.0)
        throw std::invalid_argument("perturbation factor out of [0,1]");
    if (plan.mode == PerturbMode::kRandom && plan.trials < 1)
        throw std::invalid_argument("random mode needs at least one trial");

    PerturbationCurve curve;
    curve.metric = plan.metric;
    curve.mode = plan.mode;
    curve.factor = plan.factor;

    const double baseline = evaluate_metric(model, split, plan.metric);
    curve.points.emplace_back(0, baseline);

    for (int k = 1; k <= plan.k_max; ++k) {
        double value = 0.0;
        switch (plan.mode) {
            case PerturbMode::kImportant: {
                const std::vector<int> top(plan.ranking.order.begin(),
                                           plan.ranking.order.begin() + k);
                value = evaluate_metric(
                    perturb_model(model, top, plan.factor, plan.target_layers), split,
                    plan.metric);
                break;
            }
            case PerturbMode::kUnimportant: {
                const std::vector<int> bottom(plan.ranking.order.end() - k,
                                              plan.ranking.order.end());
                value = evaluate_metric(
                    perturb_model(model, bottom, plan.factor, plan.target_layers), split,
                    plan.metric);
                break;
            }
            case PerturbMode::kRandom: {
                double acc = 0.0;
                for (int trial = 0; trial < plan.trials; ++trial) {
                    Rng rng(mix_seed(plan.seed, static_cast<std::uint64_t>(k),
                                     static_cast<std::uint64_t>(trial)));
                    std::vector<int> pool(V);
                    std::iota(pool.begin(), pool.end(), 0);
                    rng.shuffle(pool);
                    pool.resize(k);
                    acc += evaluate_metric(
                        perturb_model(model, pool, plan.factor, plan.target_layers), split,
                        plan.metric);
                }
                value = acc / static_cast<double>(plan.trials);
                break;
            }
        }
        curve.points.emplace_back(k, value);
    }
    return curve;
}

RankingTable rank_keypoints(const std::vector<ExplanationMap>& maps) {
    if (maps.empty()) throw DataError("rank_keypoints: no explanation maps");
    const int V = maps.front().num_keypoints;
    std::vector<std::vector<double>> samples(V);
    for (const auto& m : maps) {
        if (m.num_keypoints != V)
            throw DataError("rank_keypoints: keypoint count mismatch");
        for (int w = 0; w < m.num_windows; ++w)
            for (int v = 0; v < V; ++v) samples[v].push_back(std::abs(m.score(w, v)));
    }

    RankingTable table;
    for (int v = 0; v < V; ++v) {
        const BoxStats b = box_stats(samples[v]);
        table.rows.push_back({v, b.median, b.q1, b.q3, b.outliers});
    }
    std::stable_sort(table.rows.begin(), table.rows.end(),
                     [](const RankingRow& a, const RankingRow& b) {
                         if (a.median != b.median) return a.median > b.median;
                         return a.keypoint < b.keypoint;
                     });
    return table;
}

namespace {

// Normalized whole-sequence per-keypoint scores for one base layer.
std::vector<double> layer_scores(const GcnModel& model, const FeatureStreams& streams,
                                 int cls, const std::string& layer) {
    const CamMap raw = compute_cam(model, streams, cls, layer, false);
    const CamMap norm = normalize_cam(raw);
    const ExplanationMap e = cam_to_keypoint_scores(norm, {});
    std::vector<double> out(e.num_keypoints);
    for (int v = 0; v < e.num_keypoints; ++v) out[v] = e.score(0, v);
    return out;
}

bool is_sum_layer(const std::string& layer, std::string& stage) {
    if (layer.rfind("sum/", 0) != 0) return false;
    stage = layer.substr(4);
    return true;
}

}  // namespace

CorrelationReport correlation_report(const GcnModel& model,
                                     const std::vector<LabeledExample>& split,
                                     const std::vector<std::string>& layers,
                                     const std::string& reference) {
    if (split.empty()) throw DataError("correlation_report: empty split");

    // Base layers to evaluate per sample: requested plain layers, the four
    // branch layers behind each sum row, and the reference.
    std::set<std::string> base;
    auto add_layer = [&](const std::string& l) {
        std::string stage;
        if (is_sum_layer(l, stage)) {
            parse_layer_id("j/" + stage);  // stage validation
            for (const char* p : {"j", "v", "b", "a"}) base.insert(std::string(p) + "/" + stage);
        } else {
            parse_layer_id(l);
            base.insert(l);
        }
    };
    add_layer(reference);
    for (const auto& l : layers) add_layer(l);

    std::map<std::string, std::vector<double>> flattened;
    for (const auto& ex : split) {
        const int cls = predict_class(model, ex.streams);
        for (const auto& l : base) {
            const std::vector<double> s = layer_scores(model, ex.streams, cls, l);
            auto& dst = flattened[l];
            dst.insert(dst.end(), s.begin(), s.end());
        }
    }

    auto layer_vector = [&](const std::string& l) {
        std::string stage;
        if (!is_sum_layer(l, stage)) return flattened.at(l);
        std::vector<double> sum = flattened.at("j/" + stage);
        for (const char* p : {"v", "b", "a"}) {
            const auto& other = flattened.at(std::string(p) + "/" + stage);
            for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += other[i];
        }
        return sum;
    };

    CorrelationReport report;
    report.reference = reference;
    const std::vector<double> ref = layer_vector(reference);
    for (const auto& l : layers) {
        const SpearmanResult r = spearman(layer_vector(l), ref);
        report.rows.push_back({l, r.rho, r.defined});
    }
    return report;
}

std::pair<double, double> pgi_pgu(const GcnModel& model, const FeatureStreams& x,
                                  const ExplanationMap& explanation, int k, double factor,
                                  const std::vector<std::string>& target_layers) {
    const int V = model.graph.num_keypoints;
    if (k < 1) throw std::invalid_argument("pgi_pgu: k must be >= 1");
    if (k > V) throw std::invalid_argument("pgi_pgu: k exceeds keypoint count");
    if (explanation.num_keypoints != V)
        throw DataError("pgi_pgu: explanation keypoint count mismatch");

    const KeypointRanking ranking = rank_by_mean_abs({explanation});
    const int cls = predict_class(model, x);
    const double base = forward_logits(model, x)[cls];

    const std::vector<int> top(ranking.order.begin(), ranking.order.begin() + k);
    const std::vector<int> bottom(ranking.order.end() - k, ranking.order.end());

    const double with_top =
        forward_logits(perturb_model(model, top, factor, target_layers), x)[cls];
    const double with_bottom =
        forward_logits(perturb_model(model, bottom, factor, target_layers), x)[cls];
    return {std::abs(base - with_top), std::abs(base - with_bottom)};
}

RuntimeReport runtime_benchmark(const GcnModel& model,
                                const std::vector<LabeledExample>& samples,
                                const BackgroundSet& background,
                                const std::vector<ExplainerBenchConfig>& configs) {
    using clock = std::chrono::steady_clock;
    RuntimeReport report;
    if (configs.empty()) return report;
    if (samples.empty()) throw DataError("runtime_benchmark: empty sample set");

    for (const ExplainerBenchConfig& cfg : configs) {
        auto explain_one = [&](const LabeledExample& ex) {
            const int cls = predict_class(model, ex.streams);
            if (cfg.method == "gradcam") {
                const CamMap map =
                    compute_cam(model, ex.streams, cls, cfg.layer, cfg.counterfactual);
                (void)cam_to_keypoint_scores(map, {});
            } else if (cfg.method == "shap") {
                const PlayerScheme scheme =
                    make_player_scheme(cfg.scheme, model.graph.num_keypoints);
                ShapResult res;
                if (cfg.estimator == "exact")
                    res = exact_shapley(model, ex.streams, scheme, background, cls);
                else
                    res = sampled_shapley(model, ex.streams, scheme, background, cls,
                                          cfg.permutations, cfg.seed);
                if (cfg.scheme != PlayerGranularity::kStream)
                    (void)shap_to_keypoint_scores(res, scheme);
            } else {
                throw UsageError("runtime_benchmark: unknown method '" + cfg.method + "'");
            }
        };

        explain_one(samples.front());  // warm-up, excluded

        const auto start = clock::now();
        for (const auto& ex : samples) explain_one(ex);
        const auto stop = clock::now();

        RuntimeEntry entry;
        entry.explainer = cfg.method;
        entry.samples = static_cast<int>(samples.size());
        entry.seconds = std::chrono::duration<double>(stop - start).count();
        if (cfg.method == "gradcam") {
            entry.config = "layer=" + cfg.layer +
                           (cfg.counterfactual ? ",counterfactual=1" : "");
        } else {
            entry.config = "scheme=" + to_string(cfg.scheme) + ",estimator=" + cfg.estimator +
                           ",M=" + std::to_string(cfg.permutations) +
                           ",background=" + std::to_string(background.samples.size());
        }
        report.entries.push_back(std::move(entry));
    }
    return report;
}

std::string curve_csv(const std::vector<PerturbationCurve>& curves) {
    std::string out = "explainer,metric,mode,factor,k,value\n";
    for (const auto& c : curves)
        for (const auto& [k, value] : c.points)
            out += c.explainer + "," + to_string(c.metric) + "," + to_string(c.mode) + "," +
                   format_double(c.factor) + "," + std::to_string(k) + "," +
                   format_double(value) + "\n";
    return out;
}

std::string ranking_csv(const RankingTable& table) {
    std::string out = "rank,keypoint,median,q1,q3,outlier_count\n";
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const RankingRow& r = table.rows[i];
        out += std::to_string(i) + "," + std::to_string(r.keypoint) + "," +
               format_double(r.median) + "," + format_double(r.q1) + "," +
               format_double(r.q3) + "," + std::to_string(r.outliers.size()) + "\n";
    }
    return out;
}

std::string correlation_csv(const CorrelationReport& report) {
    std::string out = "layer,reference,rho,defined\n";
    for (const auto& row : report.rows)
        out += row.layer + "," + report.reference + "," +
               (row.defined ? format_double(row.rho) : "nan") + "," +
               (row.defined ? "1" : "0") + "\n";
    return out;
}

std::string runtime_csv(const RuntimeReport& report) {
    std::string out = "explainer,samples,config\n";
    for (const auto& e : report.entries)
        out += e.explainer + "," + std::to_string(e.samples) + ",\"" + e.config + "\"\n";
    return out;
}

}  // namespace xgcn
