#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "xgcn/explanation.hpp"
#include "xgcn/model.hpp"
#include "xgcn/shapley.hpp"
#include "xgcn/stats.hpp"
#include "xgcn/train.hpp"

namespace xgcn {

enum class PerturbMode { kImportant, kUnimportant, kRandom };
enum class Metric { kAccuracy, kAuc };

PerturbMode perturb_mode_from_string(const std::string& s);
std::string to_string(PerturbMode m);
Metric metric_from_string(const std::string& s);
std::string to_string(Metric m);

// The five graph-convolution layers addressable by the perturbation
// operator: "j", "v", "b", "a", "main".
std::vector<std::string> all_gconv_layers();

// Copy of the model with the edge-importance entries of the given keypoints
// multiplied by `factor` in every partition of every target layer.
GcnModel perturb_model(const GcnModel& model, const std::vector<int>& keypoints, double factor,
                       const std::vector<std::string>& target_layers);

struct PerturbationPlan {
    KeypointRanking ranking;
    PerturbMode mode = PerturbMode::kImportant;
    int k_max = 0;
    double factor = 0.0035;
    std::vector<std::string> target_layers = all_gconv_layers();
    int trials = 10;  // random mode draws
    std::uint64_t seed = 1234;
    Metric metric = Metric::kAccuracy;
};

struct PerturbationCurve {
    std::vector<std::pair<int, double>> points;  // (k, metric value), k ascending from 0
    Metric metric = Metric::kAccuracy;
    PerturbMode mode = PerturbMode::kImportant;
    std::string explainer;
    double factor = 0.0035;
};

double evaluate_metric(const GcnModel& model, const std::vector<LabeledExample>& split,
                       Metric metric);

// For k = 0..k_max, perturb the top-k (important), bottom-k (unimportant) or
// k random keypoints (averaged over trials) and evaluate the metric on the
// split. Deterministic given the plan seed.
PerturbationCurve perturbation_sweep(const GcnModel& model,
                                     const std::vector<LabeledExample>& split,
                                     const PerturbationPlan& plan);

struct RankingRow {
    int keypoint = 0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    std::vector<double> outliers;
};

struct RankingTable {
    std::vector<RankingRow> rows;  // sorted by descending median
};

// Distribution of |score| per keypoint over (maps x windows), summarized by
// median / quartiles / 1.5-IQR outliers.
RankingTable rank_keypoints(const std::vector<ExplanationMap>& maps);

struct CorrelationRow {
    std::string layer;
    double rho = 0.0;
    bool defined = true;
};

struct CorrelationReport {
    std::string reference;
    bool normalized = true;
    std::vector<CorrelationRow> rows;
};

// Spearman correlation of per-keypoint Grad-CAM scores (normalized maps,
// predicted class, whole-sequence windows, flattened across samples) against
// the reference layer. Layer names may also be "sum/<stage>", the sum of the
// four branch scores at that stage.
CorrelationReport correlation_report(const GcnModel& model,
                                     const std::vector<LabeledExample>& split,
                                     const std::vector<std::string>& layers,
                                     const std::string& reference);

// Prediction gap on the explanation's most important (pgi) and least
// important (pgu) k keypoints, at the sample's predicted class.
std::pair<double, double> pgi_pgu(const GcnModel& model, const FeatureStreams& x,
                                  const ExplanationMap& explanation, int k, double factor,
                                  const std::vector<std::string>& target_layers =
                                      all_gconv_layers());

struct ExplainerBenchConfig {
    std::string method;  // "gradcam" or "shap"
    std::string layer = "main/tcn";
    bool counterfactual = false;
    PlayerGranularity scheme = PlayerGranularity::kKeypoint;
    std::string estimator = "permutation";
    int permutations = 200;
    std::uint64_t seed = 1234;
};

struct RuntimeEntry {
    std::string explainer;
    double seconds = 0.0;
    int samples = 0;
    std::string config;
};

struct RuntimeReport {
    std::vector<RuntimeEntry> entries;
};

// Wall-clock per explainer over the identical sample set, single-threaded,
// one warm-up sample excluded from the measurement.
RuntimeReport runtime_benchmark(const GcnModel& model,
                                const std::vector<LabeledExample>& samples,
                                const BackgroundSet& background,
                                const std::vector<ExplainerBenchConfig>& configs);

// Deterministic CSV bodies (measured seconds stay out of them; they travel in
// the JSON experiment record).
std::string curve_csv(const std::vector<PerturbationCurve>& curves);
std::string ranking_csv(const RankingTable& table);
std::string correlation_csv(const CorrelationReport& report);
std::string runtime_csv(const RuntimeReport& report);

}  // namespace xgcn
