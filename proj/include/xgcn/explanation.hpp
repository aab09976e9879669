#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xgcn/tensor.hpp"

namespace xgcn {

// Per-(keypoint, window) importance scores with method and layer provenance.
// Grad-CAM maps may also carry the full per-frame values; Shapley maps carry
// estimator metadata and the phi0 / f(x) pair.
struct ExplanationMap {
    std::string method;  // "gradcam" or "shap"
    std::string layer;   // capture layer, or "input" for shap
    std::string sample_id;
    int class_index = 0;
    bool counterfactual = false;
    bool normalized = false;

    int num_windows = 0;
    int num_keypoints = 0;
    std::vector<double> scores;  // [window][keypoint]

    // optional per-frame detail (gradcam)
    int num_frames = 0;
    std::vector<double> frames;  // [frame][keypoint]

    // optional estimator metadata (shap)
    std::string estimator;
    int permutations = 0;
    int background_n = 0;
    std::uint64_t seed = 0;
    double phi0 = 0.0;
    double fx = 0.0;

    double score(int window, int keypoint) const {
        return scores[static_cast<std::size_t>(window) * num_keypoints + keypoint];
    }
    double& score(int window, int keypoint) {
        return scores[static_cast<std::size_t>(window) * num_keypoints + keypoint];
    }
};

// Keypoints ordered by importance, most important first.
struct KeypointRanking {
    std::vector<int> order;
    std::vector<double> score_by_keypoint;
};

// Mean |score| per keypoint over all maps and windows, descending (ties by
// keypoint index).
KeypointRanking rank_by_mean_abs(const std::vector<ExplanationMap>& maps);

// CSV rows: sample_id, method, layer, class, counterfactual, window,
// keypoint, score. Shap rows append estimator, M, background_n, seed.
std::string explanation_csv(const std::vector<ExplanationMap>& maps);

// JSON variant carrying the full per-frame maps where present.
std::string explanation_json(const std::vector<ExplanationMap>& maps);
std::vector<ExplanationMap> explanation_maps_from_json(const std::string& text);

// Fixed shortest-roundtrip float formatting used by every CSV writer.
std::string format_double(double x);

}  // namespace xgcn
