#pragma once

#include <string>
#include <vector>

#include "xgcn/explanation.hpp"
#include "xgcn/model.hpp"

namespace xgcn {

// Localization map over (frame, keypoint), non-negative by construction.
struct CamMap {
    int frames = 0;
    int keypoints = 0;
    std::vector<double> values;  // [frame][keypoint]
    std::string layer;
    int class_index = 0;
    bool counterfactual = false;
    bool normalized = false;
    bool degenerate = false;  // identically-zero map after normalization request

    double at(int t, int v) const {
        return values[static_cast<std::size_t>(t) * keypoints + v];
    }
    double& at(int t, int v) {
        return values[static_cast<std::size_t>(t) * keypoints + v];
    }
};

// Per-channel neuron importance: sign * mean over (frame, keypoint) of the
// captured gradient. sign = -1 gives the counterfactual weights.
struct NeuronWeights {
    std::vector<double> alpha;
    int class_index = 0;
    int sign = +1;
};

NeuronWeights neuron_weights(const CaptureRecord& record, int sign);

// ReLU(sum_k alpha_k * A_k) over the captured activations.
CamMap cam(const CaptureRecord& record, int sign);

// Divides by the max value; an identically-zero map stays zero and is
// flagged degenerate.
CamMap normalize_cam(const CamMap& map);

struct CamWindowing {
    int window_frames = 0;  // 0 = one window spanning all frames
    int stride_frames = 0;
};

// Mean map value per keypoint over each window's frames.
ExplanationMap cam_to_keypoint_scores(const CamMap& map, const CamWindowing& windowing);

// The probe points the explanation pipeline exposes: every branch stage plus
// the main-branch TCN and attention outputs.
std::vector<std::string> probe_layers();

// Convenience: forward + backward + cam for one sample.
CamMap compute_cam(const GcnModel& model, const FeatureStreams& streams, int class_index,
                   const std::string& layer, bool counterfactual);

}  // namespace xgcn
