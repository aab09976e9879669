#include "xgcn/gradcam.hpp"

#include <algorithm>
#include <cmath>

#include "xgcn/errors.hpp"

namespace xgcn {

NeuronWeights neuron_weights(const CaptureRecord& record, int sign) {
    if (sign != 1 && sign != -1) throw std::invalid_argument("sign must be +1 or -1");
    const Tensor3& g = record.gradients;
    if (g.size() == 0) throw DataError("neuron_weights: record has no gradients");

    NeuronWeights w;
    w.class_index = record.class_index;
    w.sign = sign;
    const double z = static_cast<double>(g.t) * g.v;
    w.alpha.resize(g.c);
    for (int k = 0; k < g.c; ++k) {
        double acc = 0.0;
        for (int t = 0; t < g.t; ++t)
            for (int v = 0; v < g.v; ++v) acc += g.at(k, t, v);
        w.alpha[k] = sign * acc / z;
    }
    return w;
}

CamMap cam(const CaptureRecord& record, int sign) {
    const NeuronWeights w = neuron_weights(record, sign);
    const Tensor3& act = record.activations;
    if (act.size() == 0) throw DataError("cam: record has no activations");
    if (act.c != static_cast<int>(w.alpha.size()) || !act.same_shape(record.gradients))
        throw DataError("cam: activation/gradient shape mismatch");

    CamMap m;
    m.frames = act.t;
    m.keypoints = act.v;
    m.layer = record.layer_name;
    m.class_index = record.class_index;
    m.counterfactual = sign < 0;
    m.values.assign(static_cast<std::size_t>(act.t) * act.v, 0.0);
    for (int t = 0; t < act.t; ++t)
        for (int v = 0; v < act.v; ++v) {
            double acc = 0.0;
            for (int k = 0; k < act.c; ++k) acc += w.alpha[k] * act.at(k, t, v);
            m.at(t, v) = std::max(0.0, acc);
        }
    return m;
}

CamMap normalize_cam(const CamMap& map) {
    if (map.normalized) throw std::invalid_argument("cam map already normalized");
    CamMap out = map;
    out.normalized = true;
    const double mx = map.values.empty()
                          ? 0.0
                          : *std::max_element(map.values.begin(), map.values.end());
    if (mx == 0.0) {
        out.degenerate = true;
        return out;
    }
    for (double& x : out.values) x /= mx;
    return out;
}

ExplanationMap cam_to_keypoint_scores(const CamMap& map, const CamWindowing& windowing) {
    int win = windowing.window_frames;
    int stride = windowing.stride_frames;
    if (win == 0) {
        win = map.frames;
        stride = map.frames;
    }
    if (win < 1 || stride < 1) throw std::invalid_argument("bad cam windowing");
    if (win > map.frames)
        throw DataError("cam window of " + std::to_string(win) +
                        " frames exceeds map length " + std::to_string(map.frames));

    const int count = (map.frames - win) / stride + 1;
    ExplanationMap e;
    e.method = "gradcam";
    e.layer = map.layer;
    e.class_index = map.class_index;
    e.counterfactual = map.counterfactual;
    e.normalized = map.normalized;
    e.num_windows = count;
    e.num_keypoints = map.keypoints;
    e.scores.assign(static_cast<std::size_t>(count) * map.keypoints, 0.0);
    for (int w = 0; w < count; ++w)
        for (int v = 0; v < map.keypoints; ++v) {
            double acc = 0.0;
            for (int t = w * stride; t < w * stride + win; ++t) acc += map.at(t, v);
            e.score(w, v) = acc / win;
        }
    e.num_frames = map.frames;
    e.frames = map.values;
    return e;
}

std::vector<std::string> probe_layers() {
    std::vector<std::string> out;
    for (const char* p : {"j", "v", "b", "a"})
        for (const char* s : {"input", "tcn", "attention"})
            out.push_back(std::string(p) + "/" + s);
    out.push_back("main/tcn");
    out.push_back("main/attention");
    return out;
}

CamMap compute_cam(const GcnModel& model, const FeatureStreams& streams, int class_index,
                   const std::string& layer, bool counterfactual) {
    const CaptureRecord rec = backward_to_layer(model, streams, class_index, layer);
    return cam(rec, counterfactual ? -1 : +1);
}

}  // namespace xgcn
