#include "xgcn/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "xgcn/errors.hpp"
#include "xgcn/streams.hpp"

namespace xgcn {

namespace {

double median_of(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    if (n == 0) throw std::invalid_argument("median of empty range");
    if (n % 2 == 1) return xs[n / 2];
    return 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

}  // namespace

SkeletonSequence resample_linear(const SkeletonSequence& seq, double target_fps) {
    seq.validate();
    if (seq.fps <= 0.0) throw DataError("resample: source fps must be positive");
    if (target_fps <= 0.0) throw DataError("resample: target fps must be positive");

    // Multiply before dividing so integer-valued frame positions stay exact.
    const int out_frames =
        static_cast<int>(std::floor((seq.frames - 1) * target_fps / seq.fps)) + 1;

    SkeletonSequence out(out_frames, seq.keypoints, seq.coords);
    out.fps = target_fps;
    out.label = seq.label;
    out.subject_id = seq.subject_id;

    for (int t = 0; t < out_frames; ++t) {
        const double src = std::min(t * seq.fps / target_fps,
                                    static_cast<double>(seq.frames - 1));
        const int lo = static_cast<int>(std::floor(src));
        const int hi = std::min(lo + 1, seq.frames - 1);
        const double w = src - lo;
        for (int v = 0; v < seq.keypoints; ++v)
            for (int c = 0; c < seq.coords; ++c)
                out.at(t, v, c) = (1.0 - w) * seq.at(lo, v, c) + w * seq.at(hi, v, c);
    }
    return out;
}

SkeletonSequence median_filter_temporal(const SkeletonSequence& seq, int kernel) {
    if (kernel < 1 || kernel % 2 == 0)
        throw std::invalid_argument("median filter kernel must be odd and positive");
    const int half = kernel / 2;

    SkeletonSequence out = seq;
    std::vector<double> window;
    window.reserve(kernel);
    for (int t = 0; t < seq.frames; ++t) {
        const int lo = std::max(0, t - half);
        const int hi = std::min(seq.frames - 1, t + half);
        for (int v = 0; v < seq.keypoints; ++v)
            for (int c = 0; c < seq.coords; ++c) {
                window.clear();
                for (int u = lo; u <= hi; ++u) window.push_back(seq.at(u, v, c));
                out.at(t, v, c) = median_of(window);
            }
    }
    return out;
}

WindowSet preprocess_cp(const SkeletonSequence& seq, const KeypointGraph& graph,
                        const CpPreprocessOptions& opts) {
    graph.validate();
    if (graph.trunk_a < 0 || graph.trunk_b < 0 || graph.mid_pelvis < 0)
        throw DataError("preprocess_cp: graph lacks trunk/mid-pelvis metadata");
    if (graph.num_keypoints != seq.keypoints)
        throw DataError("preprocess_cp: graph/sequence keypoint mismatch");

    SkeletonSequence work = resample_linear(seq, opts.target_fps);
    work = median_filter_temporal(work, opts.median_kernel);

    // Scale by twice the median trunk length.
    std::vector<double> trunk_lengths(work.frames);
    for (int t = 0; t < work.frames; ++t) {
        double d2 = 0.0;
        for (int c = 0; c < work.coords; ++c) {
            const double d = work.at(t, graph.trunk_a, c) - work.at(t, graph.trunk_b, c);
            d2 += d * d;
        }
        trunk_lengths[t] = std::sqrt(d2);
    }
    const double trunk = median_of(trunk_lengths);
    if (trunk == 0.0) throw DataError("preprocess_cp: zero trunk length");
    const double scale = 1.0 / (2.0 * trunk);
    for (double& x : work.positions) x *= scale;

    // Center at the median mid-pelvis position (per coordinate).
    for (int c = 0; c < work.coords; ++c) {
        std::vector<double> xs(work.frames);
        for (int t = 0; t < work.frames; ++t) xs[t] = work.at(t, graph.mid_pelvis, c);
        const double center = median_of(xs);
        for (int t = 0; t < work.frames; ++t)
            for (int v = 0; v < work.keypoints; ++v) work.at(t, v, c) -= center;
    }

    WindowSet ws;
    ws.window_frames = opts.window_frames;
    ws.stride_frames = opts.stride_frames;
    ws.source = seq.subject_id;
    if (work.frames < opts.window_frames) {
        ws.diagnostic = "resampled sequence has " + std::to_string(work.frames) +
                        " frames, shorter than one window (" +
                        std::to_string(opts.window_frames) + ")";
        return ws;
    }

    const int count = (work.frames - opts.window_frames) / opts.stride_frames + 1;
    for (int k = 0; k < count; ++k) {
        SkeletonSequence win = slice_frames(work, k * opts.stride_frames, opts.window_frames);
        ws.windows.push_back(derive_streams(win, graph));
        ws.labels.push_back(seq.label);
    }
    return ws;
}

}  // namespace xgcn
