#pragma once

#include <string>
#include <vector>

#include "xgcn/tensor.hpp"

namespace xgcn {

// Raw keypoint trajectories: positions[t][v][c], coordinates in normalized
// body-length units.
struct SkeletonSequence {
    int frames = 0;
    int keypoints = 0;
    int coords = 0;
    std::vector<double> positions;  // t-major, v-middle, c-minor
    double fps = 30.0;
    int label = 0;
    std::string subject_id;

    SkeletonSequence() = default;
    SkeletonSequence(int t, int v, int c)
        : frames(t), keypoints(v), coords(c),
          positions(static_cast<std::size_t>(t) * v * c, 0.0) {}

    double& at(int t, int v, int c) {
        return positions[(static_cast<std::size_t>(t) * keypoints + v) * coords + c];
    }
    double at(int t, int v, int c) const {
        return positions[(static_cast<std::size_t>(t) * keypoints + v) * coords + c];
    }

    // T >= 2, C in {2,3}, finite values.
    void validate() const;
};

// The four derived input tensors, each [C x T x V].
struct FeatureStreams {
    Tensor3 j;  // position
    Tensor3 v;  // velocity (first forward difference, zero tail)
    Tensor3 b;  // bone (offset toward tree parent, zero at root)
    Tensor3 a;  // acceleration (difference of v, zero tail)

    const Tensor3& stream(int idx) const;
    Tensor3& stream(int idx);
    static const char* stream_name(int idx);  // "j","v","b","a"
};

// Fixed-length windows cut from one source sequence.
struct WindowSet {
    std::vector<FeatureStreams> windows;
    std::vector<int> labels;
    int window_frames = 0;
    int stride_frames = 0;
    std::string source;
    std::string diagnostic;  // set when the input was too short to window
};

}  // namespace xgcn
