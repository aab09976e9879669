#pragma once

#include "xgcn/graph.hpp"
#include "xgcn/sequence.hpp"

namespace xgcn {

struct CpPreprocessOptions {
    double target_fps = 30.0;
    int median_kernel = 5;
    int window_frames = 150;  // 5 s at 30 Hz
    int stride_frames = 75;   // 2.5 s overlap
};

// Linear resampling onto a uniform target_fps grid.
SkeletonSequence resample_linear(const SkeletonSequence& seq, double target_fps);

// Per-coordinate temporal median filter; windows are clamped at the ends.
SkeletonSequence median_filter_temporal(const SkeletonSequence& seq, int kernel);

// Full infant-recording pipeline: resample to 30 Hz, median filter, divide
// coordinates by twice the median trunk length, subtract the median
// mid-pelvis position, then cut 150-frame windows with stride 75 and derive
// the four streams per window. A resampled sequence shorter than one window
// yields an empty WindowSet with a diagnostic; zero trunk length is rejected.
WindowSet preprocess_cp(const SkeletonSequence& seq, const KeypointGraph& graph,
                        const CpPreprocessOptions& opts = {});

}  // namespace xgcn
