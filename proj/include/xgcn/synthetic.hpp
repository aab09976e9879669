#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "xgcn/graph.hpp"
#include "xgcn/sequence.hpp"

namespace xgcn {

struct SyntheticConfig {
    int num_classes = 3;
    int per_class = 30;
    int num_keypoints = 11;
    int frames = 120;
    double fps = 30.0;
    double noise_scale = 0.02;
};

struct SyntheticDataset {
    KeypointGraph graph;
    std::vector<SkeletonSequence> sequences;
    std::vector<std::string> splits;                 // "train" / "val" per sequence
    std::map<int, std::vector<int>> active_keypoints;  // class -> designated keypoints
};

// Class identity is carried by a small disjoint set of "active" keypoints per
// class, oscillating with a class-specific frequency and phase on top of the
// rest pose; white noise of noise_scale is added everywhere. Generation is a
// pure function of (config, seed).
SyntheticDataset generate_synthetic_dataset(const SyntheticConfig& config, std::uint64_t seed);

// The designated active keypoints for one class under the given config.
std::vector<int> synthetic_active_keypoints(const SyntheticConfig& config, int cls);

}  // namespace xgcn
