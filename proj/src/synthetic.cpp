#include "xgcn/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "xgcn/errors.hpp"
#include "xgcn/rng.hpp"

namespace xgcn {

namespace {

constexpr double kTau = 6.283185307179586476925286766559;

// Rest pose: spine along +y, limbs fanned out deterministically.
std::vector<std::pair<double, double>> rest_pose(const KeypointGraph& g) {
    std::vector<std::pair<double, double>> pos(g.num_keypoints, {0.0, 0.0});
    pos[0] = {0.0, 0.0};
    if (g.num_keypoints > 1) pos[1] = {0.0, 0.5};
    if (g.num_keypoints > 2) pos[2] = {0.0, 0.75};
    for (int i = 3; i < g.num_keypoints; ++i) {
        const auto& par = pos[g.parent[i]];
        const int limb = (i - 3) % 4;
        const double dx = (limb % 2 == 0) ? 0.25 : -0.25;
        const double dy = (limb < 2) ? 0.05 : -0.3;
        pos[i] = {par.first + dx, par.second + dy};
    }
    return pos;
}

}  // namespace

std::vector<int> synthetic_active_keypoints(const SyntheticConfig& config, int cls) {
    // Disjoint sets drawn from the limb keypoints; the spine (0..2) stays
    // inactive so trunk normalization has a stable anchor. Classes are spread
    // across the limb indices with a stride so their keypoints sit at
    // different tree depths, not at mirror positions.
    const int first = 3;
    const int avail = config.num_keypoints - first;
    int per = std::clamp(avail / (config.num_classes + 1), 1, 3);
    if (per * config.num_classes > avail) per = std::max(1, avail / config.num_classes);
    const int stride = std::max(1, avail / config.num_classes);
    std::vector<int> out;
    for (int i = 0; i < per; ++i) {
        const int k = first + (cls * stride + i) % avail;
        out.push_back(k);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

SyntheticDataset generate_synthetic_dataset(const SyntheticConfig& config, std::uint64_t seed) {
    if (config.num_classes < 2) throw DataError("synthetic: need at least 2 classes");
    if (config.per_class < 1) throw DataError("synthetic: per_class must be positive");
    if (config.num_keypoints < 4) throw DataError("synthetic: need at least 4 keypoints");
    if (config.frames < 2) throw DataError("synthetic: need at least 2 frames");
    if (config.fps <= 0) throw DataError("synthetic: fps must be positive");
    if (config.noise_scale < 0) throw DataError("synthetic: negative noise scale");

    SyntheticDataset ds;
    ds.graph = make_synthetic_graph(config.num_keypoints);
    const auto base = rest_pose(ds.graph);

    for (int cls = 0; cls < config.num_classes; ++cls)
        ds.active_keypoints[cls] = synthetic_active_keypoints(config, cls);

    const double amplitude = 0.5;
    for (int cls = 0; cls < config.num_classes; ++cls) {
        const double freq = 1.2 + 1.0 * cls;  // Hz, distinct per class
        const auto& active = ds.active_keypoints.at(cls);
        for (int idx = 0; idx < config.per_class; ++idx) {
            // Per-sequence stream so generation order never matters.
            Rng rng(mix_seed(seed, static_cast<std::uint64_t>(cls) + 1,
                             static_cast<std::uint64_t>(idx) + 1));
            SkeletonSequence seq(config.frames, config.num_keypoints, 2);
            seq.fps = config.fps;
            seq.label = cls;
            seq.subject_id = "synthetic-c" + std::to_string(cls) + "-" + std::to_string(idx);

            for (int t = 0; t < config.frames; ++t) {
                const double time = t / config.fps;
                for (int v = 0; v < config.num_keypoints; ++v) {
                    double x = base[v].first;
                    double y = base[v].second;
                    const auto it = std::find(active.begin(), active.end(), v);
                    if (it != active.end()) {
                        // Trajectory is a pure function of (class, rank); only
                        // the noise varies between sequences of one class.
                        const int rank = static_cast<int>(it - active.begin());
                        const double phase = kTau * (cls + 3 * rank) / 7.0;
                        x += amplitude * std::sin(kTau * freq * time + phase);
                        y += amplitude * std::cos(kTau * freq * time + phase);
                    }
                    seq.at(t, v, 0) = x + config.noise_scale * rng.normal();
                    seq.at(t, v, 1) = y + config.noise_scale * rng.normal();
                }
            }
            ds.sequences.push_back(std::move(seq));
            // 80/20 train/val split, round robin within each class.
            ds.splits.push_back(idx % 5 == 4 ? "val" : "train");
        }
    }
    return ds;
}

}  // namespace xgcn
