#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "xgcn/explanation.hpp"
#include "xgcn/model.hpp"
#include "xgcn/sequence.hpp"

namespace xgcn {

enum class PlayerGranularity { kKeypoint, kStream, kKeypointStream };

PlayerGranularity granularity_from_string(const std::string& s);
std::string to_string(PlayerGranularity g);

// One player owns a set of input blocks; a block is a whole stream
// (keypoint == -1) or one keypoint's slice of one stream. The players of a
// scheme partition the full [4 streams x C x T x V] input index set.
struct PlayerBlock {
    int stream = 0;
    int keypoint = -1;
};

struct PlayerScheme {
    PlayerGranularity granularity = PlayerGranularity::kKeypoint;
    std::vector<std::vector<PlayerBlock>> players;
    int num_keypoints = 0;

    int count() const { return static_cast<int>(players.size()); }
};

// keypoint: one player per keypoint (all four streams). stream: four players.
// keypoint_stream: one player per (keypoint, stream), indexed keypoint-major.
PlayerScheme make_player_scheme(PlayerGranularity granularity, int num_keypoints);

// Reference samples standing in for "absent" players.
struct BackgroundSet {
    std::vector<FeatureStreams> samples;
    int subsample_size = 0;
    std::uint64_t seed = 0;
};

// Draws n samples from the pool (without replacement while possible).
BackgroundSet make_background(const std::vector<FeatureStreams>& pool, int n,
                              int subsample_size, std::uint64_t seed);

// Consecutive chunks of subsample_size (last chunk may be smaller).
std::vector<BackgroundSet> split_background(const BackgroundSet& bg);

struct ShapResult {
    std::vector<double> phi;
    double phi0 = 0.0;
    double fx = 0.0;
    std::string estimator;  // "exact" or "permutation"
    int permutations = 0;
    std::uint64_t seed = 0;
    int class_index = 0;
    PlayerGranularity granularity = PlayerGranularity::kKeypoint;
    int num_keypoints = 0;
    int background_n = 0;
};

// Exact enumeration is capped here; larger player counts must sample.
inline constexpr int kExactPlayerLimit = 14;

using ValueFn = std::function<double(const FeatureStreams&)>;

// Mean over background samples of value(composite) where players in the
// coalition take x's values and the rest take the background sample's.
double masked_value(const ValueFn& value, const FeatureStreams& x, const PlayerScheme& scheme,
                    const std::vector<bool>& coalition, const std::vector<FeatureStreams>& bg);

double masked_predict(const GcnModel& model, const FeatureStreams& x,
                      const PlayerScheme& scheme, const std::vector<bool>& coalition,
                      const BackgroundSet& bg, int class_index);

// Full enumeration of all coalitions with the standard combinatorial weights.
ShapResult exact_shapley_fn(const ValueFn& value, const FeatureStreams& x,
                            const PlayerScheme& scheme, const std::vector<FeatureStreams>& bg);
ShapResult exact_shapley(const GcnModel& model, const FeatureStreams& x,
                         const PlayerScheme& scheme, const BackgroundSet& bg, int class_index);

// Unbiased permutation estimator; each odd draw is the reverse of the
// previous one (antithetic pairing). Deterministic given the seed.
ShapResult sampled_shapley_fn(const ValueFn& value, const FeatureStreams& x,
                              const PlayerScheme& scheme, const std::vector<FeatureStreams>& bg,
                              int permutations, std::uint64_t seed);
ShapResult sampled_shapley(const GcnModel& model, const FeatureStreams& x,
                           const PlayerScheme& scheme, const BackgroundSet& bg, int class_index,
                           int permutations, std::uint64_t seed);

// Mean of per-subsample results; equals a single pass over the union
// background when the subsamples partition it evenly.
ShapResult aggregate_subsampled(const std::vector<ShapResult>& results);

// phi per keypoint: the keypoint's player, or the sum of its four stream
// players under keypoint_stream granularity.
ExplanationMap shap_to_keypoint_scores(const ShapResult& result, const PlayerScheme& scheme);

}  // namespace xgcn
