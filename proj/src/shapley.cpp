#include "xgcn/shapley.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <memory>
#include <numeric>

#include "xgcn/errors.hpp"
#include "xgcn/rng.hpp"

namespace xgcn {

PlayerGranularity granularity_from_string(const std::string& s) {
    if (s == "keypoint") return PlayerGranularity::kKeypoint;
    if (s == "stream") return PlayerGranularity::kStream;
    if (s == "keypoint_stream") return PlayerGranularity::kKeypointStream;
    throw UsageError("unknown player granularity: " + s);
}

std::string to_string(PlayerGranularity g) {
    switch (g) {
        case PlayerGranularity::kKeypoint: return "keypoint";
        case PlayerGranularity::kStream: return "stream";
        default: return "keypoint_stream";
    }
}

PlayerScheme make_player_scheme(PlayerGranularity granularity, int num_keypoints) {
    if (num_keypoints < 1) throw std::invalid_argument("scheme needs at least one keypoint");
    PlayerScheme s;
    s.granularity = granularity;
    s.num_keypoints = num_keypoints;
    switch (granularity) {
        case PlayerGranularity::kKeypoint:
            for (int v = 0; v < num_keypoints; ++v)
                s.players.push_back({{0, v}, {1, v}, {2, v}, {3, v}});
            break;
        case PlayerGranularity::kStream:
            for (int st = 0; st < 4; ++st) s.players.push_back({{st, -1}});
            break;
        case PlayerGranularity::kKeypointStream:
            for (int v = 0; v < num_keypoints; ++v)
                for (int st = 0; st < 4; ++st) s.players.push_back({{st, v}});
            break;
    }
    return s;
}

BackgroundSet make_background(const std::vector<FeatureStreams>& pool, int n,
                              int subsample_size, std::uint64_t seed) {
    if (pool.empty()) throw DataError("background: empty sample pool");
    if (n < 1) throw DataError("background: need at least one sample");
    if (subsample_size < 1 || subsample_size > n)
        throw DataError("background: subsample size must be in [1, n]");

    Rng rng(mix_seed(seed, 0xB6u));
    BackgroundSet bg;
    bg.seed = seed;
    bg.subsample_size = subsample_size;
    if (n <= static_cast<int>(pool.size())) {
        std::vector<std::size_t> idx(pool.size());
        std::iota(idx.begin(), idx.end(), 0);
        rng.shuffle(idx);
        for (int i = 0; i < n; ++i) bg.samples.push_back(pool[idx[i]]);
    } else {
        for (int i = 0; i < n; ++i) bg.samples.push_back(pool[rng.index(pool.size())]);
    }
    return bg;
}

std::vector<BackgroundSet> split_background(const BackgroundSet& bg) {
    std::vector<BackgroundSet> out;
    const int n = static_cast<int>(bg.samples.size());
    for (int start = 0; start < n; start += bg.subsample_size) {
        BackgroundSet sub;
        sub.seed = bg.seed;
        sub.subsample_size = bg.subsample_size;
        const int stop = std::min(n, start + bg.subsample_size);
        sub.samples.assign(bg.samples.begin() + start, bg.samples.begin() + stop);
        out.push_back(std::move(sub));
    }
    return out;
}

namespace {

void copy_block(FeatureStreams& dst, const FeatureStreams& src, const PlayerBlock& blk) {
    Tensor3& d = dst.stream(blk.stream);
    const Tensor3& s = src.stream(blk.stream);
    if (blk.keypoint < 0) {
        d = s;
        return;
    }
    for (int c = 0; c < d.c; ++c)
        for (int t = 0; t < d.t; ++t) d.at(c, t, blk.keypoint) = s.at(c, t, blk.keypoint);
}

void validate_scheme(const PlayerScheme& scheme, const FeatureStreams& x) {
    if (scheme.players.empty()) throw std::invalid_argument("scheme has no players");
    if (scheme.granularity != PlayerGranularity::kStream &&
        scheme.num_keypoints != x.j.v)
        throw DataError("player scheme keypoint count does not match input");
}

// Keeps one composite per background sample and toggles single players, so
// coalition walks touch O(1) blocks per step.
class CompositeSet {
  public:
    CompositeSet(const FeatureStreams& x, const PlayerScheme& scheme,
                 const std::vector<FeatureStreams>& bg)
        : x_(x), scheme_(scheme), bg_(bg), composites_(bg.begin(), bg.end()),
          member_(scheme.players.size(), false) {
        if (bg.empty()) throw DataError("shapley: empty background");
        for (const auto& b : bg)
            if (!b.j.same_shape(x.j)) throw DataError("background sample shape mismatch");
    }

    void toggle(int player) {
        member_[player] = !member_[player];
        for (std::size_t n = 0; n < composites_.size(); ++n) {
            const FeatureStreams& src = member_[player] ? x_ : bg_[n];
            for (const PlayerBlock& blk : scheme_.players[player])
                copy_block(composites_[n], src, blk);
        }
    }

    void set_coalition(const std::vector<bool>& coalition) {
        for (std::size_t i = 0; i < coalition.size(); ++i)
            if (member_[i] != coalition[i]) toggle(static_cast<int>(i));
    }

    double mean_value(const ValueFn& value) const {
        double acc = 0.0;
        for (const auto& comp : composites_) acc += value(comp);
        return acc / static_cast<double>(composites_.size());
    }

  private:
    const FeatureStreams& x_;
    const PlayerScheme& scheme_;
    const std::vector<FeatureStreams>& bg_;
    std::vector<FeatureStreams> composites_;
    std::vector<bool> member_;
};

ValueFn logit_value(const GcnModel& model, int class_index) {
    if (class_index < 0 || class_index >= model.config.num_classes)
        throw std::invalid_argument("class index out of range");
    auto trace = std::make_shared<ForwardTrace>();
    return [&model, class_index, trace](const FeatureStreams& s) {
        return forward_logits(model, s, *trace)[class_index];
    };
}

}  // namespace

double masked_value(const ValueFn& value, const FeatureStreams& x, const PlayerScheme& scheme,
                    const std::vector<bool>& coalition, const std::vector<FeatureStreams>& bg) {
    validate_scheme(scheme, x);
    if (coalition.size() != scheme.players.size())
        throw std::invalid_argument("coalition size does not match player count");
    CompositeSet comp(x, scheme, bg);
    comp.set_coalition(coalition);
    return comp.mean_value(value);
}

double masked_predict(const GcnModel& model, const FeatureStreams& x,
                      const PlayerScheme& scheme, const std::vector<bool>& coalition,
                      const BackgroundSet& bg, int class_index) {
    return masked_value(logit_value(model, class_index), x, scheme, coalition, bg.samples);
}

ShapResult exact_shapley_fn(const ValueFn& value, const FeatureStreams& x,
                            const PlayerScheme& scheme, const std::vector<FeatureStreams>& bg) {
    validate_scheme(scheme, x);
    const int F = scheme.count();
    if (F > kExactPlayerLimit)
        throw UsageError("exact enumeration supports at most " +
                         std::to_string(kExactPlayerLimit) +
                         " players; use sampled_shapley instead");

    // All coalition values, visiting masks in Gray-code order so each step
    // toggles a single player.
    const std::size_t total = std::size_t{1} << F;
    std::vector<double> v(total, 0.0);
    CompositeSet comp(x, scheme, bg);
    std::size_t prev_gray = 0;
    v[0] = comp.mean_value(value);
    for (std::size_t k = 1; k < total; ++k) {
        const std::size_t gray = k ^ (k >> 1);
        const std::size_t diff = gray ^ prev_gray;
        comp.toggle(std::countr_zero(diff));
        v[gray] = comp.mean_value(value);
        prev_gray = gray;
    }

    std::vector<double> fact(F + 1, 1.0);
    for (int i = 1; i <= F; ++i) fact[i] = fact[i - 1] * i;

    ShapResult res;
    res.estimator = "exact";
    res.granularity = scheme.granularity;
    res.num_keypoints = scheme.num_keypoints;
    res.background_n = static_cast<int>(bg.size());
    res.phi.assign(F, 0.0);
    res.phi0 = v[0];
    res.fx = v[total - 1];
    for (std::size_t mask = 0; mask < total; ++mask) {
        const int s = static_cast<int>(std::popcount(mask));
        for (int i = 0; i < F; ++i) {
            if (mask & (std::size_t{1} << i)) continue;
            const double weight = fact[s] * fact[F - s - 1] / fact[F];
            res.phi[i] += weight * (v[mask | (std::size_t{1} << i)] - v[mask]);
        }
    }
    return res;
}

ShapResult exact_shapley(const GcnModel& model, const FeatureStreams& x,
                         const PlayerScheme& scheme, const BackgroundSet& bg, int class_index) {
    ShapResult res = exact_shapley_fn(logit_value(model, class_index), x, scheme, bg.samples);
    res.class_index = class_index;
    res.seed = bg.seed;
    return res;
}

ShapResult sampled_shapley_fn(const ValueFn& value, const FeatureStreams& x,
                              const PlayerScheme& scheme, const std::vector<FeatureStreams>& bg,
                              int permutations, std::uint64_t seed) {
    validate_scheme(scheme, x);
    if (permutations < 1) throw std::invalid_argument("need at least one permutation");
    const int F = scheme.count();

    CompositeSet comp(x, scheme, bg);
    std::vector<bool> empty(F, false);
    const double v0 = comp.mean_value(value);
    std::vector<bool> full(F, true);
    comp.set_coalition(full);
    const double vfull = comp.mean_value(value);
    comp.set_coalition(empty);

    ShapResult res;
    res.estimator = "permutation";
    res.permutations = permutations;
    res.seed = seed;
    res.granularity = scheme.granularity;
    res.num_keypoints = scheme.num_keypoints;
    res.background_n = static_cast<int>(bg.size());
    res.phi.assign(F, 0.0);
    res.phi0 = v0;
    res.fx = vfull;

    Rng rng(mix_seed(seed, 0x5A9u));
    std::vector<int> perm(F);
    std::iota(perm.begin(), perm.end(), 0);
    for (int m = 0; m < permutations; ++m) {
        if (m % 2 == 0)
            rng.shuffle(perm);
        else
            std::reverse(perm.begin(), perm.end());

        double prev = v0;
        for (int step = 0; step < F; ++step) {
            comp.toggle(perm[step]);
            const double cur = step + 1 == F ? vfull : comp.mean_value(value);
            res.phi[perm[step]] += cur - prev;
            prev = cur;
        }
        comp.set_coalition(empty);
    }
    for (double& p : res.phi) p /= static_cast<double>(permutations);
    return res;
}

ShapResult sampled_shapley(const GcnModel& model, const FeatureStreams& x,
                           const PlayerScheme& scheme, const BackgroundSet& bg, int class_index,
                           int permutations, std::uint64_t seed) {
    ShapResult res = sampled_shapley_fn(logit_value(model, class_index), x, scheme, bg.samples,
                                        permutations, seed);
    res.class_index = class_index;
    return res;
}

ShapResult aggregate_subsampled(const std::vector<ShapResult>& results) {
    if (results.empty()) throw DataError("aggregate: no results");
    const ShapResult& first = results.front();
    ShapResult out = first;
    out.background_n = 0;
    std::fill(out.phi.begin(), out.phi.end(), 0.0);
    out.phi0 = 0.0;
    out.fx = 0.0;
    for (const ShapResult& r : results) {
        if (r.phi.size() != first.phi.size() || r.granularity != first.granularity ||
            r.class_index != first.class_index || r.estimator != first.estimator)
            throw DataError("aggregate: mismatched shapley results");
        for (std::size_t i = 0; i < r.phi.size(); ++i) out.phi[i] += r.phi[i];
        out.phi0 += r.phi0;
        out.fx += r.fx;
        out.background_n += r.background_n;
    }
    const double inv = 1.0 / static_cast<double>(results.size());
    for (double& p : out.phi) p *= inv;
    out.phi0 *= inv;
    out.fx *= inv;
    return out;
}

ExplanationMap shap_to_keypoint_scores(const ShapResult& result, const PlayerScheme& scheme) {
    if (scheme.granularity == PlayerGranularity::kStream)
        throw UsageError("stream-granularity shapley has no keypoint resolution");
    if (static_cast<int>(result.phi.size()) != scheme.count())
        throw DataError("shapley result does not match scheme");

    ExplanationMap e;
    e.method = "shap";
    e.layer = "input";
    e.class_index = result.class_index;
    e.num_windows = 1;
    e.num_keypoints = scheme.num_keypoints;
    e.scores.assign(scheme.num_keypoints, 0.0);
    if (scheme.granularity == PlayerGranularity::kKeypoint) {
        for (int v = 0; v < scheme.num_keypoints; ++v) e.scores[v] = result.phi[v];
    } else {
        for (int v = 0; v < scheme.num_keypoints; ++v)
            for (int st = 0; st < 4; ++st) e.scores[v] += result.phi[v * 4 + st];
    }
    e.estimator = result.estimator;
    e.permutations = result.permutations;
    e.background_n = result.background_n;
    e.seed = result.seed;
    e.phi0 = result.phi0;
    e.fx = result.fx;
    return e;
}

}  // namespace xgcn
