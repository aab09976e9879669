#include "xgcn/streams.hpp"

#include <cmath>
#include <string>

#include "xgcn/errors.hpp"

namespace xgcn {

void SkeletonSequence::validate() const {
    if (frames < 2) throw DataError("sequence: need at least 2 frames");
    if (coords != 2 && coords != 3) throw DataError("sequence: coords must be 2 or 3");
    if (keypoints <= 0) throw DataError("sequence: no keypoints");
    if (positions.size() != static_cast<std::size_t>(frames) * keypoints * coords)
        throw DataError("sequence: position buffer size mismatch");
    for (double x : positions)
        if (!std::isfinite(x)) throw DataError("sequence: non-finite position value");
}

const Tensor3& FeatureStreams::stream(int idx) const {
    switch (idx) {
        case 0: return j;
        case 1: return v;
        case 2: return b;
        case 3: return a;
    }
    throw std::invalid_argument("stream index out of range");
}

Tensor3& FeatureStreams::stream(int idx) {
    switch (idx) {
        case 0: return j;
        case 1: return v;
        case 2: return b;
        case 3: return a;
    }
    throw std::invalid_argument("stream index out of range");
}

const char* FeatureStreams::stream_name(int idx) {
    static const char* names[4] = {"j", "v", "b", "a"};
    if (idx < 0 || idx > 3) throw std::invalid_argument("stream index out of range");
    return names[idx];
}

FeatureStreams derive_streams(const SkeletonSequence& seq, const KeypointGraph& graph) {
    seq.validate();
    if (graph.num_keypoints != seq.keypoints)
        throw DataError("derive_streams: graph has " + std::to_string(graph.num_keypoints) +
                        " keypoints, sequence has " + std::to_string(seq.keypoints));

    const int C = seq.coords, T = seq.frames, V = seq.keypoints;
    FeatureStreams s;
    s.j = Tensor3(C, T, V);
    s.v = Tensor3(C, T, V);
    s.b = Tensor3(C, T, V);
    s.a = Tensor3(C, T, V);

    for (int c = 0; c < C; ++c)
        for (int t = 0; t < T; ++t)
            for (int v = 0; v < V; ++v) s.j.at(c, t, v) = seq.at(t, v, c);

    for (int c = 0; c < C; ++c)
        for (int t = 0; t + 1 < T; ++t)
            for (int v = 0; v < V; ++v)
                s.v.at(c, t, v) = s.j.at(c, t + 1, v) - s.j.at(c, t, v);

    for (int c = 0; c < C; ++c)
        for (int t = 0; t < T; ++t)
            for (int v = 0; v < V; ++v) {
                const int p = graph.parent[v];
                if (p != v) s.b.at(c, t, v) = s.j.at(c, t, v) - s.j.at(c, t, p);
            }

    for (int c = 0; c < C; ++c)
        for (int t = 0; t + 1 < T; ++t)
            for (int v = 0; v < V; ++v)
                s.a.at(c, t, v) = s.v.at(c, t + 1, v) - s.v.at(c, t, v);

    return s;
}

SkeletonSequence slice_frames(const SkeletonSequence& seq, int start, int frames) {
    if (start < 0 || frames < 1 || start + frames > seq.frames)
        throw std::invalid_argument("slice_frames: window out of range");
    SkeletonSequence out(frames, seq.keypoints, seq.coords);
    out.fps = seq.fps;
    out.label = seq.label;
    out.subject_id = seq.subject_id;
    for (int t = 0; t < frames; ++t)
        for (int v = 0; v < seq.keypoints; ++v)
            for (int c = 0; c < seq.coords; ++c) out.at(t, v, c) = seq.at(start + t, v, c);
    return out;
}

}  // namespace xgcn
