#pragma once

#include "xgcn/graph.hpp"
#include "xgcn/sequence.hpp"

namespace xgcn {

// Derives the four input streams from raw positions:
//   j[c,t,v] = positions[t,v,c]
//   v[c,t,v] = j[c,t+1,v] - j[c,t,v]        (last frame zero)
//   b[c,t,v] = j[c,t,v] - j[c,t,parent(v)]  (root row zero)
//   a[c,t,v] = v[c,t+1,v] - v[c,t,v]        (last frame zero)
FeatureStreams derive_streams(const SkeletonSequence& seq, const KeypointGraph& graph);

// Cuts [start, start+frames) out of a sequence.
SkeletonSequence slice_frames(const SkeletonSequence& seq, int start, int frames);

}  // namespace xgcn
