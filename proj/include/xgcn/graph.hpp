#pragma once

#include <utility>
#include <vector>

namespace xgcn {

// Skeleton graph: undirected edges over keypoint indices plus a rooted bone
// tree given by the parent map (the root maps to itself). trunk_a/trunk_b and
// mid_pelvis designate the reference keypoints used by the CP-style
// preprocessing; they are optional (-1) for graphs that never go through it.
struct KeypointGraph {
    int num_keypoints = 0;
    std::vector<std::pair<int, int>> edges;
    std::vector<int> parent;
    int partition_count = 3;

    int trunk_a = -1;
    int trunk_b = -1;
    int mid_pelvis = -1;

    // Throws DataError if the edge list or parent map violates the contract:
    // indices in range, exactly one root, no cycles, every (child, parent)
    // pair present as an edge.
    void validate() const;

    int root() const;
    bool has_edge(int a, int b) const;

    // BFS hop distance from the root over the undirected edge set.
    std::vector<int> hop_distances() const;
};

// Body-like tree used by the synthetic dataset: a three-keypoint spine with
// limb chains attached round-robin. Keypoint 0 is the mid-pelvis root,
// keypoint 1 the trunk top. Requires num_keypoints >= 4.
KeypointGraph make_synthetic_graph(int num_keypoints, int partition_count = 3);

}  // namespace xgcn
