#include "xgcn/graph.hpp"

#include <algorithm>
#include <queue>
#include <string>

#include "xgcn/errors.hpp"

namespace xgcn {

void KeypointGraph::validate() const {
    const int n = num_keypoints;
    if (n <= 0) throw DataError("graph: num_keypoints must be positive");
    if (partition_count <= 0) throw DataError("graph: partition_count must be positive");
    if (static_cast<int>(parent.size()) != n)
        throw DataError("graph: parent map size does not match num_keypoints");

    for (const auto& [a, b] : edges) {
        if (a < 0 || a >= n || b < 0 || b >= n)
            throw DataError("graph: edge references keypoint out of range");
        if (a == b) throw DataError("graph: self-edge not allowed");
    }

    int roots = 0;
    for (int i = 0; i < n; ++i) {
        if (parent[i] < 0 || parent[i] >= n)
            throw DataError("graph: parent index out of range for keypoint " + std::to_string(i));
        if (parent[i] == i) ++roots;
    }
    if (roots != 1) throw DataError("graph: parent map must have exactly one root");

    // Walking up from every node must reach the root without revisiting.
    for (int i = 0; i < n; ++i) {
        int cur = i;
        int steps = 0;
        while (parent[cur] != cur) {
            cur = parent[cur];
            if (++steps > n) throw DataError("graph: parent map contains a cycle");
        }
    }

    for (int i = 0; i < n; ++i) {
        if (parent[i] != i && !has_edge(i, parent[i]))
            throw DataError("graph: bone (" + std::to_string(i) + "," +
                            std::to_string(parent[i]) + ") missing from edge set");
    }

    if (trunk_a >= n || trunk_b >= n || mid_pelvis >= n)
        throw DataError("graph: trunk/mid-pelvis metadata out of range");
}

int KeypointGraph::root() const {
    for (int i = 0; i < num_keypoints; ++i)
        if (parent[i] == i) return i;
    throw DataError("graph: no root");
}

bool KeypointGraph::has_edge(int a, int b) const {
    return std::any_of(edges.begin(), edges.end(), [&](const auto& e) {
        return (e.first == a && e.second == b) || (e.first == b && e.second == a);
    });
}

std::vector<int> KeypointGraph::hop_distances() const {
    const int n = num_keypoints;
    std::vector<std::vector<int>> adj(n);
    for (const auto& [a, b] : edges) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    std::vector<int> dist(n, -1);
    std::queue<int> q;
    const int r = root();
    dist[r] = 0;
    q.push(r);
    while (!q.empty()) {
        const int u = q.front();
        q.pop();
        for (int w : adj[u]) {
            if (dist[w] < 0) {
                dist[w] = dist[u] + 1;
                q.push(w);
            }
        }
    }
    return dist;
}

KeypointGraph make_synthetic_graph(int num_keypoints, int partition_count) {
    if (num_keypoints < 4)
        throw DataError("synthetic graph needs at least 4 keypoints");

    KeypointGraph g;
    g.num_keypoints = num_keypoints;
    g.partition_count = partition_count;
    g.parent.assign(num_keypoints, 0);
    g.parent[0] = 0;  // mid-pelvis root
    g.parent[1] = 0;  // trunk top
    if (num_keypoints > 2) g.parent[2] = 1;  // head

    // Remaining keypoints form four limb chains: two off the trunk top
    // (arms), two off the pelvis (legs).
    int limb_tail[4] = {1, 1, 0, 0};
    for (int i = 3; i < num_keypoints; ++i) {
        const int limb = (i - 3) % 4;
        g.parent[i] = limb_tail[limb];
        limb_tail[limb] = i;
    }

    for (int i = 1; i < num_keypoints; ++i) g.edges.emplace_back(i, g.parent[i]);

    g.trunk_a = 0;
    g.trunk_b = 1;
    g.mid_pelvis = 0;
    g.validate();
    return g;
}

}  // namespace xgcn
