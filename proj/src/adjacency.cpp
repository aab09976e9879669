#include "xgcn/adjacency.hpp"

#include <cmath>

#include "xgcn/errors.hpp"

namespace xgcn {

PartitionStrategy partition_strategy_from_string(const std::string& s) {
    if (s == "uniform") return PartitionStrategy::kUniform;
    if (s == "stgcn") return PartitionStrategy::kStgcn;
    throw UsageError("unknown partition strategy: " + s);
}

std::string to_string(PartitionStrategy s) {
    return s == PartitionStrategy::kUniform ? "uniform" : "stgcn";
}

std::vector<MatV> build_partitions(const KeypointGraph& graph, PartitionStrategy strategy) {
    graph.validate();
    const int n = graph.num_keypoints;

    if (strategy == PartitionStrategy::kUniform) {
        MatV a(n);
        for (int i = 0; i < n; ++i) a.at(i, i) = 1.0;
        for (const auto& [u, w] : graph.edges) {
            a.at(u, w) = 1.0;
            a.at(w, u) = 1.0;
        }
        return {a};
    }

    // Spatial-configuration split: for an edge (u,w), the entry lands in the
    // centripetal partition when w is closer to the root than u, in the
    // centrifugal one when farther, and with the self loops when equidistant.
    const std::vector<int> dist = graph.hop_distances();
    MatV self(n), centripetal(n), centrifugal(n);
    for (int i = 0; i < n; ++i) self.at(i, i) = 1.0;
    for (const auto& [u, w] : graph.edges) {
        if (dist[u] < 0 || dist[w] < 0)
            throw DataError("stgcn partitioning: keypoint unreachable from root");
        auto place = [&](int from, int to) {
            if (dist[to] < dist[from])
                centripetal.at(from, to) = 1.0;
            else if (dist[to] > dist[from])
                centrifugal.at(from, to) = 1.0;
            else
                self.at(from, to) = 1.0;
        };
        place(u, w);
        place(w, u);
    }
    return {self, centripetal, centrifugal};
}

NormalizedAdjacency normalize_adjacency(const KeypointGraph& graph, PartitionStrategy strategy) {
    const auto raw = build_partitions(graph, strategy);
    const int expected = strategy == PartitionStrategy::kUniform ? 1 : 3;
    if (graph.partition_count != expected)
        throw DataError("graph partition_count " + std::to_string(graph.partition_count) +
                        " does not match strategy " + to_string(strategy));

    const int n = graph.num_keypoints;
    NormalizedAdjacency out;
    for (const MatV& a : raw) {
        std::vector<double> deg(n, 0.0);
        for (int u = 0; u < n; ++u)
            for (int w = 0; w < n; ++w) deg[u] += std::max(a.at(u, w), a.at(w, u));

        MatV norm(n);
        for (int u = 0; u < n; ++u)
            for (int w = 0; w < n; ++w) {
                if (a.at(u, w) == 0.0) continue;
                const double d = deg[u] * deg[w];
                if (d > 0.0) norm.at(u, w) = a.at(u, w) / std::sqrt(d);
            }
        out.partitions.push_back(std::move(norm));
    }
    return out;
}

}  // namespace xgcn
