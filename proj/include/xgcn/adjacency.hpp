#pragma once

#include <string>
#include <vector>

#include "xgcn/graph.hpp"
#include "xgcn/tensor.hpp"

namespace xgcn {

enum class PartitionStrategy {
    kUniform,  // single partition A + I
    kStgcn,    // {self + equal-distance, centripetal, centrifugal} w.r.t. the root
};

PartitionStrategy partition_strategy_from_string(const std::string& s);
std::string to_string(PartitionStrategy s);

struct NormalizedAdjacency {
    std::vector<MatV> partitions;  // each Lambda^{-1/2} A_j Lambda^{-1/2}
};

// Builds the raw (unnormalized) partition matrices; they sum to A + I.
std::vector<MatV> build_partitions(const KeypointGraph& graph, PartitionStrategy strategy);

// Entry (u,w) of each partition becomes A_j[u,w] / sqrt(deg_j(u) * deg_j(w)).
// Degrees count incident entries of the symmetrized partition, so the two
// directed partitions of a tree edge normalize identically; zero-degree rows
// and columns are left at zero.
NormalizedAdjacency normalize_adjacency(const KeypointGraph& graph, PartitionStrategy strategy);

}  // namespace xgcn
