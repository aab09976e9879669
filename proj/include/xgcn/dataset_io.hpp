#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "xgcn/graph.hpp"
#include "xgcn/sequence.hpp"
#include "xgcn/synthetic.hpp"

namespace xgcn {

struct ManifestEntry {
    std::string path;  // relative to the manifest's directory
    int label = 0;
    std::string subject_id;
    std::string split;  // "train" or "val"
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    KeypointGraph graph;
    std::uint64_t seed = 0;
    std::map<int, std::vector<int>> active_keypoints;
};

// Binary sequence file: magic "XGS1", u32 T, u32 V, u32 C, f32 fps,
// u32 label, T*V*C little-endian f32 (t-major, v-middle, c-minor), CRC32 of
// the float payload. Positions round-trip at f32 precision.
void save_sequence(const SkeletonSequence& seq, const std::string& path);
SkeletonSequence load_sequence(const std::string& path);

void save_manifest(const DatasetManifest& m, const std::string& path);
DatasetManifest load_manifest(const std::string& path);

// Writes every sequence under dir and a manifest.json describing them.
// Returns the manifest path.
std::string save_dataset(const SyntheticDataset& ds, std::uint64_t seed, const std::string& dir);

struct LoadedDataset {
    DatasetManifest manifest;
    std::vector<SkeletonSequence> sequences;  // aligned with manifest.entries
};

LoadedDataset load_dataset(const std::string& manifest_path);

}  // namespace xgcn
