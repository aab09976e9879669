#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "xgcn/dataset_io.hpp"
#include "xgcn/harness.hpp"
#include "xgcn/model.hpp"
#include "xgcn/shapley.hpp"
#include "xgcn/synthetic.hpp"
#include "xgcn/train.hpp"

namespace xgcn {

struct ExplainerSettings {
    std::string method = "gradcam";
    std::string layer = "main/tcn";
    bool counterfactual = false;
    PlayerGranularity scheme = PlayerGranularity::kKeypoint;
    std::string estimator = "exact";  // or "permutation"
    int permutations = 200;
    int background_n = 40;
    int background_subsample = 20;
    int samples = 6;  // default: first N validation examples
};

struct HarnessSettings {
    int k_max = 6;
    std::string mode = "all";  // important | unimportant | random | all
    double factor = 0.0035;
    int trials = 10;
    Metric metric = Metric::kAccuracy;
    std::vector<std::string> target_layers = all_gconv_layers();
    std::vector<std::string> layers;  // correlation rows; empty = probe set + sums
    std::string reference_layer = "main/attention";
    int pgi_k = 3;
    int bench_samples = 10;
};

// One experiment = one config. Every field has a default so a fresh directory
// plus the built-in config runs end to end.
struct ExperimentConfig {
    std::uint64_t seed = 1234;
    SyntheticConfig synthetic;
    std::string manifest;         // when set, load this dataset instead of out/dataset
    std::string windowing = "whole";  // "whole" or "cp"
    ModelConfig model;
    TrainConfig train;
    ExplainerSettings explainer;
    HarnessSettings harness;
    std::string config_hash;  // sha1 of the effective config

    ExperimentConfig();
};

// Parses the JSON config file (or returns defaults when path is empty) and
// stamps config_hash. Unknown keys are rejected.
ExperimentConfig load_experiment_config(const std::string& path);

// Effective-config JSON (also the hashing input).
std::string experiment_config_json(const ExperimentConfig& cfg);

struct PreparedData {
    KeypointGraph graph;
    DatasetManifest manifest;
    std::vector<LabeledExample> train_set;
    std::vector<LabeledExample> val_set;
    std::vector<std::string> train_ids;
    std::vector<std::string> val_ids;
};

// Loads the dataset named by the config (or <out>/dataset/manifest.json) and
// derives per-example feature streams, whole-sequence or CP-windowed.
PreparedData prepare_data(const ExperimentConfig& cfg, const std::string& out_dir);

// CSV artifact with the provenance preamble (# seed / # config_hash /
// # weight_hash) on top; bodies are byte-reproducible.
void write_artifact_csv(const std::string& path, const std::string& body,
                        const ExperimentConfig& cfg, const std::string& weight_hash);

// Sidecar experiment record: effective config, seeds, hashes, timestamp and
// any command-specific extras (timings live here, not in the CSVs).
void write_meta(const std::string& path, const ExperimentConfig& cfg,
                const std::string& weight_hash, const std::string& extras_json);

}  // namespace xgcn
