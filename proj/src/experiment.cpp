#include "xgcn/experiment.hpp"

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>

#include "xgcn/errors.hpp"
#include "xgcn/hash.hpp"
#include "xgcn/preprocess.hpp"
#include "xgcn/streams.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace xgcn {

ExperimentConfig::ExperimentConfig() {
    model.num_classes = synthetic.num_classes;
    model.in_channels = 2;
    model.branch_channels = 6;
    model.main_channels = 12;
    model.tcn_kernel = 9;
    train.lr = 0.02;
    train.epochs = 60;
    train.batch = 8;
    train.seed = seed;
}

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key))
            throw UsageError("config: unknown key '" + key + "' in " + where);
}

AttentionMode att_mode(const json& j, const std::string& key, AttentionMode fallback) {
    if (!j.contains(key)) return fallback;
    return attention_mode_from_string(j.at(key).get<std::string>());
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path) {
    ExperimentConfig cfg;
    json j = json::object();
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open config file: " + path);
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            throw UsageError(path + ": invalid config JSON: " + e.what());
        }
    }
    check_keys(j, {"seed", "dataset", "model", "train", "explainer", "harness"}, "config");

    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("dataset")) {
        const json& d = j["dataset"];
        check_keys(d, {"synthetic", "manifest", "windowing"}, "dataset");
        if (d.contains("synthetic")) {
            const json& s = d["synthetic"];
            check_keys(s, {"num_classes", "per_class", "num_keypoints", "frames", "fps",
                           "noise_scale"},
                       "dataset.synthetic");
            cfg.synthetic.num_classes = s.value("num_classes", cfg.synthetic.num_classes);
            cfg.synthetic.per_class = s.value("per_class", cfg.synthetic.per_class);
            cfg.synthetic.num_keypoints =
                s.value("num_keypoints", cfg.synthetic.num_keypoints);
            cfg.synthetic.frames = s.value("frames", cfg.synthetic.frames);
            cfg.synthetic.fps = s.value("fps", cfg.synthetic.fps);
            cfg.synthetic.noise_scale = s.value("noise_scale", cfg.synthetic.noise_scale);
        }
        cfg.manifest = d.value("manifest", cfg.manifest);
        cfg.windowing = d.value("windowing", cfg.windowing);
        if (cfg.windowing != "whole" && cfg.windowing != "cp")
            throw UsageError("config: dataset.windowing must be 'whole' or 'cp'");
    }
    cfg.model.num_classes = cfg.synthetic.num_classes;
    if (j.contains("model")) {
        const json& m = j["model"];
        check_keys(m, {"num_classes", "branch_channels", "main_channels", "tcn_kernel",
                       "partition_strategy", "attention", "frame_length"},
                   "model");
        cfg.model.num_classes = m.value("num_classes", cfg.model.num_classes);
        cfg.model.branch_channels = m.value("branch_channels", cfg.model.branch_channels);
        cfg.model.main_channels = m.value("main_channels", cfg.model.main_channels);
        cfg.model.tcn_kernel = m.value("tcn_kernel", cfg.model.tcn_kernel);
        if (m.contains("partition_strategy"))
            cfg.model.strategy =
                partition_strategy_from_string(m["partition_strategy"].get<std::string>());
        if (m.contains("attention")) {
            const json& a = m["attention"];
            check_keys(a, {"branches", "main"}, "model.attention");
            const AttentionMode branches =
                att_mode(a, "branches", cfg.model.branch_attention[0]);
            cfg.model.branch_attention = {branches, branches, branches, branches};
            cfg.model.main_attention = att_mode(a, "main", cfg.model.main_attention);
        }
        cfg.model.frame_length = m.value("frame_length", cfg.model.frame_length);
    }
    if (j.contains("train")) {
        const json& t = j["train"];
        check_keys(t, {"lr", "epochs", "batch"}, "train");
        cfg.train.lr = t.value("lr", cfg.train.lr);
        cfg.train.epochs = t.value("epochs", cfg.train.epochs);
        cfg.train.batch = t.value("batch", cfg.train.batch);
    }
    cfg.train.seed = cfg.seed;
    if (j.contains("explainer")) {
        const json& e = j["explainer"];
        check_keys(e, {"method", "layer", "counterfactual", "scheme", "estimator",
                       "permutations", "background_n", "background_subsample", "samples"},
                   "explainer");
        cfg.explainer.method = e.value("method", cfg.explainer.method);
        cfg.explainer.layer = e.value("layer", cfg.explainer.layer);
        cfg.explainer.counterfactual =
            e.value("counterfactual", cfg.explainer.counterfactual);
        if (e.contains("scheme"))
            cfg.explainer.scheme = granularity_from_string(e["scheme"].get<std::string>());
        cfg.explainer.estimator = e.value("estimator", cfg.explainer.estimator);
        cfg.explainer.permutations = e.value("permutations", cfg.explainer.permutations);
        cfg.explainer.background_n = e.value("background_n", cfg.explainer.background_n);
        cfg.explainer.background_subsample =
            e.value("background_subsample", cfg.explainer.background_subsample);
        cfg.explainer.samples = e.value("samples", cfg.explainer.samples);
    }
    if (j.contains("harness")) {
        const json& h = j["harness"];
        check_keys(h, {"k_max", "mode", "factor", "trials", "metric", "target_layers",
                       "layers", "reference_layer", "pgi_k", "bench_samples"},
                   "harness");
        cfg.harness.k_max = h.value("k_max", cfg.harness.k_max);
        cfg.harness.mode = h.value("mode", cfg.harness.mode);
        cfg.harness.factor = h.value("factor", cfg.harness.factor);
        cfg.harness.trials = h.value("trials", cfg.harness.trials);
        if (h.contains("metric"))
            cfg.harness.metric = metric_from_string(h["metric"].get<std::string>());
        if (h.contains("target_layers"))
            cfg.harness.target_layers = h["target_layers"].get<std::vector<std::string>>();
        if (h.contains("layers"))
            cfg.harness.layers = h["layers"].get<std::vector<std::string>>();
        cfg.harness.reference_layer =
            h.value("reference_layer", cfg.harness.reference_layer);
        cfg.harness.pgi_k = h.value("pgi_k", cfg.harness.pgi_k);
        cfg.harness.bench_samples = h.value("bench_samples", cfg.harness.bench_samples);
    }

    if (cfg.explainer.method != "gradcam" && cfg.explainer.method != "shap")
        throw UsageError("config: explainer.method must be 'gradcam' or 'shap'");
    if (cfg.explainer.estimator != "exact" && cfg.explainer.estimator != "permutation")
        throw UsageError("config: explainer.estimator must be 'exact' or 'permutation'");

    cfg.config_hash = git_blob_sha1(experiment_config_json(cfg));
    return cfg;
}

std::string experiment_config_json(const ExperimentConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["dataset"]["synthetic"] = {{"num_classes", cfg.synthetic.num_classes},
                                 {"per_class", cfg.synthetic.per_class},
                                 {"num_keypoints", cfg.synthetic.num_keypoints},
                                 {"frames", cfg.synthetic.frames},
                                 {"fps", cfg.synthetic.fps},
                                 {"noise_scale", cfg.synthetic.noise_scale}};
    if (!cfg.manifest.empty()) j["dataset"]["manifest"] = cfg.manifest;
    j["dataset"]["windowing"] = cfg.windowing;
    j["model"] = {{"num_classes", cfg.model.num_classes},
                  {"branch_channels", cfg.model.branch_channels},
                  {"main_channels", cfg.model.main_channels},
                  {"tcn_kernel", cfg.model.tcn_kernel},
                  {"partition_strategy", to_string(cfg.model.strategy)},
                  {"attention",
                   {{"branches", to_string(cfg.model.branch_attention[0])},
                    {"main", to_string(cfg.model.main_attention)}}},
                  {"frame_length", cfg.model.frame_length}};
    j["train"] = {{"lr", cfg.train.lr}, {"epochs", cfg.train.epochs}, {"batch", cfg.train.batch}};
    j["explainer"] = {{"method", cfg.explainer.method},
                      {"layer", cfg.explainer.layer},
                      {"counterfactual", cfg.explainer.counterfactual},
                      {"scheme", to_string(cfg.explainer.scheme)},
                      {"estimator", cfg.explainer.estimator},
                      {"permutations", cfg.explainer.permutations},
                      {"background_n", cfg.explainer.background_n},
                      {"background_subsample", cfg.explainer.background_subsample},
                      {"samples", cfg.explainer.samples}};
    j["harness"] = {{"k_max", cfg.harness.k_max},
                    {"mode", cfg.harness.mode},
                    {"factor", cfg.harness.factor},
                    {"trials", cfg.harness.trials},
                    {"metric", to_string(cfg.harness.metric)},
                    {"target_layers", cfg.harness.target_layers},
                    {"layers", cfg.harness.layers},
                    {"reference_layer", cfg.harness.reference_layer},
                    {"pgi_k", cfg.harness.pgi_k},
                    {"bench_samples", cfg.harness.bench_samples}};
    return j.dump(2) + "\n";
}

PreparedData prepare_data(const ExperimentConfig& cfg, const std::string& out_dir) {
    std::string manifest = cfg.manifest;
    if (manifest.empty())
        manifest = (fs::path(out_dir) / "dataset" / "manifest.json").string();
    if (!fs::exists(manifest))
        throw DataError("dataset manifest not found at " + manifest +
                        "; run `xgcn synth` first");

    const LoadedDataset loaded = load_dataset(manifest);
    PreparedData out;
    out.graph = loaded.manifest.graph;
    out.manifest = loaded.manifest;

    for (std::size_t i = 0; i < loaded.sequences.size(); ++i) {
        const SkeletonSequence& seq = loaded.sequences[i];
        const bool is_train = loaded.manifest.entries[i].split == "train";
        auto& dst = is_train ? out.train_set : out.val_set;
        auto& ids = is_train ? out.train_ids : out.val_ids;
        if (cfg.windowing == "whole") {
            dst.push_back({derive_streams(seq, out.graph), seq.label});
            ids.push_back(seq.subject_id);
        } else {
            const WindowSet ws = preprocess_cp(seq, out.graph);
            for (std::size_t w = 0; w < ws.windows.size(); ++w) {
                dst.push_back({ws.windows[w], ws.labels[w]});
                ids.push_back(seq.subject_id + "#w" + std::to_string(w));
            }
        }
    }
    if (out.train_set.empty())
        throw DataError("dataset has no training examples after preparation");
    return out;
}

void write_artifact_csv(const std::string& path, const std::string& body,
                        const ExperimentConfig& cfg, const std::string& weight_hash) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path);
    out << "# seed=" << cfg.seed << "\n";
    out << "# config_hash=" << cfg.config_hash << "\n";
    out << "# weight_hash=" << (weight_hash.empty() ? "none" : weight_hash) << "\n";
    out << body;
    if (!out) throw DataError("write failed: " + path);
}

void write_meta(const std::string& path, const ExperimentConfig& cfg,
                const std::string& weight_hash, const std::string& extras_json) {
    json j;
    j["config"] = json::parse(experiment_config_json(cfg));
    j["seed"] = cfg.seed;
    j["config_hash"] = cfg.config_hash;
    j["weight_hash"] = weight_hash.empty() ? "none" : weight_hash;
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    j["timestamp_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(now).count();
    if (!extras_json.empty()) j["extras"] = json::parse(extras_json);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path);
    out << j.dump(2) << "\n";
}

}  // namespace xgcn
