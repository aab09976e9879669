// Command-line front end: data synthesis, training, explanation, perturbation
// sweeps, keypoint ranking, cross-layer correlation, and runtime benchmarks.
// Every command reads one config (defaults are built in), writes CSV/JSON
// artifacts into --out, and records a sidecar .meta.json.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "xgcn/dataset_io.hpp"
#include "xgcn/errors.hpp"
#include "xgcn/experiment.hpp"
#include "xgcn/explanation.hpp"
#include "xgcn/gradcam.hpp"
#include "xgcn/harness.hpp"
#include "xgcn/hash.hpp"
#include "xgcn/rng.hpp"
#include "xgcn/shapley.hpp"
#include "xgcn/streams.hpp"
#include "xgcn/synthetic.hpp"
#include "xgcn/train.hpp"
#include "xgcn/weights_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace xgcn;

namespace {

struct CliOptions {
    std::string config_path;
    std::string out_dir = "out";
    long long seed = -1;          // overrides config when >= 0
    std::string method;           // overrides explainer.method
    std::string layer;            // overrides explainer.layer
    std::string scheme;           // overrides explainer.scheme
    bool counterfactual = false;
    int k_max = -1;
    std::string mode;
    double factor = -1.0;
    std::string samples;          // comma-separated validation indices
};

void add_common_options(CLI::App* cmd, CliOptions& o) {
    cmd->add_option("--config", o.config_path, "experiment config JSON");
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_option("--seed", o.seed, "override the config seed");
}

ExperimentConfig effective_config(const CliOptions& o) {
    ExperimentConfig cfg = load_experiment_config(o.config_path);
    if (o.seed >= 0) {
        cfg.seed = static_cast<std::uint64_t>(o.seed);
        cfg.train.seed = cfg.seed;
    }
    if (!o.method.empty()) cfg.explainer.method = o.method;
    if (!o.layer.empty()) cfg.explainer.layer = o.layer;
    if (!o.scheme.empty()) cfg.explainer.scheme = granularity_from_string(o.scheme);
    if (o.counterfactual) cfg.explainer.counterfactual = true;
    if (o.k_max >= 0) cfg.harness.k_max = o.k_max;
    if (!o.mode.empty()) cfg.harness.mode = o.mode;
    if (o.factor >= 0.0) cfg.harness.factor = o.factor;
    if (cfg.explainer.method != "gradcam" && cfg.explainer.method != "shap")
        throw UsageError("method must be 'gradcam' or 'shap'");
    cfg.config_hash = git_blob_sha1(experiment_config_json(cfg));
    return cfg;
}

std::string weights_path(const CliOptions& o) {
    return (fs::path(o.out_dir) / "weights.xgw").string();
}

GcnModel load_trained_model(const ExperimentConfig& cfg, const PreparedData& data,
                            const std::string& path) {
    if (!fs::exists(path))
        throw DataError("weights not found at " + path + "; run `xgcn train` first");
    ModelConfig mc = cfg.model;
    mc.in_channels = data.train_set.front().streams.j.c;
    GcnModel model = make_model(mc, data.graph, mix_seed(cfg.seed, 0x0DE1));
    load_weights(model, path);
    return model;
}

std::vector<int> parse_sample_selector(const std::string& samples, int available,
                                       int default_count) {
    std::vector<int> out;
    if (samples.empty()) {
        for (int i = 0; i < std::min(available, default_count); ++i) out.push_back(i);
        return out;
    }
    std::stringstream ss(samples);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const int idx = std::stoi(tok);
        if (idx < 0 || idx >= available)
            throw UsageError("sample index " + tok + " out of range (validation has " +
                             std::to_string(available) + " examples)");
        out.push_back(idx);
    }
    if (out.empty()) throw UsageError("empty sample selector");
    return out;
}

std::vector<ExplanationMap> load_explanations(const CliOptions& o, const std::string& method,
                                              bool raw_only) {
    std::vector<fs::path> files;
    if (fs::exists(o.out_dir))
        for (const auto& entry : fs::directory_iterator(o.out_dir)) {
            const std::string name = entry.path().filename().string();
            if (name.rfind("explain_" + method + "_", 0) == 0 &&
                entry.path().extension() == ".json")
                files.push_back(entry.path());
        }
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw DataError("no '" + method + "' explanations in " + o.out_dir +
                        "; run `xgcn explain` first");
    std::vector<ExplanationMap> maps;
    for (const auto& f : files) {
        std::ifstream in(f);
        std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
        for (ExplanationMap& m : explanation_maps_from_json(text))
            if (!raw_only || !m.normalized) maps.push_back(std::move(m));
    }
    if (maps.empty()) throw DataError("explanation files contained no usable maps");
    return maps;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_synth(const CliOptions& o) {
    const ExperimentConfig cfg = effective_config(o);
    const SyntheticDataset ds = generate_synthetic_dataset(cfg.synthetic, cfg.seed);
    const std::string dir = (fs::path(o.out_dir) / "dataset").string();
    const std::string manifest = save_dataset(ds, cfg.seed, dir);
    write_meta((fs::path(o.out_dir) / "synth.meta.json").string(), cfg, "",
               json{{"manifest", manifest},
                    {"sequences", ds.sequences.size()}}
                   .dump());
    std::cout << manifest << "\n";
    return 0;
}

int cmd_train(const CliOptions& o) {
    const ExperimentConfig cfg = effective_config(o);
    const PreparedData data = prepare_data(cfg, o.out_dir);

    ModelConfig mc = cfg.model;
    mc.in_channels = data.train_set.front().streams.j.c;
    GcnModel model = make_model(mc, data.graph, mix_seed(cfg.seed, 0x0DE1));
    const TrainResult result = train(model, data.train_set, cfg.train);

    const std::string wpath = weights_path(o);
    save_weights(model, wpath);
    const std::string whash = git_blob_sha1_file(wpath);

    std::string body = "epoch,loss\n";
    for (std::size_t e = 0; e < result.loss_trace.size(); ++e)
        body += std::to_string(e) + "," + format_double(result.loss_trace[e]) + "\n";
    write_artifact_csv((fs::path(o.out_dir) / "loss_trace.csv").string(), body, cfg, whash);

    const double val_acc =
        data.val_set.empty() ? 0.0 : accuracy(model, data.val_set);
    write_meta((fs::path(o.out_dir) / "train.meta.json").string(), cfg, whash,
               json{{"final_train_accuracy", result.final_train_accuracy},
                    {"val_accuracy", val_acc},
                    {"weights", wpath}}
                   .dump());
    std::cout << "train accuracy " << result.final_train_accuracy << ", weights at "
              << wpath << "\n";
    return 0;
}

int cmd_explain(const CliOptions& o) {
    const ExperimentConfig cfg = effective_config(o);
    const PreparedData data = prepare_data(cfg, o.out_dir);
    if (data.val_set.empty()) throw DataError("dataset has no validation examples");
    const GcnModel model = load_trained_model(cfg, data, weights_path(o));
    const std::string whash = git_blob_sha1_file(weights_path(o));

    const std::vector<int> selected = parse_sample_selector(
        o.samples, static_cast<int>(data.val_set.size()), cfg.explainer.samples);

    BackgroundSet background;
    PlayerScheme scheme;
    if (cfg.explainer.method == "shap") {
        std::vector<FeatureStreams> pool;
        for (const auto& ex : data.train_set) pool.push_back(ex.streams);
        const int n = std::min<int>(cfg.explainer.background_n,
                                    static_cast<int>(pool.size()));
        const int sub = std::min(cfg.explainer.background_subsample, n);
        background = make_background(pool, n, sub, cfg.seed);
        scheme = make_player_scheme(cfg.explainer.scheme, data.graph.num_keypoints);
        if (cfg.explainer.estimator == "exact" && scheme.count() > kExactPlayerLimit)
            throw UsageError("scheme has " + std::to_string(scheme.count()) +
                             " players; exact enumeration caps at " +
                             std::to_string(kExactPlayerLimit) +
                             ", use estimator=permutation");
    }

    for (const int idx : selected) {
        const LabeledExample& ex = data.val_set[idx];
        const int cls = predict_class(model, ex.streams);
        std::vector<ExplanationMap> maps;

        if (cfg.explainer.method == "gradcam") {
            const CamMap raw =
                compute_cam(model, ex.streams, cls, cfg.explainer.layer,
                            cfg.explainer.counterfactual);
            ExplanationMap raw_map = cam_to_keypoint_scores(raw, {});
            raw_map.sample_id = data.val_ids[idx];
            maps.push_back(std::move(raw_map));
            ExplanationMap norm_map = cam_to_keypoint_scores(normalize_cam(raw), {});
            norm_map.sample_id = data.val_ids[idx];
            maps.push_back(std::move(norm_map));
        } else {
            std::vector<ShapResult> parts;
            for (const BackgroundSet& sub : split_background(background)) {
                if (cfg.explainer.estimator == "exact")
                    parts.push_back(exact_shapley(model, ex.streams, scheme, sub, cls));
                else
                    parts.push_back(sampled_shapley(
                        model, ex.streams, scheme, sub, cls, cfg.explainer.permutations,
                        mix_seed(cfg.seed, static_cast<std::uint64_t>(idx))));
            }
            const ShapResult result = aggregate_subsampled(parts);
            if (cfg.explainer.scheme == PlayerGranularity::kStream) {
                // no keypoint resolution: export the four stream players
                ExplanationMap m;
                m.method = "shap";
                m.layer = "input";
                m.sample_id = data.val_ids[idx];
                m.class_index = cls;
                m.num_windows = 1;
                m.num_keypoints = 4;  // one column per stream player
                m.scores = result.phi;
                m.estimator = result.estimator;
                m.permutations = result.permutations;
                m.background_n = result.background_n;
                m.seed = result.seed;
                m.phi0 = result.phi0;
                m.fx = result.fx;
                maps.push_back(std::move(m));
            } else {
                ExplanationMap m = shap_to_keypoint_scores(result, scheme);
                m.sample_id = data.val_ids[idx];
                maps.push_back(std::move(m));
            }
        }

        const std::string base = "explain_" + cfg.explainer.method + "_s" +
                                 std::to_string(idx);
        // CSV carries the raw (unnormalized) scores
        write_artifact_csv((fs::path(o.out_dir) / (base + ".csv")).string(),
                           explanation_csv({maps.front()}), cfg, whash);
        std::ofstream jout(fs::path(o.out_dir) / (base + ".json"),
                           std::ios::binary | std::ios::trunc);
        jout << explanation_json(maps);
    }

    write_meta((fs::path(o.out_dir) / "explain.meta.json").string(), cfg, whash,
               json{{"samples", selected}, {"method", cfg.explainer.method}}.dump());
    std::cout << "explained " << selected.size() << " samples with "
              << cfg.explainer.method << "\n";
    return 0;
}

int cmd_perturb(const CliOptions& o) {
    const ExperimentConfig cfg = effective_config(o);
    const PreparedData data = prepare_data(cfg, o.out_dir);
    if (data.val_set.empty()) throw DataError("dataset has no validation examples");
    const GcnModel model = load_trained_model(cfg, data, weights_path(o));
    const std::string whash = git_blob_sha1_file(weights_path(o));

    const std::vector<ExplanationMap> maps =
        load_explanations(o, cfg.explainer.method, true);
    const KeypointRanking ranking = rank_by_mean_abs(maps);
    if (static_cast<int>(ranking.order.size()) != data.graph.num_keypoints)
        throw DataError("explanations do not cover the dataset's keypoints");

    std::vector<PerturbMode> modes;
    if (cfg.harness.mode == "all")
        modes = {PerturbMode::kImportant, PerturbMode::kUnimportant, PerturbMode::kRandom};
    else
        modes = {perturb_mode_from_string(cfg.harness.mode)};

    std::vector<PerturbationCurve> curves;
    for (const PerturbMode mode : modes) {
        PerturbationPlan plan;
        plan.ranking = ranking;
        plan.mode = mode;
        plan.k_max = std::min(cfg.harness.k_max, data.graph.num_keypoints);
        plan.factor = cfg.harness.factor;
        plan.target_layers = cfg.harness.target_layers;
        plan.trials = cfg.harness.trials;
        plan.seed = cfg.seed;
        plan.metric = cfg.harness.metric;
        PerturbationCurve curve = perturbation_sweep(model, data.val_set, plan);
        curve.explainer = cfg.explainer.method;
        curves.push_back(std::move(curve));
    }
    write_artifact_csv(
        (fs::path(o.out_dir) / ("perturb_" + cfg.explainer.method + ".csv")).string(),
        curve_csv(curves), cfg, whash);

    // per-sample prediction gaps at pgi_k, for the same explained samples
    std::string gaps = "sample_id,k,factor,pgi,pgu\n";
    double mean_pgi = 0.0, mean_pgu = 0.0;
    std::size_t counted = 0;
    const int k = std::min(cfg.harness.pgi_k, data.graph.num_keypoints);
    for (const ExplanationMap& m : maps) {
        for (std::size_t i = 0; i < data.val_ids.size(); ++i) {
            if (data.val_ids[i] != m.sample_id) continue;
            const auto [pgi, pgu] =
                pgi_pgu(model, data.val_set[i].streams, m, k, cfg.harness.factor,
                        cfg.harness.target_layers);
            gaps += m.sample_id + "," + std::to_string(k) + "," +
                    format_double(cfg.harness.factor) + "," + format_double(pgi) + "," +
                    format_double(pgu) + "\n";
            mean_pgi += pgi;
            mean_pgu += pgu;
            ++counted;
            break;
        }
    }
    write_artifact_csv(
        (fs::path(o.out_dir) / ("pgi_pgu_" + cfg.explainer.method + ".csv")).string(),
        gaps, cfg, whash);

    write_meta((fs::path(o.out_dir) / "perturb.meta.json").string(), cfg, whash,
               json{{"explanations", maps.size()},
                    {"mean_pgi", counted ? mean_pgi / counted : 0.0},
                    {"mean_pgu", counted ? mean_pgu / counted : 0.0}}
                   .dump());
    std::cout << "perturbation curves written for " << cfg.explainer.method << "\n";
    return 0;
}

int cmd_rank(const CliOptions& o) {
    const ExperimentConfig cfg = effective_config(o);
    const std::string wpath = weights_path(o);
    const std::string whash = fs::exists(wpath) ? git_blob_sha1_file(wpath) : "";

    const std::vector<ExplanationMap> maps =
        load_explanations(o, cfg.explainer.method, true);
    const RankingTable table = rank_keypoints(maps);
    write_artifact_csv(
        (fs::path(o.out_dir) / ("rank_" + cfg.explainer.method + ".csv")).string(),
        ranking_csv(table), cfg, whash);

    json rows = json::array();
    for (const RankingRow& r : table.rows)
        rows.push_back({{"keypoint", r.keypoint},
                        {"median", r.median},
                        {"q1", r.q1},
                        {"q3", r.q3},
                        {"outliers", r.outliers}});
    std::ofstream jout(fs::path(o.out_dir) / ("rank_" + cfg.explainer.method + ".json"),
                       std::ios::binary | std::ios::trunc);
    jout << rows.dump(2) << "\n";

    write_meta((fs::path(o.out_dir) / "rank.meta.json").string(), cfg, whash,
               json{{"maps", maps.size()}}.dump());
    std::cout << "ranking written for " << cfg.explainer.method << "\n";
    return 0;
}

int cmd_correlate(const CliOptions& o) {
    const ExperimentConfig cfg = effective_config(o);
    const PreparedData data = prepare_data(cfg, o.out_dir);
    if (data.val_set.empty()) throw DataError("dataset has no validation examples");
    const GcnModel model = load_trained_model(cfg, data, weights_path(o));
    const std::string whash = git_blob_sha1_file(weights_path(o));

    std::vector<std::string> layers = cfg.harness.layers;
    if (layers.empty()) {
        for (const std::string& l : probe_layers())
            if (l != cfg.harness.reference_layer) layers.push_back(l);
        layers.push_back("sum/input");
        layers.push_back("sum/tcn");
        layers.push_back("sum/attention");
    }
    const CorrelationReport report =
        correlation_report(model, data.val_set, layers, cfg.harness.reference_layer);
    write_artifact_csv((fs::path(o.out_dir) / "correlation.csv").string(),
                       correlation_csv(report), cfg, whash);
    write_meta((fs::path(o.out_dir) / "correlate.meta.json").string(), cfg, whash,
               json{{"layers", layers.size()},
                    {"reference", cfg.harness.reference_layer}}
                   .dump());
    std::cout << "correlation report over " << layers.size() << " layers\n";
    return 0;
}

int cmd_bench(const CliOptions& o) {
    const ExperimentConfig cfg = effective_config(o);
    const PreparedData data = prepare_data(cfg, o.out_dir);
    const GcnModel model = load_trained_model(cfg, data, weights_path(o));
    const std::string whash = git_blob_sha1_file(weights_path(o));

    // identical sample set for both explainers, cycling the data if needed
    std::vector<LabeledExample> all = data.train_set;
    all.insert(all.end(), data.val_set.begin(), data.val_set.end());
    std::vector<LabeledExample> samples;
    for (int i = 0; i < cfg.harness.bench_samples; ++i)
        samples.push_back(all[static_cast<std::size_t>(i) % all.size()]);

    std::vector<FeatureStreams> pool;
    for (const auto& ex : data.train_set) pool.push_back(ex.streams);
    const int sub = std::min<int>(cfg.explainer.background_subsample,
                                  static_cast<int>(pool.size()));
    const BackgroundSet background = make_background(pool, sub, sub, cfg.seed);

    ExplainerBenchConfig gradcam_cfg;
    gradcam_cfg.method = "gradcam";
    gradcam_cfg.layer = cfg.explainer.layer;
    gradcam_cfg.counterfactual = cfg.explainer.counterfactual;
    ExplainerBenchConfig shap_cfg;
    shap_cfg.method = "shap";
    shap_cfg.scheme = cfg.explainer.scheme;
    shap_cfg.estimator = "permutation";
    shap_cfg.permutations = cfg.explainer.permutations;
    shap_cfg.seed = cfg.seed;

    const RuntimeReport report =
        runtime_benchmark(model, samples, background, {gradcam_cfg, shap_cfg});
    write_artifact_csv((fs::path(o.out_dir) / "bench.csv").string(), runtime_csv(report),
                       cfg, whash);

    json timings = json::array();
    for (const RuntimeEntry& e : report.entries)
        timings.push_back({{"explainer", e.explainer},
                           {"seconds", e.seconds},
                           {"samples", e.samples},
                           {"config", e.config}});
    write_meta((fs::path(o.out_dir) / "bench.meta.json").string(), cfg, whash,
               json{{"timings", timings}}.dump());
    for (const RuntimeEntry& e : report.entries)
        std::cout << e.explainer << ": " << e.seconds << " s over " << e.samples
                  << " samples (" << e.config << ")\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"explanation workbench for skeleton-based GCN activity recognition"};
    app.require_subcommand(1);

    CliOptions o;
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    CLI::App* train_cmd = app.add_subcommand("train", "train a model on the dataset");
    CLI::App* explain = app.add_subcommand("explain", "explain validation samples");
    CLI::App* perturb = app.add_subcommand("perturb", "edge-importance perturbation sweep");
    CLI::App* rank = app.add_subcommand("rank", "keypoint ranking table");
    CLI::App* correlate = app.add_subcommand("correlate", "cross-layer Grad-CAM correlation");
    CLI::App* bench = app.add_subcommand("bench", "explainer runtime benchmark");

    for (CLI::App* cmd : {synth, train_cmd, explain, perturb, rank, correlate, bench})
        add_common_options(cmd, o);
    for (CLI::App* cmd : {explain, perturb, rank, bench}) {
        cmd->add_option("--method", o.method, "gradcam or shap");
        cmd->add_option("--scheme", o.scheme, "keypoint, stream or keypoint_stream");
    }
    for (CLI::App* cmd : {explain, correlate, bench})
        cmd->add_option("--layer", o.layer, "capture layer, e.g. main/tcn");
    explain->add_flag("--counterfactual", o.counterfactual, "negate the gradients");
    explain->add_option("--samples", o.samples, "comma-separated validation indices");
    perturb->add_option("--k-max", o.k_max, "max perturbed keypoints");
    perturb->add_option("--mode", o.mode, "important, unimportant, random or all");
    perturb->add_option("--factor", o.factor, "edge-importance retention factor");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        fs::create_directories(o.out_dir);
        if (app.got_subcommand(synth)) return cmd_synth(o);
        if (app.got_subcommand(train_cmd)) return cmd_train(o);
        if (app.got_subcommand(explain)) return cmd_explain(o);
        if (app.got_subcommand(perturb)) return cmd_perturb(o);
        if (app.got_subcommand(rank)) return cmd_rank(o);
        if (app.got_subcommand(correlate)) return cmd_correlate(o);
        if (app.got_subcommand(bench)) return cmd_bench(o);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 4;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
