#include "xgcn/explanation.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "xgcn/errors.hpp"

using nlohmann::json;

namespace xgcn {

std::string format_double(double x) {
    char buf[40];
    // Shortest representation that round-trips a double.
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    double parsed = 0.0;
    for (int prec = 1; prec <= 16; ++prec) {
        char shorter[40];
        std::snprintf(shorter, sizeof(shorter), "%.*g", prec, x);
        std::sscanf(shorter, "%lf", &parsed);
        if (parsed == x) return shorter;
    }
    return buf;
}

KeypointRanking rank_by_mean_abs(const std::vector<ExplanationMap>& maps) {
    if (maps.empty()) throw DataError("ranking: no explanation maps");
    const int V = maps.front().num_keypoints;
    std::vector<double> total(V, 0.0);
    std::size_t count = 0;
    for (const auto& m : maps) {
        if (m.num_keypoints != V) throw DataError("ranking: keypoint count mismatch");
        for (int w = 0; w < m.num_windows; ++w)
            for (int v = 0; v < V; ++v) total[v] += std::abs(m.score(w, v));
        count += static_cast<std::size_t>(m.num_windows);
    }
    KeypointRanking r;
    r.score_by_keypoint.resize(V);
    for (int v = 0; v < V; ++v)
        r.score_by_keypoint[v] = total[v] / static_cast<double>(count);
    r.order.resize(V);
    for (int v = 0; v < V; ++v) r.order[v] = v;
    std::stable_sort(r.order.begin(), r.order.end(), [&](int a, int b) {
        if (r.score_by_keypoint[a] != r.score_by_keypoint[b])
            return r.score_by_keypoint[a] > r.score_by_keypoint[b];
        return a < b;
    });
    return r;
}

std::string explanation_csv(const std::vector<ExplanationMap>& maps) {
    const bool shap = !maps.empty() && maps.front().method == "shap";
    std::string out = "sample_id,method,layer,class,counterfactual,window,keypoint,score";
    if (shap) out += ",estimator,M,background_n,seed";
    out += "\n";
    for (const auto& m : maps) {
        for (int w = 0; w < m.num_windows; ++w)
            for (int v = 0; v < m.num_keypoints; ++v) {
                out += m.sample_id + "," + m.method + "," + m.layer + "," +
                       std::to_string(m.class_index) + "," +
                       (m.counterfactual ? "1" : "0") + "," + std::to_string(w) + "," +
                       std::to_string(v) + "," + format_double(m.score(w, v));
                if (shap)
                    out += "," + m.estimator + "," + std::to_string(m.permutations) + "," +
                           std::to_string(m.background_n) + "," + std::to_string(m.seed);
                out += "\n";
            }
    }
    return out;
}

std::string explanation_json(const std::vector<ExplanationMap>& maps) {
    json arr = json::array();
    for (const auto& m : maps) {
        json j;
        j["sample_id"] = m.sample_id;
        j["method"] = m.method;
        j["layer"] = m.layer;
        j["class"] = m.class_index;
        j["counterfactual"] = m.counterfactual;
        j["normalized"] = m.normalized;
        j["num_windows"] = m.num_windows;
        j["num_keypoints"] = m.num_keypoints;
        j["scores"] = m.scores;
        if (m.num_frames > 0) {
            j["num_frames"] = m.num_frames;
            j["frames"] = m.frames;
        }
        if (m.method == "shap") {
            j["estimator"] = m.estimator;
            j["permutations"] = m.permutations;
            j["background_n"] = m.background_n;
            j["seed"] = m.seed;
            j["phi0"] = m.phi0;
            j["fx"] = m.fx;
            j["value_scale"] = "logit";
        }
        arr.push_back(std::move(j));
    }
    return arr.dump(2) + "\n";
}

std::vector<ExplanationMap> explanation_maps_from_json(const std::string& text) {
    json arr;
    try {
        arr = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("invalid explanation JSON: ") + e.what());
    }
    std::vector<ExplanationMap> maps;
    for (const json& j : arr) {
        ExplanationMap m;
        m.sample_id = j.at("sample_id").get<std::string>();
        m.method = j.at("method").get<std::string>();
        m.layer = j.at("layer").get<std::string>();
        m.class_index = j.at("class").get<int>();
        m.counterfactual = j.at("counterfactual").get<bool>();
        m.normalized = j.at("normalized").get<bool>();
        m.num_windows = j.at("num_windows").get<int>();
        m.num_keypoints = j.at("num_keypoints").get<int>();
        m.scores = j.at("scores").get<std::vector<double>>();
        if (m.scores.size() !=
            static_cast<std::size_t>(m.num_windows) * m.num_keypoints)
            throw DataError("explanation JSON: score count does not match shape");
        if (j.contains("num_frames")) {
            m.num_frames = j["num_frames"].get<int>();
            m.frames = j.at("frames").get<std::vector<double>>();
        }
        if (m.method == "shap") {
            m.estimator = j.value("estimator", "");
            m.permutations = j.value("permutations", 0);
            m.background_n = j.value("background_n", 0);
            m.seed = j.value("seed", std::uint64_t{0});
            m.phi0 = j.value("phi0", 0.0);
            m.fx = j.value("fx", 0.0);
        }
        maps.push_back(std::move(m));
    }
    return maps;
}

}  // namespace xgcn
