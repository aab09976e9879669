#include "xgcn/dataset_io.hpp"

#include <json.hpp>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "xgcn/errors.hpp"
#include "xgcn/hash.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace xgcn {

namespace {

constexpr char kSeqMagic[4] = {'X', 'G', 'S', '1'};

void put_u32(std::string& buf, std::uint32_t x) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
}

void put_f32(std::string& buf, float x) {
    std::uint32_t bits;
    std::memcpy(&bits, &x, 4);
    put_u32(buf, bits);
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;
    const std::string& path;

    std::uint32_t u32() {
        if (pos + 4 > buf.size())
            throw DataError(path + ": truncated at byte offset " + std::to_string(pos));
        std::uint32_t x = 0;
        for (int i = 0; i < 4; ++i)
            x |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 4;
        return x;
    }

    float f32() {
        const std::uint32_t bits = u32();
        float x;
        std::memcpy(&x, &bits, 4);
        return x;
    }
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed: " + path);
}

}  // namespace

void save_sequence(const SkeletonSequence& seq, const std::string& path) {
    seq.validate();
    std::string buf;
    buf.append(kSeqMagic, 4);
    put_u32(buf, static_cast<std::uint32_t>(seq.frames));
    put_u32(buf, static_cast<std::uint32_t>(seq.keypoints));
    put_u32(buf, static_cast<std::uint32_t>(seq.coords));
    put_f32(buf, static_cast<float>(seq.fps));
    put_u32(buf, static_cast<std::uint32_t>(seq.label));

    const std::size_t payload_start = buf.size();
    for (int t = 0; t < seq.frames; ++t)
        for (int v = 0; v < seq.keypoints; ++v)
            for (int c = 0; c < seq.coords; ++c)
                put_f32(buf, static_cast<float>(seq.at(t, v, c)));
    const std::uint32_t crc =
        crc32(buf.data() + payload_start, buf.size() - payload_start);
    put_u32(buf, crc);
    write_file(path, buf);
}

SkeletonSequence load_sequence(const std::string& path) {
    const std::string bytes = read_file(path);
    Reader r{bytes, 0, path};
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kSeqMagic, 4) != 0)
        throw DataError(path + ": bad magic at byte offset 0");
    r.pos = 4;

    const std::uint32_t T = r.u32();
    const std::uint32_t V = r.u32();
    const std::uint32_t C = r.u32();
    const float fps = r.f32();
    const std::uint32_t label = r.u32();
    if (T < 2 || V == 0 || (C != 2 && C != 3))
        throw DataError(path + ": malformed header at byte offset 4");

    SkeletonSequence seq(static_cast<int>(T), static_cast<int>(V), static_cast<int>(C));
    seq.fps = fps;
    seq.label = static_cast<int>(label);

    const std::size_t payload_start = r.pos;
    for (std::uint32_t t = 0; t < T; ++t)
        for (std::uint32_t v = 0; v < V; ++v)
            for (std::uint32_t c = 0; c < C; ++c) seq.at(t, v, c) = r.f32();

    const std::size_t payload_len = r.pos - payload_start;
    const std::uint32_t stored = r.u32();
    const std::uint32_t actual = crc32(bytes.data() + payload_start, payload_len);
    if (stored != actual)
        throw DataError(path + ": checksum mismatch at byte offset " +
                        std::to_string(r.pos - 4));
    return seq;
}

namespace {

json graph_to_json(const KeypointGraph& g) {
    json j;
    j["num_keypoints"] = g.num_keypoints;
    j["edges"] = json::array();
    for (const auto& [a, b] : g.edges) j["edges"].push_back({a, b});
    j["parent"] = g.parent;
    j["partition_count"] = g.partition_count;
    j["trunk"] = {g.trunk_a, g.trunk_b};
    j["mid_pelvis"] = g.mid_pelvis;
    return j;
}

KeypointGraph graph_from_json(const json& j) {
    KeypointGraph g;
    g.num_keypoints = j.at("num_keypoints").get<int>();
    for (const auto& e : j.at("edges")) g.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    g.parent = j.at("parent").get<std::vector<int>>();
    g.partition_count = j.at("partition_count").get<int>();
    if (j.contains("trunk")) {
        g.trunk_a = j["trunk"].at(0).get<int>();
        g.trunk_b = j["trunk"].at(1).get<int>();
    }
    if (j.contains("mid_pelvis")) g.mid_pelvis = j["mid_pelvis"].get<int>();
    g.validate();
    return g;
}

}  // namespace

void save_manifest(const DatasetManifest& m, const std::string& path) {
    json j;
    j["format"] = "xgcn-dataset-v1";
    j["seed"] = m.seed;
    j["graph"] = graph_to_json(m.graph);
    j["entries"] = json::array();
    for (const auto& e : m.entries)
        j["entries"].push_back({{"path", e.path},
                                {"label", e.label},
                                {"subject_id", e.subject_id},
                                {"split", e.split}});
    json actives = json::object();
    for (const auto& [cls, keys] : m.active_keypoints) actives[std::to_string(cls)] = keys;
    j["active_keypoints"] = actives;
    write_file(path, j.dump(2) + "\n");
}

DatasetManifest load_manifest(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw DataError(path + ": invalid manifest JSON: " + e.what());
    }
    DatasetManifest m;
    if (j.value("format", "") != "xgcn-dataset-v1")
        throw DataError(path + ": unknown manifest format");
    m.seed = j.at("seed").get<std::uint64_t>();
    m.graph = graph_from_json(j.at("graph"));
    for (const auto& e : j.at("entries")) {
        ManifestEntry me;
        me.path = e.at("path").get<std::string>();
        me.label = e.at("label").get<int>();
        me.subject_id = e.at("subject_id").get<std::string>();
        me.split = e.at("split").get<std::string>();
        if (me.split != "train" && me.split != "val")
            throw DataError(path + ": bad split '" + me.split + "'");
        m.entries.push_back(std::move(me));
    }
    if (j.contains("active_keypoints"))
        for (const auto& [key, keys] : j["active_keypoints"].items())
            m.active_keypoints[std::stoi(key)] = keys.get<std::vector<int>>();
    return m;
}

std::string save_dataset(const SyntheticDataset& ds, std::uint64_t seed, const std::string& dir) {
    fs::create_directories(dir);
    DatasetManifest m;
    m.graph = ds.graph;
    m.seed = seed;
    m.active_keypoints = ds.active_keypoints;
    for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
        const auto& seq = ds.sequences[i];
        char name[64];
        std::snprintf(name, sizeof(name), "seq_%04zu.xgs", i);
        save_sequence(seq, (fs::path(dir) / name).string());
        m.entries.push_back({name, seq.label, seq.subject_id, ds.splits[i]});
    }
    const std::string manifest_path = (fs::path(dir) / "manifest.json").string();
    save_manifest(m, manifest_path);
    return manifest_path;
}

LoadedDataset load_dataset(const std::string& manifest_path) {
    LoadedDataset out;
    out.manifest = load_manifest(manifest_path);
    const fs::path base = fs::path(manifest_path).parent_path();
    for (const auto& e : out.manifest.entries) {
        const std::string p = (base / e.path).string();
        if (!fs::exists(p)) throw DataError("manifest references missing file: " + p);
        SkeletonSequence seq = load_sequence(p);
        seq.subject_id = e.subject_id;
        if (seq.label != e.label)
            throw DataError(p + ": label disagrees with manifest entry");
        out.sequences.push_back(std::move(seq));
    }
    return out;
}

}  // namespace xgcn
