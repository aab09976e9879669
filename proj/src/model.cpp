#include "xgcn/model.hpp"

#include <cmath>
#include <cstring>

#include "xgcn/errors.hpp"
#include "xgcn/rng.hpp"

namespace xgcn {

namespace {

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// Sharpened softplus log(1 + e^(bx)) / b. At b = 6 it tracks ReLU closely at
// unit activation scale but stays smooth, which the derivative checks need.
constexpr double kSoftplusBeta = 6.0;

double softplus(double x) {
    const double b = kSoftplusBeta * x;
    return (std::max(b, 0.0) + std::log1p(std::exp(-std::abs(b)))) / kSoftplusBeta;
}

double softplus_grad(double pre) { return sigmoid(kSoftplusBeta * pre); }

void resize(Tensor3& t, int c, int tt, int v) {
    if (t.c != c || t.t != tt || t.v != v) t = Tensor3(c, tt, v);
    else t.fill(0.0);
}

}  // namespace

AttentionMode attention_mode_from_string(const std::string& s) {
    if (s == "joint") return AttentionMode::kJoint;
    if (s == "frame") return AttentionMode::kFrame;
    throw UsageError("unknown attention mode: " + s);
}

std::string to_string(AttentionMode m) {
    return m == AttentionMode::kJoint ? "joint" : "frame";
}

// ---------------------------------------------------------------------------
// Layer ids
// ---------------------------------------------------------------------------

static const char* kPartNames[5] = {"j", "v", "b", "a", "main"};
static const char* kStageNames[3] = {"input", "tcn", "attention"};

LayerId parse_layer_id(const std::string& name) {
    const auto slash = name.find('/');
    if (slash == std::string::npos) throw UsageError("bad layer id: " + name);
    const std::string part = name.substr(0, slash);
    const std::string stage = name.substr(slash + 1);
    LayerId id;
    id.part = -1;
    for (int p = 0; p < 5; ++p)
        if (part == kPartNames[p]) id.part = p;
    id.stage = -1;
    for (int s = 0; s < 3; ++s)
        if (stage == kStageNames[s]) id.stage = s;
    if (id.part < 0 || id.stage < 0) throw UsageError("bad layer id: " + name);
    return id;
}

std::string layer_id_name(const LayerId& id) {
    return std::string(kPartNames[id.part]) + "/" + kStageNames[id.stage];
}

std::vector<std::string> capturable_layers() {
    std::vector<std::string> out;
    for (int p = 0; p < 5; ++p)
        for (int s = 0; s < 3; ++s) out.push_back(layer_id_name({p, s}));
    return out;
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

namespace {

GraphConvLayer make_gconv(int in_ch, int out_ch, int partitions, int num_keypoints, Rng& rng) {
    GraphConvLayer g;
    g.in_channels = in_ch;
    g.out_channels = out_ch;
    g.partitions = partitions;
    // roughly unit-gain through the normalized adjacency at init
    const double a = std::sqrt(6.0 / (in_ch * partitions));
    for (int j = 0; j < partitions; ++j) {
        std::vector<double> w(static_cast<std::size_t>(out_ch) * in_ch);
        for (double& x : w) x = rng.uniform(-a, a);
        g.weights.push_back(std::move(w));
        g.edge_importance.emplace_back(num_keypoints, 1.0);
    }
    return g;
}

TcnLayer make_tcn(int in_ch, int out_ch, int kernel, Rng& rng) {
    if (kernel < 1 || kernel % 2 == 0) throw UsageError("tcn kernel must be odd");
    TcnLayer t;
    t.in_channels = in_ch;
    t.out_channels = out_ch;
    t.kernel = kernel;
    const double a = std::sqrt(6.0 / (in_ch * kernel));
    t.kernel_w.resize(static_cast<std::size_t>(out_ch) * in_ch * kernel);
    for (double& x : t.kernel_w) x = rng.uniform(-a, a);
    t.bias.assign(out_ch, 0.0);
    return t;
}

AttentionLayer make_attention(AttentionMode mode, int num_keypoints, int frame_length, Rng& rng) {
    AttentionLayer a;
    a.mode = mode;
    const int len = mode == AttentionMode::kJoint ? num_keypoints : frame_length;
    if (len <= 0)
        throw UsageError("frame attention requires a positive frame_length in the model config");
    a.proj.resize(len);
    for (double& x : a.proj) x = rng.uniform(-0.2, 0.2);
    return a;
}

}  // namespace

GcnModel make_model(const ModelConfig& config, const KeypointGraph& graph, std::uint64_t seed) {
    graph.validate();
    if (config.num_classes < 2) throw UsageError("model needs at least 2 classes");
    if (config.in_channels != 2 && config.in_channels != 3)
        throw UsageError("model in_channels must be 2 or 3");
    if (config.branch_channels < 1 || config.main_channels < 1)
        throw UsageError("channel counts must be positive");

    GcnModel m;
    m.config = config;
    m.graph = graph;
    m.adj = normalize_adjacency(graph, config.strategy);
    const int P = static_cast<int>(m.adj.partitions.size());
    const int V = graph.num_keypoints;

    Rng rng(mix_seed(seed, 0xA11CE));
    for (int p = 0; p < 4; ++p) {
        m.branches[p].gconv = make_gconv(config.in_channels, config.branch_channels, P, V, rng);
        m.branches[p].tcn =
            make_tcn(config.branch_channels, config.branch_channels, config.tcn_kernel, rng);
        m.branches[p].att =
            make_attention(config.branch_attention[p], V, config.frame_length, rng);
    }
    m.main.gconv = make_gconv(4 * config.branch_channels, config.main_channels, P, V, rng);
    m.main.tcn = make_tcn(config.main_channels, config.main_channels, config.tcn_kernel, rng);
    m.main.att = make_attention(config.main_attention, V, config.frame_length, rng);

    // Zero classifier start: the first gradient steps then align each row
    // with its class-conditional feature mean instead of chasing noise.
    m.classifier_w.assign(static_cast<std::size_t>(config.num_classes) * config.main_channels,
                          0.0);
    m.classifier_b.assign(config.num_classes, 0.0);
    return m;
}

// ---------------------------------------------------------------------------
// Forward stages
// ---------------------------------------------------------------------------

namespace {

void validate_streams(const GcnModel& model, const FeatureStreams& streams) {
    const Tensor3& j = streams.j;
    if (j.c != model.config.in_channels)
        throw DataError("streams have " + std::to_string(j.c) + " channels, model expects " +
                        std::to_string(model.config.in_channels));
    if (j.v != model.graph.num_keypoints)
        throw DataError("streams have " + std::to_string(j.v) + " keypoints, graph has " +
                        std::to_string(model.graph.num_keypoints));
    if (j.t < 1) throw DataError("streams have no frames");
    for (int s = 1; s < 4; ++s)
        if (!streams.stream(s).same_shape(j))
            throw DataError("feature streams disagree in shape");
}

void gconv_forward(const GraphConvLayer& layer, const NormalizedAdjacency& adj,
                   const Tensor3& in, std::vector<Tensor3>& raw_agg, Tensor3& out) {
    const int T = in.t, V = in.v, Ci = layer.in_channels, Co = layer.out_channels;
    if (in.c != Ci) throw DataError("graph conv input channel mismatch");
    const int P = layer.partitions;
    if (static_cast<int>(adj.partitions.size()) != P)
        throw DataError("graph conv partition count mismatch");

    raw_agg.resize(P);
    resize(out, Co, T, V);
    for (int j = 0; j < P; ++j) {
        Tensor3& raw = raw_agg[j];
        resize(raw, Ci, T, V);
        const MatV& a = adj.partitions[j];
        for (int i = 0; i < Ci; ++i)
            for (int t = 0; t < T; ++t) {
                double* dst = &raw.at(i, t, 0);
                for (int u = 0; u < V; ++u) {
                    const double x = in.at(i, t, u);
                    if (x == 0.0) continue;
                    const double* row = &a.data[static_cast<std::size_t>(u) * V];
                    for (int w = 0; w < V; ++w) dst[w] += x * row[w];
                }
            }

        const std::vector<double>& e = layer.edge_importance[j];
        for (int o = 0; o < Co; ++o)
            for (int i = 0; i < Ci; ++i) {
                const double wji = layer.w(j, o, i);
                if (wji == 0.0) continue;
                for (int t = 0; t < T; ++t) {
                    double* dst = &out.at(o, t, 0);
                    const double* src = &raw.at(i, t, 0);
                    for (int w = 0; w < V; ++w) dst[w] += wji * src[w] * e[w];
                }
            }
    }
}

void tcn_forward(const TcnLayer& layer, const Tensor3& in, Tensor3& pre, Tensor3& out) {
    const int T = in.t, V = in.v, Ci = layer.in_channels, Co = layer.out_channels;
    if (in.c != Ci) throw DataError("tcn input channel mismatch");
    const int h = layer.kernel / 2;

    resize(pre, Co, T, V);
    for (int o = 0; o < Co; ++o) {
        for (int t = 0; t < T; ++t)
            for (int v = 0; v < V; ++v) pre.at(o, t, v) = layer.bias[o];
        for (int i = 0; i < Ci; ++i)
            for (int d = 0; d < layer.kernel; ++d) {
                const double kv = layer.k(o, i, d);
                if (kv == 0.0) continue;
                const int shift = d - h;
                const int t0 = std::max(0, -shift);
                const int t1 = std::min(T, T - shift);
                for (int t = t0; t < t1; ++t) {
                    double* dst = &pre.at(o, t, 0);
                    const double* src = &in.at(i, t + shift, 0);
                    for (int v = 0; v < V; ++v) dst[v] += kv * src[v];
                }
            }
    }
    resize(out, Co, T, V);
    for (std::size_t n = 0; n < pre.size(); ++n) out.data[n] = softplus(pre.data[n]);
}

void att_forward(const AttentionLayer& layer, const Tensor3& in, std::vector<double>& pool,
                 std::vector<double>& gate, Tensor3& out) {
    const int C = in.c, T = in.t, V = in.v;
    if (layer.mode == AttentionMode::kJoint) {
        if (static_cast<int>(layer.proj.size()) != V)
            throw DataError("joint attention projection length mismatch");
        pool.assign(V, 0.0);
        for (int i = 0; i < C; ++i)
            for (int t = 0; t < T; ++t)
                for (int v = 0; v < V; ++v) pool[v] += in.at(i, t, v);
        const double inv = 1.0 / (static_cast<double>(C) * T);
        gate.resize(V);
        for (int v = 0; v < V; ++v) {
            pool[v] *= inv;
            gate[v] = sigmoid(layer.proj[v] * pool[v]);
        }
        resize(out, C, T, V);
        for (int i = 0; i < C; ++i)
            for (int t = 0; t < T; ++t)
                for (int v = 0; v < V; ++v) out.at(i, t, v) = in.at(i, t, v) * gate[v];
    } else {
        if (static_cast<int>(layer.proj.size()) != T)
            throw DataError("frame attention projection length " +
                            std::to_string(layer.proj.size()) + " does not match " +
                            std::to_string(T) + " frames");
        pool.assign(T, 0.0);
        for (int i = 0; i < C; ++i)
            for (int t = 0; t < T; ++t)
                for (int v = 0; v < V; ++v) pool[t] += in.at(i, t, v);
        const double inv = 1.0 / (static_cast<double>(C) * V);
        gate.resize(T);
        for (int t = 0; t < T; ++t) {
            pool[t] *= inv;
            gate[t] = sigmoid(layer.proj[t] * pool[t]);
        }
        resize(out, C, T, V);
        for (int i = 0; i < C; ++i)
            for (int t = 0; t < T; ++t) {
                const double g = gate[t];
                for (int v = 0; v < V; ++v) out.at(i, t, v) = in.at(i, t, v) * g;
            }
    }
}

void apply_override(Tensor3& target, const Tensor3& injected) {
    if (!target.same_shape(injected))
        throw std::invalid_argument("injected activation has wrong shape");
    target = injected;
}

void forward_impl(const GcnModel& model, const FeatureStreams& streams, ForwardTrace& tr,
                  const LayerId* override_id, const Tensor3* override_val) {
    validate_streams(model, streams);
    const int T = streams.j.t;
    const int V = model.graph.num_keypoints;
    const int Cb = model.config.branch_channels;

    for (int p = 0; p < 4; ++p) {
        const BranchBlock& blk = model.branches[p];
        ForwardTrace::Block& tb = tr.branch[p];
        gconv_forward(blk.gconv, model.adj, streams.stream(p), tb.raw_agg, tb.gconv_out);
        if (override_id && override_id->part == p && override_id->stage == 0)
            apply_override(tb.gconv_out, *override_val);
        tcn_forward(blk.tcn, tb.gconv_out, tb.tcn_pre, tb.tcn_out);
        if (override_id && override_id->part == p && override_id->stage == 1)
            apply_override(tb.tcn_out, *override_val);
        att_forward(blk.att, tb.tcn_out, tb.att_pool, tb.att_gate, tb.att_out);
        if (override_id && override_id->part == p && override_id->stage == 2)
            apply_override(tb.att_out, *override_val);
    }

    resize(tr.fused, 4 * Cb, T, V);
    for (int p = 0; p < 4; ++p) {
        const Tensor3& src = tr.branch[p].att_out;
        std::memcpy(&tr.fused.at(p * Cb, 0, 0), src.data.data(), src.size() * sizeof(double));
    }

    gconv_forward(model.main.gconv, model.adj, tr.fused, tr.main.raw_agg, tr.main.gconv_out);
    if (override_id && override_id->part == 4 && override_id->stage == 0)
        apply_override(tr.main.gconv_out, *override_val);
    tcn_forward(model.main.tcn, tr.main.gconv_out, tr.main.tcn_pre, tr.main.tcn_out);
    if (override_id && override_id->part == 4 && override_id->stage == 1)
        apply_override(tr.main.tcn_out, *override_val);
    att_forward(model.main.att, tr.main.tcn_out, tr.main.att_pool, tr.main.att_gate,
                tr.main.att_out);
    if (override_id && override_id->part == 4 && override_id->stage == 2)
        apply_override(tr.main.att_out, *override_val);

    const int Cm = model.config.main_channels;
    tr.pooled.assign(Cm, 0.0);
    const double inv = 1.0 / (static_cast<double>(T) * V);
    for (int k = 0; k < Cm; ++k) {
        double acc = 0.0;
        for (int t = 0; t < T; ++t)
            for (int v = 0; v < V; ++v) acc += tr.main.att_out.at(k, t, v);
        tr.pooled[k] = acc * inv;
    }

    const int nc = model.config.num_classes;
    tr.logits.assign(nc, 0.0);
    for (int c = 0; c < nc; ++c) {
        double acc = model.classifier_b[c];
        for (int k = 0; k < Cm; ++k)
            acc += model.classifier_w[static_cast<std::size_t>(c) * Cm + k] * tr.pooled[k];
        tr.logits[c] = acc;
    }
}

const Tensor3& stage_output(const ForwardTrace& tr, const LayerId& id) {
    const ForwardTrace::Block& b = id.part == 4 ? tr.main : tr.branch[id.part];
    switch (id.stage) {
        case 0: return b.gconv_out;
        case 1: return b.tcn_out;
        default: return b.att_out;
    }
}

}  // namespace

Tensor3 graph_conv_forward(const GraphConvLayer& layer, const NormalizedAdjacency& adj,
                           const Tensor3& in) {
    std::vector<Tensor3> raw_agg;
    Tensor3 out;
    gconv_forward(layer, adj, in, raw_agg, out);
    return out;
}

std::vector<double> forward_logits(const GcnModel& model, const FeatureStreams& streams,
                                   ForwardTrace& trace) {
    forward_impl(model, streams, trace, nullptr, nullptr);
    return trace.logits;
}

std::vector<double> forward_logits(const GcnModel& model, const FeatureStreams& streams) {
    ForwardTrace tr;
    return forward_logits(model, streams, tr);
}

ForwardResult forward(const GcnModel& model, const FeatureStreams& streams,
                      const std::vector<std::string>& capture) {
    std::vector<LayerId> ids;
    for (const auto& name : capture) ids.push_back(parse_layer_id(name));

    ForwardResult res;
    ForwardTrace tr;
    forward_impl(model, streams, tr, nullptr, nullptr);
    res.logits = tr.logits;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        CaptureRecord rec;
        rec.layer = ids[i];
        rec.layer_name = capture[i];
        rec.activations = stage_output(tr, ids[i]);
        res.records.push_back(std::move(rec));
    }
    return res;
}

std::vector<double> forward_from(const GcnModel& model, const FeatureStreams& streams,
                                 const std::string& layer_name, const Tensor3& injected) {
    const LayerId id = parse_layer_id(layer_name);
    ForwardTrace tr;
    forward_impl(model, streams, tr, &id, &injected);
    return tr.logits;
}

int predict_class(const GcnModel& model, const FeatureStreams& streams) {
    const std::vector<double> logits = forward_logits(model, streams);
    int best = 0;
    for (std::size_t c = 1; c < logits.size(); ++c)
        if (logits[c] > logits[best]) best = static_cast<int>(c);
    return best;
}

// ---------------------------------------------------------------------------
// Backward stages
// ---------------------------------------------------------------------------

namespace {

Tensor3 att_backward(const AttentionLayer& layer, const ForwardTrace::Block& tb,
                     const Tensor3& d_out, std::vector<double>* d_proj) {
    const Tensor3& r = tb.tcn_out;
    const int C = r.c, T = r.t, V = r.v;
    Tensor3 d_in(C, T, V);

    if (layer.mode == AttentionMode::kJoint) {
        const double inv = 1.0 / (static_cast<double>(C) * T);
        for (int v = 0; v < V; ++v) {
            double dg = 0.0;
            for (int i = 0; i < C; ++i)
                for (int t = 0; t < T; ++t) dg += d_out.at(i, t, v) * r.at(i, t, v);
            const double g = tb.att_gate[v];
            const double s = dg * g * (1.0 - g);
            const double via_pool = s * layer.proj[v] * inv;
            for (int i = 0; i < C; ++i)
                for (int t = 0; t < T; ++t)
                    d_in.at(i, t, v) = d_out.at(i, t, v) * g + via_pool;
            if (d_proj) (*d_proj)[v] += s * tb.att_pool[v];
        }
    } else {
        const double inv = 1.0 / (static_cast<double>(C) * V);
        for (int t = 0; t < T; ++t) {
            double dg = 0.0;
            for (int i = 0; i < C; ++i)
                for (int v = 0; v < V; ++v) dg += d_out.at(i, t, v) * r.at(i, t, v);
            const double g = tb.att_gate[t];
            const double s = dg * g * (1.0 - g);
            const double via_pool = s * layer.proj[t] * inv;
            for (int i = 0; i < C; ++i)
                for (int v = 0; v < V; ++v)
                    d_in.at(i, t, v) = d_out.at(i, t, v) * g + via_pool;
            if (d_proj) (*d_proj)[t] += s * tb.att_pool[t];
        }
    }
    return d_in;
}

Tensor3 tcn_backward(const TcnLayer& layer, const Tensor3& in, const ForwardTrace::Block& tb,
                     const Tensor3& d_out, std::vector<double>* d_kernel,
                     std::vector<double>* d_bias) {
    const int T = in.t, V = in.v, Ci = layer.in_channels, Co = layer.out_channels;
    const int h = layer.kernel / 2;

    Tensor3 d_pre(Co, T, V);
    for (int o = 0; o < Co; ++o)
        for (int t = 0; t < T; ++t)
            for (int v = 0; v < V; ++v)
                d_pre.at(o, t, v) = d_out.at(o, t, v) * softplus_grad(tb.tcn_pre.at(o, t, v));

    Tensor3 d_in(Ci, T, V);
    for (int o = 0; o < Co; ++o) {
        if (d_bias) {
            double acc = 0.0;
            for (int t = 0; t < T; ++t)
                for (int v = 0; v < V; ++v) acc += d_pre.at(o, t, v);
            (*d_bias)[o] += acc;
        }
        for (int i = 0; i < Ci; ++i)
            for (int d = 0; d < layer.kernel; ++d) {
                const double kv = layer.k(o, i, d);
                const int shift = d - h;
                const int t0 = std::max(0, -shift);
                const int t1 = std::min(T, T - shift);
                double dk = 0.0;
                for (int t = t0; t < t1; ++t) {
                    const double* dp = &d_pre.at(o, t, 0);
                    const double* src = &in.at(i, t + shift, 0);
                    double* di = &d_in.at(i, t + shift, 0);
                    for (int v = 0; v < V; ++v) {
                        di[v] += kv * dp[v];
                        dk += dp[v] * src[v];
                    }
                }
                if (d_kernel)
                    (*d_kernel)[(static_cast<std::size_t>(o) * Ci + i) * layer.kernel + d] += dk;
            }
    }
    return d_in;
}

Tensor3 gconv_backward(const GraphConvLayer& layer, const NormalizedAdjacency& adj,
                       const std::vector<Tensor3>& raw_agg, const Tensor3& d_out,
                       std::vector<std::vector<double>>* d_weights,
                       std::vector<std::vector<double>>* d_edge, bool want_d_in) {
    const int T = d_out.t, V = d_out.v, Ci = layer.in_channels, Co = layer.out_channels;
    const int P = layer.partitions;

    Tensor3 d_in(want_d_in ? Ci : 0, want_d_in ? T : 0, want_d_in ? V : 0);
    Tensor3 tmp;
    for (int j = 0; j < P; ++j) {
        const std::vector<double>& e = layer.edge_importance[j];
        const Tensor3& raw = raw_agg[j];

        if (d_weights) {
            for (int o = 0; o < Co; ++o)
                for (int i = 0; i < Ci; ++i) {
                    double acc = 0.0;
                    for (int t = 0; t < T; ++t) {
                        const double* dp = &d_out.at(o, t, 0);
                        const double* rp = &raw.at(i, t, 0);
                        for (int w = 0; w < V; ++w) acc += dp[w] * rp[w] * e[w];
                    }
                    (*d_weights)[j][static_cast<std::size_t>(o) * Ci + i] += acc;
                }
        }

        if (d_edge) {
            for (int o = 0; o < Co; ++o)
                for (int i = 0; i < Ci; ++i) {
                    const double wji = layer.w(j, o, i);
                    if (wji == 0.0) continue;
                    for (int t = 0; t < T; ++t) {
                        const double* dp = &d_out.at(o, t, 0);
                        const double* rp = &raw.at(i, t, 0);
                        for (int w = 0; w < V; ++w)
                            (*d_edge)[j][w] += wji * dp[w] * rp[w];
                    }
                }
        }

        if (want_d_in) {
            resize(tmp, Ci, T, V);
            for (int o = 0; o < Co; ++o)
                for (int i = 0; i < Ci; ++i) {
                    const double wji = layer.w(j, o, i);
                    if (wji == 0.0) continue;
                    for (int t = 0; t < T; ++t) {
                        double* dst = &tmp.at(i, t, 0);
                        const double* dp = &d_out.at(o, t, 0);
                        for (int w = 0; w < V; ++w) dst[w] += wji * dp[w];
                    }
                }
            const MatV& a = adj.partitions[j];
            for (int i = 0; i < Ci; ++i)
                for (int t = 0; t < T; ++t) {
                    const double* tp = &tmp.at(i, t, 0);
                    for (int u = 0; u < V; ++u) {
                        const double* row = &a.data[static_cast<std::size_t>(u) * V];
                        double acc = 0.0;
                        for (int w = 0; w < V; ++w) acc += tp[w] * e[w] * row[w];
                        d_in.at(i, t, u) += acc;
                    }
                }
        }
    }
    return d_in;
}

// Reverse traversal from the logits. With `stop` set, returns the gradient at
// that stage's output and touches nothing else; with `grads` set, accumulates
// parameter gradients for the whole model.
Tensor3 reverse_pass(const GcnModel& model, const FeatureStreams& streams,
                     const ForwardTrace& tr, const std::vector<double>& dlogits,
                     const LayerId* stop, ModelGradients* grads) {
    const int T = streams.j.t;
    const int V = model.graph.num_keypoints;
    const int Cb = model.config.branch_channels;
    const int Cm = model.config.main_channels;
    const int nc = model.config.num_classes;

    std::vector<double> dz(Cm, 0.0);
    for (int c = 0; c < nc; ++c) {
        const double dl = dlogits[c];
        if (dl == 0.0 && !grads) continue;
        for (int k = 0; k < Cm; ++k)
            dz[k] += dl * model.classifier_w[static_cast<std::size_t>(c) * Cm + k];
        if (grads) {
            for (int k = 0; k < Cm; ++k)
                grads->classifier_w[static_cast<std::size_t>(c) * Cm + k] += dl * tr.pooled[k];
            grads->classifier_b[c] += dl;
        }
    }

    Tensor3 d_main_att(Cm, T, V);
    const double inv_pool = 1.0 / (static_cast<double>(T) * V);
    for (int k = 0; k < Cm; ++k) {
        const double g = dz[k] * inv_pool;
        for (int t = 0; t < T; ++t)
            for (int v = 0; v < V; ++v) d_main_att.at(k, t, v) = g;
    }
    if (stop && stop->part == 4 && stop->stage == 2) return d_main_att;

    Tensor3 d_main_tcn = att_backward(model.main.att, tr.main, d_main_att,
                                      grads ? &grads->main.att_proj : nullptr);
    if (stop && stop->part == 4 && stop->stage == 1) return d_main_tcn;

    Tensor3 d_main_gconv =
        tcn_backward(model.main.tcn, tr.main.gconv_out, tr.main, d_main_tcn,
                     grads ? &grads->main.tcn_kernel : nullptr,
                     grads ? &grads->main.tcn_bias : nullptr);
    if (stop && stop->part == 4 && stop->stage == 0) return d_main_gconv;

    Tensor3 d_fused = gconv_backward(model.main.gconv, model.adj, tr.main.raw_agg, d_main_gconv,
                                     grads ? &grads->main.gconv_w : nullptr,
                                     grads ? &grads->main.edge_importance : nullptr, true);

    for (int p = 0; p < 4; ++p) {
        if (stop && stop->part != p) continue;

        Tensor3 d_att_out(Cb, T, V);
        std::memcpy(d_att_out.data.data(), &d_fused.at(p * Cb, 0, 0),
                    d_att_out.size() * sizeof(double));
        if (stop && stop->stage == 2) return d_att_out;

        const BranchBlock& blk = model.branches[p];
        ModelGradients::Block* gb = grads ? &grads->branch[p] : nullptr;
        Tensor3 d_tcn_out = att_backward(blk.att, tr.branch[p], d_att_out,
                                         gb ? &gb->att_proj : nullptr);
        if (stop && stop->stage == 1) return d_tcn_out;

        Tensor3 d_gconv_out =
            tcn_backward(blk.tcn, tr.branch[p].gconv_out, tr.branch[p], d_tcn_out,
                         gb ? &gb->tcn_kernel : nullptr, gb ? &gb->tcn_bias : nullptr);
        if (stop && stop->stage == 0) return d_gconv_out;

        if (grads)
            gconv_backward(blk.gconv, model.adj, tr.branch[p].raw_agg, d_gconv_out,
                           &gb->gconv_w, &gb->edge_importance, false);
    }
    return {};
}

}  // namespace

CaptureRecord backward_to_layer(const GcnModel& model, const FeatureStreams& streams,
                                int class_index, const std::string& layer_name) {
    const LayerId id = parse_layer_id(layer_name);
    if (class_index < 0 || class_index >= model.config.num_classes)
        throw std::invalid_argument("class index out of range");

    ForwardTrace tr;
    forward_impl(model, streams, tr, nullptr, nullptr);

    std::vector<double> dlogits(model.config.num_classes, 0.0);
    dlogits[class_index] = 1.0;

    CaptureRecord rec;
    rec.layer = id;
    rec.layer_name = layer_name;
    rec.class_index = class_index;
    rec.activations = stage_output(tr, id);
    rec.gradients = reverse_pass(model, streams, tr, dlogits, &id, nullptr);
    return rec;
}

ModelGradients zero_gradients(const GcnModel& model) {
    ModelGradients g;
    auto make_block = [&](const BranchBlock& blk) {
        ModelGradients::Block b;
        for (int j = 0; j < blk.gconv.partitions; ++j) {
            b.gconv_w.emplace_back(blk.gconv.weights[j].size(), 0.0);
            b.edge_importance.emplace_back(blk.gconv.edge_importance[j].size(), 0.0);
        }
        b.tcn_kernel.assign(blk.tcn.kernel_w.size(), 0.0);
        b.tcn_bias.assign(blk.tcn.bias.size(), 0.0);
        b.att_proj.assign(blk.att.proj.size(), 0.0);
        return b;
    };
    for (int p = 0; p < 4; ++p) g.branch[p] = make_block(model.branches[p]);
    g.main = make_block(model.main);
    g.classifier_w.assign(model.classifier_w.size(), 0.0);
    g.classifier_b.assign(model.classifier_b.size(), 0.0);
    return g;
}

std::vector<std::vector<double>*> gradient_tensors(ModelGradients& grads) {
    std::vector<std::vector<double>*> out;
    auto add_block = [&](ModelGradients::Block& b) {
        for (std::size_t j = 0; j < b.gconv_w.size(); ++j) {
            out.push_back(&b.gconv_w[j]);
            out.push_back(&b.edge_importance[j]);
        }
        out.push_back(&b.tcn_kernel);
        out.push_back(&b.tcn_bias);
        out.push_back(&b.att_proj);
    };
    for (int p = 0; p < 4; ++p) add_block(grads.branch[p]);
    add_block(grads.main);
    out.push_back(&grads.classifier_w);
    out.push_back(&grads.classifier_b);
    return out;
}

void backward_params(const GcnModel& model, const FeatureStreams& streams,
                     const ForwardTrace& trace, const std::vector<double>& dlogits,
                     ModelGradients& grads) {
    reverse_pass(model, streams, trace, dlogits, nullptr, &grads);
}

void apply_gradients(GcnModel& model, const ModelGradients& grads, double lr, double scale) {
    const double step = lr * scale;
    auto upd = [&](std::vector<double>& p, const std::vector<double>& g) {
        for (std::size_t i = 0; i < p.size(); ++i) p[i] -= step * g[i];
    };
    for (int p = 0; p < 4; ++p) {
        BranchBlock& blk = model.branches[p];
        const ModelGradients::Block& gb = grads.branch[p];
        for (int j = 0; j < blk.gconv.partitions; ++j) {
            upd(blk.gconv.weights[j], gb.gconv_w[j]);
            upd(blk.gconv.edge_importance[j], gb.edge_importance[j]);
        }
        upd(blk.tcn.kernel_w, gb.tcn_kernel);
        upd(blk.tcn.bias, gb.tcn_bias);
        upd(blk.att.proj, gb.att_proj);
    }
    for (int j = 0; j < model.main.gconv.partitions; ++j) {
        upd(model.main.gconv.weights[j], grads.main.gconv_w[j]);
        upd(model.main.gconv.edge_importance[j], grads.main.edge_importance[j]);
    }
    upd(model.main.tcn.kernel_w, grads.main.tcn_kernel);
    upd(model.main.tcn.bias, grads.main.tcn_bias);
    upd(model.main.att.proj, grads.main.att_proj);
    upd(model.classifier_w, grads.classifier_w);
    upd(model.classifier_b, grads.classifier_b);
}

std::vector<NamedTensor> named_tensors(GcnModel& model) {
    std::vector<NamedTensor> out;
    auto add_block = [&](const std::string& prefix, BranchBlock& blk) {
        const auto co = static_cast<std::size_t>(blk.gconv.out_channels);
        const auto ci = static_cast<std::size_t>(blk.gconv.in_channels);
        for (int j = 0; j < blk.gconv.partitions; ++j) {
            out.push_back({prefix + ".gconv.w" + std::to_string(j), {co, ci},
                           &blk.gconv.weights[j]});
            out.push_back({prefix + ".gconv.e" + std::to_string(j),
                           {blk.gconv.edge_importance[j].size()},
                           &blk.gconv.edge_importance[j]});
        }
        out.push_back({prefix + ".tcn.kernel",
                       {static_cast<std::size_t>(blk.tcn.out_channels),
                        static_cast<std::size_t>(blk.tcn.in_channels),
                        static_cast<std::size_t>(blk.tcn.kernel)},
                       &blk.tcn.kernel_w});
        out.push_back({prefix + ".tcn.bias", {blk.tcn.bias.size()}, &blk.tcn.bias});
        out.push_back({prefix + ".att.proj", {blk.att.proj.size()}, &blk.att.proj});
    };
    for (int p = 0; p < 4; ++p)
        add_block(std::string("branch.") + kPartNames[p], model.branches[p]);
    add_block("main", model.main);
    out.push_back({"classifier.w",
                   {static_cast<std::size_t>(model.config.num_classes),
                    static_cast<std::size_t>(model.config.main_channels)},
                   &model.classifier_w});
    out.push_back({"classifier.b", {model.classifier_b.size()}, &model.classifier_b});
    return out;
}

}  // namespace xgcn
