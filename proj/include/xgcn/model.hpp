#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "xgcn/adjacency.hpp"
#include "xgcn/graph.hpp"
#include "xgcn/sequence.hpp"
#include "xgcn/tensor.hpp"

namespace xgcn {

// ---------------------------------------------------------------------------
// Layers
// ---------------------------------------------------------------------------

// Partitioned graph convolution:
//   out[o,t,w] = sum_j sum_i W_j[o,i] * sum_u in[i,t,u] * Ahat_j[u,w] * e_j[w]
// where Ahat_j is the normalized adjacency partition and e_j the learnable
// per-keypoint edge importance (diagonal right multiplication, i.e. the
// destination keypoint's column is scaled).
struct GraphConvLayer {
    int in_channels = 0;
    int out_channels = 0;
    int partitions = 0;
    std::vector<std::vector<double>> weights;          // per partition, [C_out x C_in]
    std::vector<std::vector<double>> edge_importance;  // per partition, [V], init 1

    double w(int j, int o, int i) const { return weights[j][o * in_channels + i]; }
    double& w(int j, int o, int i) { return weights[j][o * in_channels + i]; }
};

// Temporal convolution along the frame axis (odd kernel, symmetric zero
// padding, stride 1) followed by a softplus. The smooth activation is what
// lets the stack pick up oscillatory motion; a purely linear path would
// average it away under global pooling.
struct TcnLayer {
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 0;  // odd
    std::vector<double> kernel_w;  // [C_out x C_in x K]
    std::vector<double> bias;      // [C_out]

    double k(int o, int i, int d) const {
        return kernel_w[(o * in_channels + i) * kernel + d];
    }
    double& k(int o, int i, int d) {
        return kernel_w[(o * in_channels + i) * kernel + d];
    }
};

enum class AttentionMode { kJoint, kFrame };

AttentionMode attention_mode_from_string(const std::string& s);
std::string to_string(AttentionMode m);

// Sigmoid gating over keypoints (joint) or frames (frame). The gated axis is
// pooled over the remaining axes and passed through an elementwise learned
// projection; gates multiply the feature map.
struct AttentionLayer {
    AttentionMode mode = AttentionMode::kJoint;
    std::vector<double> proj;  // length V (joint) or fixed frame count (frame)
};

struct BranchBlock {
    GraphConvLayer gconv;
    TcnLayer tcn;
    AttentionLayer att;
};

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

struct ModelConfig {
    int num_classes = 2;
    int in_channels = 2;  // coordinate count of the input streams
    int branch_channels = 4;
    int main_channels = 8;
    int tcn_kernel = 9;
    PartitionStrategy strategy = PartitionStrategy::kStgcn;
    std::array<AttentionMode, 4> branch_attention = {
        AttentionMode::kJoint, AttentionMode::kJoint, AttentionMode::kJoint,
        AttentionMode::kJoint};
    AttentionMode main_attention = AttentionMode::kJoint;
    // Required (positive) when any attention mode is kFrame: frame gates need
    // a fixed temporal length.
    int frame_length = 0;
};

struct GcnModel {
    ModelConfig config;
    KeypointGraph graph;
    NormalizedAdjacency adj;
    std::array<BranchBlock, 4> branches;  // J, V, B, A
    BranchBlock main;
    std::vector<double> classifier_w;  // [num_classes x main_channels]
    std::vector<double> classifier_b;  // [num_classes]
};

GcnModel make_model(const ModelConfig& config, const KeypointGraph& graph, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Layer selectors
// ---------------------------------------------------------------------------

// "<part>/<stage>" with part in {j,v,b,a,main} and stage in
// {input,tcn,attention}; "input" is the graph-convolution output.
struct LayerId {
    int part = 0;   // 0..3 = branches J,V,B,A; 4 = main
    int stage = 0;  // 0 = gconv output, 1 = tcn output, 2 = gated attention output

    bool operator==(const LayerId&) const = default;
};

LayerId parse_layer_id(const std::string& name);
std::string layer_id_name(const LayerId& id);
std::vector<std::string> capturable_layers();

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

// Every intermediate of one forward pass. Buffers are reused across calls
// when the same trace object is passed again.
struct ForwardTrace {
    struct Block {
        std::vector<Tensor3> raw_agg;  // per partition, before edge scaling
        Tensor3 gconv_out;
        Tensor3 tcn_pre;  // conv + bias, before softplus
        Tensor3 tcn_out;
        std::vector<double> att_pool;
        std::vector<double> att_gate;
        Tensor3 att_out;
    };
    std::array<Block, 4> branch;
    Tensor3 fused;
    Block main;
    std::vector<double> pooled;
    std::vector<double> logits;
};

struct CaptureRecord {
    LayerId layer;
    std::string layer_name;
    int class_index = -1;
    Tensor3 activations;
    Tensor3 gradients;
};

// One partitioned graph convolution in isolation.
Tensor3 graph_conv_forward(const GraphConvLayer& layer, const NormalizedAdjacency& adj,
                           const Tensor3& in);

// Plain forward pass; returns pre-softmax logits.
std::vector<double> forward_logits(const GcnModel& model, const FeatureStreams& streams);
std::vector<double> forward_logits(const GcnModel& model, const FeatureStreams& streams,
                                   ForwardTrace& trace);

// Forward pass capturing the requested layers' activations.
struct ForwardResult {
    std::vector<double> logits;
    std::vector<CaptureRecord> records;
};
ForwardResult forward(const GcnModel& model, const FeatureStreams& streams,
                      const std::vector<std::string>& capture);

// Gradient of logits[class_index] with respect to the captured layer's
// activations, by reverse traversal of the stages downstream of it.
CaptureRecord backward_to_layer(const GcnModel& model, const FeatureStreams& streams,
                                int class_index, const std::string& layer_name);

// Forward pass with the named layer's output replaced by `injected`
// (finite-difference probes use this).
std::vector<double> forward_from(const GcnModel& model, const FeatureStreams& streams,
                                 const std::string& layer_name, const Tensor3& injected);

// ---------------------------------------------------------------------------
// Parameter gradients (training)
// ---------------------------------------------------------------------------

struct ModelGradients {
    struct Block {
        std::vector<std::vector<double>> gconv_w;
        std::vector<std::vector<double>> edge_importance;
        std::vector<double> tcn_kernel;
        std::vector<double> tcn_bias;
        std::vector<double> att_proj;
    };
    std::array<Block, 4> branch;
    Block main;
    std::vector<double> classifier_w;
    std::vector<double> classifier_b;
};

ModelGradients zero_gradients(const GcnModel& model);

// Flat view over all gradient buffers, in named_tensors order.
std::vector<std::vector<double>*> gradient_tensors(ModelGradients& grads);

// Accumulates d(dlogits . logits)/d(params) into grads, given the trace of
// the corresponding forward pass.
void backward_params(const GcnModel& model, const FeatureStreams& streams,
                     const ForwardTrace& trace, const std::vector<double>& dlogits,
                     ModelGradients& grads);

void apply_gradients(GcnModel& model, const ModelGradients& grads, double lr, double scale);

// Flat named view over all parameters, in a fixed order (weight files and
// tests rely on it).
struct NamedTensor {
    std::string name;
    std::vector<std::size_t> dims;
    std::vector<double>* data;
};
std::vector<NamedTensor> named_tensors(GcnModel& model);

int predict_class(const GcnModel& model, const FeatureStreams& streams);

}  // namespace xgcn
