#pragma once
// The learned registration blocks: dynamic-graph edge convolution features,
// cross-attention conditioning, soft matching, virtual corresponding points,
// the correction-walk offset MLP, and the assembled forward pass ending in a
// differentiable rigid solve.

#include <map>

#include "vrnet/autodiff.hpp"
#include "vrnet/matching.hpp"

namespace vrnet {

struct ModelConfig {
    std::vector<int> filters = {16, 16, 32, 32, 64};  // edge-conv widths
    int knn_k = 10;
    int heads = 2;
    int encoder_layers = 1;
    int decoder_layers = 1;
    std::vector<int> walk = {64, 32, 16, 3};  // correction-walk widths, last = 3
    bool edge_concat_diff = false;  // concat (F_i, F_ik - F_i) instead of (F_i, F_ik)

    int feature_dim() const { return filters.back(); }
    void validate() const;

    static ModelConfig desk() { return {}; }
    static ModelConfig paper() {
        ModelConfig c;
        c.filters = {64, 64, 128, 256, 512};
        c.knn_k = 20;
        c.heads = 4;
        c.walk = {512, 256, 512, 256, 128, 16, 3};
        return c;
    }
};

// Creates every model parameter in the store. Weights and biases are uniform
// in [-1/sqrt(fan_in), +1/sqrt(fan_in)]; normalization scales are 1, shifts 0.
// Parameter names are prefixed "dgcnn.", "xf." and "walk.".
void init_params(ad::ParamStore& store, const ModelConfig& cfg, Rng& rng);

extern const char* const kExtractorPrefixes[2];  // {"dgcnn.", "xf."}
extern const char* const kWalkPrefix;            // "walk."

// Tape leaves for every parameter; requires_grad decided per name.
struct ParamLeaves {
    std::map<std::string, ad::NodeId> ids;
    ad::NodeId at(const std::string& name) const;
};
ParamLeaves leaves_for(ad::Tape& t, const ad::ParamStore& store,
                       const std::function<bool(const std::string&)>& trainable);

// One edge-convolution layer: per point, concatenate its feature with each of
// its k feature-space nearest neighbors (self excluded), apply the shared
// linear layer + channel norm + relu, then max-pool over the neighbors.
// k is clamped to n - 1 when the cloud is smaller.
ad::NodeId edge_conv(ad::Tape& t, ad::NodeId f, int k, const ParamLeaves& leaves,
                     const std::string& prefix, bool concat_diff);

// Stacked edge convolutions with the kNN graph recomputed in feature space at
// every layer. Input features are the raw coordinates.
ad::NodeId dgcnn_forward(ad::Tape& t, const Mat& coords, const ModelConfig& cfg,
                         const ParamLeaves& leaves);

// phi_x = fx + eta(fx, fy), phi_y = fy + eta(fy, fx), with eta a shared
// pre-norm encoder (self-attention) feeding a pre-norm decoder
// (cross-attention onto the other cloud's encoded features) and a final
// output projection. attn_trace, when given, collects every attention matrix
// node built along the way.
std::pair<ad::NodeId, ad::NodeId> transformer_attend(ad::Tape& t, ad::NodeId fx, ad::NodeId fy,
                                                     const ModelConfig& cfg,
                                                     const ParamLeaves& leaves,
                                                     std::vector<ad::NodeId>* attn_trace = nullptr);

// MLP over the seeds (concatenated source / VCP features), channel norm +
// relu on all but the final width-3 layer.
ad::NodeId correction_walk(ad::Tape& t, ad::NodeId seeds, const ModelConfig& cfg,
                           const ParamLeaves& leaves);

enum class PipelineDepth { kMatching, kFull };

struct PipelineOptions {
    bool use_correction = true;
    PipelineDepth depth = PipelineDepth::kFull;
    std::function<bool(const std::string&)> trainable;  // default: nothing trainable
};

struct PipelineNodes {
    ParamLeaves leaves;
    ad::NodeId fx = -1, fy = -1;
    ad::NodeId phi_x = -1, phi_y = -1;
    ad::NodeId sim = -1, match = -1;
    ad::NodeId vcp = -1, vcp_features = -1;
    ad::NodeId seeds = -1, delta = -1, rcp = -1;
    ad::NodeId pose = -1;  // 3x4 [R | t]
    std::vector<ad::NodeId> attn;
};

// Full forward pass on an existing tape. Throws NumericError naming the stage
// if an intermediate stops being finite.
PipelineNodes build_pipeline(ad::Tape& t, const PointCloud& x, const PointCloud& y,
                             const ad::ParamStore& store, const ModelConfig& cfg,
                             const PipelineOptions& opts = {});

// Same pass over already-created parameter leaves (gradient checking hooks).
PipelineNodes build_pipeline_with_leaves(ad::Tape& t, const PointCloud& x, const PointCloud& y,
                                         ParamLeaves leaves, const ModelConfig& cfg,
                                         const PipelineOptions& opts = {});

struct RegistrationResult {
    RigidTransform transform;
    MatchMatrix match;
    PointCloud vcp;  // virtual corresponding points
    PointCloud rcp;  // rectified virtual corresponding points
    Mat offsets;     // learned per-point walk, Nx3
    std::map<std::string, double> losses;  // diagnostics, filled by callers
};

RegistrationResult vrnet_register(const PointCloud& x, const PointCloud& y,
                                  const ad::ParamStore& store, const ModelConfig& cfg,
                                  bool use_correction = true);

RigidTransform transform_from_pose_mat(const Mat& pose);

}  // namespace vrnet
