#include "vrnet/model.hpp"

#include <cmath>

namespace vrnet {

const char* const kExtractorPrefixes[2] = {"dgcnn.", "xf."};
const char* const kWalkPrefix = "walk.";

void ModelConfig::validate() const {
    if (filters.empty()) throw InputError("ModelConfig: filters must be nonempty");
    if (walk.empty() || walk.back() != 3)
        throw InputError("ModelConfig: last correction-walk width must be 3");
    if (knn_k < 1) throw InputError("ModelConfig: k must be >= 1");
    if (heads < 1 || feature_dim() % heads != 0)
        throw InputError("ModelConfig: heads must divide the feature dimension");
    if (encoder_layers < 1 || decoder_layers < 1)
        throw InputError("ModelConfig: need at least one encoder and one decoder layer");
}

namespace {

Mat uniform_init(int rows, int cols, int fan_in, Rng& rng) {
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Mat m(rows, cols);
    for (double& v : m.a) v = rng.uniform(-bound, bound);
    return m;
}

void add_linear(ad::ParamStore& store, const std::string& prefix, int in, int out, Rng& rng,
                bool bias = true) {
    store.add(prefix + ".weight", uniform_init(in, out, in, rng));
    // A bias feeding straight into channel normalization is cancelled by the
    // mean subtraction, so normalized layers are bias-free.
    if (bias) store.add(prefix + ".bias", uniform_init(1, out, in, rng));
}

void add_norm(ad::ParamStore& store, const std::string& prefix, int width) {
    store.add(prefix + ".gamma", Mat(1, width, 1.0));
    store.add(prefix + ".beta", Mat(1, width, 0.0));
}

void add_attention(ad::ParamStore& store, const std::string& prefix, int c, Rng& rng) {
    add_linear(store, prefix + ".wq", c, c, rng);
    // A key bias shifts every score in a row equally, which the softmax
    // ignores; leave it out.
    add_linear(store, prefix + ".wk", c, c, rng, false);
    add_linear(store, prefix + ".wv", c, c, rng);
    add_linear(store, prefix + ".wo", c, c, rng);
}

void add_block_tail(ad::ParamStore& store, const std::string& prefix, int c, Rng& rng) {
    add_norm(store, prefix + ".norm2", c);
    add_linear(store, prefix + ".ffn1", c, c, rng);
    add_linear(store, prefix + ".ffn2", c, c, rng);
}

}  // namespace

void init_params(ad::ParamStore& store, const ModelConfig& cfg, Rng& rng) {
    cfg.validate();
    int in = 3;
    for (size_t l = 0; l < cfg.filters.size(); ++l) {
        std::string prefix = "dgcnn.layer" + std::to_string(l);
        add_linear(store, prefix, 2 * in, cfg.filters[l], rng, false);
        add_norm(store, prefix + ".norm", cfg.filters[l]);
        in = cfg.filters[l];
    }
    int c = cfg.feature_dim();
    for (int l = 0; l < cfg.encoder_layers; ++l) {
        std::string prefix = "xf.enc" + std::to_string(l);
        add_norm(store, prefix + ".norm1", c);
        add_attention(store, prefix + ".attn", c, rng);
        add_block_tail(store, prefix, c, rng);
    }
    for (int l = 0; l < cfg.decoder_layers; ++l) {
        std::string prefix = "xf.dec" + std::to_string(l);
        add_norm(store, prefix + ".norm1", c);
        add_attention(store, prefix + ".attn", c, rng);
        add_block_tail(store, prefix, c, rng);
    }
    add_linear(store, "xf.proj", c, c, rng);

    in = 2 * c;
    for (size_t l = 0; l < cfg.walk.size(); ++l) {
        std::string prefix = "walk.layer" + std::to_string(l);
        bool final_layer = l + 1 == cfg.walk.size();
        add_linear(store, prefix, in, cfg.walk[l], rng, final_layer);
        if (!final_layer) add_norm(store, prefix + ".norm", cfg.walk[l]);
        in = cfg.walk[l];
    }
    // The offset head starts at zero: the pipeline begins as the plain VCP
    // pipeline and the walk only ever has to learn the residual. A random
    // final layer would make stage 2 spend most of its steps undoing noise.
    std::string last = "walk.layer" + std::to_string(cfg.walk.size() - 1);
    for (double& v : store.value(last + ".weight").a) v = 0.0;
    for (double& v : store.value(last + ".bias").a) v = 0.0;
}

ad::NodeId ParamLeaves::at(const std::string& name) const {
    auto it = ids.find(name);
    if (it == ids.end()) throw ContractError("ParamLeaves: unknown parameter " + name);
    return it->second;
}

ParamLeaves leaves_for(ad::Tape& t, const ad::ParamStore& store,
                       const std::function<bool(const std::string&)>& trainable) {
    ParamLeaves out;
    for (const auto& [name, entry] : store.entries)
        out.ids[name] = t.leaf(entry.value, trainable ? trainable(name) : false);
    return out;
}

namespace {

using ad::NodeId;
using ad::Tape;

NodeId linear(Tape& t, NodeId x, const ParamLeaves& leaves, const std::string& prefix) {
    return t.add(t.matmul(x, leaves.at(prefix + ".weight")), leaves.at(prefix + ".bias"));
}

NodeId channel_norm(Tape& t, NodeId x, const ParamLeaves& leaves, const std::string& prefix) {
    return t.norm_channels(x, leaves.at(prefix + ".gamma"), leaves.at(prefix + ".beta"));
}

// Multi-head scaled dot-product attention; queries from q_in, keys/values
// from kv_in. No positional encoding: point sets are unordered.
NodeId attention(Tape& t, NodeId q_in, NodeId kv_in, int heads, const ParamLeaves& leaves,
                 const std::string& prefix, std::vector<NodeId>* attn_trace) {
    int c = t.value(q_in).cols;
    if (t.value(kv_in).cols != c)
        throw ShapeError("attention: channel mismatch " + shape_str(t.value(q_in)) + " vs " +
                         shape_str(t.value(kv_in)));
    NodeId q = linear(t, q_in, leaves, prefix + ".wq");
    NodeId k = t.matmul(kv_in, leaves.at(prefix + ".wk.weight"));
    NodeId v = linear(t, kv_in, leaves, prefix + ".wv");
    int dk = c / heads;
    NodeId merged = -1;
    for (int h = 0; h < heads; ++h) {
        std::vector<int> cols(static_cast<size_t>(dk));
        for (int j = 0; j < dk; ++j) cols[static_cast<size_t>(j)] = h * dk + j;
        NodeId qh = t.gather_cols(q, cols);
        NodeId kh = t.gather_cols(k, cols);
        NodeId vh = t.gather_cols(v, cols);
        NodeId scores = t.scale(t.matmul(qh, t.transpose(kh)), 1.0 / std::sqrt(static_cast<double>(dk)));
        NodeId weights = t.row_softmax(scores);
        if (attn_trace) attn_trace->push_back(weights);
        NodeId out_h = t.matmul(weights, vh);
        merged = h == 0 ? out_h : t.concat_cols(merged, out_h);
    }
    return linear(t, merged, leaves, prefix + ".wo");
}

NodeId ffn(Tape& t, NodeId x, const ParamLeaves& leaves, const std::string& prefix) {
    return linear(t, t.relu(linear(t, x, leaves, prefix + ".ffn1")), leaves, prefix + ".ffn2");
}

// Post-norm residual sublayers: normalizing after each residual add keeps
// the stream standardized, which keeps similarity logits bounded and the
// early matching soft.
NodeId encoder_layer(Tape& t, NodeId x, int heads, const ParamLeaves& leaves,
                     const std::string& prefix, std::vector<NodeId>* attn_trace) {
    NodeId x1 = channel_norm(
        t, t.add(x, attention(t, x, x, heads, leaves, prefix + ".attn", attn_trace)), leaves,
        prefix + ".norm1");
    return channel_norm(t, t.add(x1, ffn(t, x1, leaves, prefix)), leaves, prefix + ".norm2");
}

NodeId decoder_layer(Tape& t, NodeId x, NodeId memory, int heads, const ParamLeaves& leaves,
                     const std::string& prefix, std::vector<NodeId>* attn_trace) {
    NodeId x1 = channel_norm(
        t, t.add(x, attention(t, x, memory, heads, leaves, prefix + ".attn", attn_trace)), leaves,
        prefix + ".norm1");
    return channel_norm(t, t.add(x1, ffn(t, x1, leaves, prefix)), leaves, prefix + ".norm2");
}

NodeId encode(Tape& t, NodeId f, const ModelConfig& cfg, const ParamLeaves& leaves,
              std::vector<NodeId>* attn_trace) {
    NodeId x = f;
    for (int l = 0; l < cfg.encoder_layers; ++l)
        x = encoder_layer(t, x, cfg.heads, leaves, "xf.enc" + std::to_string(l), attn_trace);
    return x;
}

NodeId decode(Tape& t, NodeId own, NodeId other, const ModelConfig& cfg, const ParamLeaves& leaves,
              std::vector<NodeId>* attn_trace) {
    NodeId x = own;
    for (int l = 0; l < cfg.decoder_layers; ++l)
        x = decoder_layer(t, x, other, cfg.heads, leaves, "xf.dec" + std::to_string(l), attn_trace);
    return x;
}

void check_stage_finite(const Tape& t, NodeId id, const char* stage) {
    if (!all_finite(t.value(id)))
        throw NumericError(std::string("pipeline: non-finite values after stage ") + stage);
}

}  // namespace

ad::NodeId edge_conv(ad::Tape& t, ad::NodeId f, int k, const ParamLeaves& leaves,
                     const std::string& prefix, bool concat_diff) {
    const Mat& fv = t.value(f);
    int n = fv.rows;
    if (n < 2) throw DegenerateError("edge_conv: single-point neighborhood");
    if (k >= n) k = n - 1;

    // Dynamic graph: neighbors in the current feature space; the indices are
    // constants of the graph.
    std::vector<int> nn = knn(fv, fv, k, /*exclude_self=*/true);
    std::vector<int> center_idx(static_cast<size_t>(n) * k);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j) center_idx[static_cast<size_t>(i) * k + j] = i;

    NodeId centers = t.gather_rows(f, std::move(center_idx));
    NodeId neighbors = t.gather_rows(f, nn);
    if (concat_diff) neighbors = t.sub(neighbors, centers);
    NodeId edges = t.concat_cols(centers, neighbors);
    NodeId h = t.matmul(edges, leaves.at(prefix + ".weight"));
    NodeId hn = channel_norm(t, h, leaves, prefix + ".norm");
    return t.max_pool_rows(t.relu(hn), k);
}

ad::NodeId dgcnn_forward(ad::Tape& t, const Mat& coords, const ModelConfig& cfg,
                         const ParamLeaves& leaves) {
    if (coords.rows < 2) throw DegenerateError("dgcnn_forward: needs at least 2 points");
    NodeId f = t.constant(coords);
    for (size_t l = 0; l < cfg.filters.size(); ++l)
        f = edge_conv(t, f, cfg.knn_k, leaves, "dgcnn.layer" + std::to_string(l),
                      cfg.edge_concat_diff);
    return f;
}

std::pair<ad::NodeId, ad::NodeId> transformer_attend(ad::Tape& t, ad::NodeId fx, ad::NodeId fy,
                                                     const ModelConfig& cfg,
                                                     const ParamLeaves& leaves,
                                                     std::vector<ad::NodeId>* attn_trace) {
    if (t.value(fx).cols != t.value(fy).cols)
        throw ShapeError("transformer_attend: channel mismatch " + shape_str(t.value(fx)) +
                         " vs " + shape_str(t.value(fy)));
    NodeId ex = encode(t, fx, cfg, leaves, attn_trace);
    NodeId ey = encode(t, fy, cfg, leaves, attn_trace);
    NodeId dx = decode(t, ex, ey, cfg, leaves, attn_trace);
    NodeId dy = decode(t, ey, ex, cfg, leaves, attn_trace);
    NodeId phi_x = t.add(fx, linear(t, dx, leaves, "xf.proj"));
    NodeId phi_y = t.add(fy, linear(t, dy, leaves, "xf.proj"));
    return {phi_x, phi_y};
}

ad::NodeId correction_walk(ad::Tape& t, ad::NodeId seeds, const ModelConfig& cfg,
                           const ParamLeaves& leaves) {
    NodeId x = seeds;
    for (size_t l = 0; l < cfg.walk.size(); ++l) {
        std::string prefix = "walk.layer" + std::to_string(l);
        x = t.matmul(x, leaves.at(prefix + ".weight"));
        if (l + 1 < cfg.walk.size()) {
            x = t.relu(channel_norm(t, x, leaves, prefix + ".norm"));
        } else {
            x = t.add(x, leaves.at(prefix + ".bias"));
        }
    }
    return x;
}

PipelineNodes build_pipeline(ad::Tape& t, const PointCloud& x, const PointCloud& y,
                             const ad::ParamStore& store, const ModelConfig& cfg,
                             const PipelineOptions& opts) {
    return build_pipeline_with_leaves(t, x, y, leaves_for(t, store, opts.trainable), cfg, opts);
}

PipelineNodes build_pipeline_with_leaves(ad::Tape& t, const PointCloud& x, const PointCloud& y,
                                         ParamLeaves leaves, const ModelConfig& cfg,
                                         const PipelineOptions& opts) {
    cfg.validate();
    if (x.size() < 3 || y.size() < 3)
        throw InputError("vrnet_register: both clouds need at least 3 points");
    for (const Vec3& p : x.points)
        if (!finite(p)) throw InputError("vrnet_register: non-finite source point");
    for (const Vec3& p : y.points)
        if (!finite(p)) throw InputError("vrnet_register: non-finite target point");

    PipelineNodes nodes;
    nodes.leaves = std::move(leaves);

    nodes.fx = dgcnn_forward(t, cloud_to_mat(x), cfg, nodes.leaves);
    nodes.fy = dgcnn_forward(t, cloud_to_mat(y), cfg, nodes.leaves);
    check_stage_finite(t, nodes.fx, "dgcnn");
    check_stage_finite(t, nodes.fy, "dgcnn");

    auto [phi_x, phi_y] = transformer_attend(t, nodes.fx, nodes.fy, cfg, nodes.leaves, &nodes.attn);
    nodes.phi_x = phi_x;
    nodes.phi_y = phi_y;
    check_stage_finite(t, nodes.phi_x, "transformer");
    check_stage_finite(t, nodes.phi_y, "transformer");

    nodes.sim = t.scale(t.matmul(nodes.phi_x, t.transpose(nodes.phi_y)),
                        1.0 / std::sqrt(static_cast<double>(cfg.feature_dim())));
    nodes.match = t.row_softmax(nodes.sim);
    check_stage_finite(t, nodes.match, "matching");
    if (opts.depth == PipelineDepth::kMatching) return nodes;

    NodeId ym = t.constant(cloud_to_mat(y));
    nodes.vcp = t.matmul(nodes.match, ym);
    nodes.vcp_features = t.matmul(nodes.match, nodes.phi_y);
    check_stage_finite(t, nodes.vcp, "vcp");

    if (opts.use_correction) {
        nodes.seeds = t.concat_cols(nodes.phi_x, nodes.vcp_features);
        nodes.delta = correction_walk(t, nodes.seeds, cfg, nodes.leaves);
        check_stage_finite(t, nodes.delta, "correction_walk");
        nodes.rcp = t.add(nodes.vcp, nodes.delta);
    } else {
        nodes.delta = t.constant_full(x.size(), 3, 0.0);
        nodes.rcp = nodes.vcp;
    }

    nodes.pose = t.procrustes(nodes.rcp, x);
    check_stage_finite(t, nodes.pose, "procrustes");
    return nodes;
}

RigidTransform transform_from_pose_mat(const Mat& pose) {
    RigidTransform out;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) out.rotation[i][j] = pose(i, j);
        out.translation[static_cast<size_t>(i)] = pose(i, 3);
    }
    return out;
}

RegistrationResult vrnet_register(const PointCloud& x, const PointCloud& y,
                                  const ad::ParamStore& store, const ModelConfig& cfg,
                                  bool use_correction) {
    ad::Tape t;
    PipelineOptions opts;
    opts.use_correction = use_correction;
    PipelineNodes nodes = build_pipeline(t, x, y, store, cfg, opts);

    RegistrationResult r;
    r.transform = transform_from_pose_mat(t.value(nodes.pose));
    r.match = t.value(nodes.match);
    r.vcp = mat_to_cloud(t.value(nodes.vcp));
    r.rcp = mat_to_cloud(t.value(nodes.rcp));
    r.offsets = t.value(nodes.delta);
    return r;
}

}  // namespace vrnet
