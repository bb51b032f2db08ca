#include "vrnet/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace vrnet {

void TrainConfig::validate() const {
    if (stage1.lr <= 0.0 || stage2.lr <= 0.0) throw InputError("TrainConfig: learning rates must be positive");
    if (stage1.batch < 1 || stage2.batch < 1) throw InputError("TrainConfig: batch must be >= 1");
    if (stage1.steps < 0 || stage2.steps < 0) throw InputError("TrainConfig: steps must be >= 0");
}

Adam::Adam(ad::ParamStore& store, std::vector<std::string> names, double lr, const AdamConfig& cfg)
    : store_(store), names_(std::move(names)), lr_(lr), cfg_(cfg) {}

void Adam::step(const std::map<std::string, Mat>& grads) {
    ++t_;
    double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
    double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (const std::string& name : names_) {
        auto git = grads.find(name);
        if (git == grads.end()) continue;
        const Mat& g = git->second;
        auto& entry = store_.entries.at(name);
        for (size_t i = 0; i < entry.value.size(); ++i) {
            double gi = g.a[i];
            entry.m.a[i] = cfg_.beta1 * entry.m.a[i] + (1.0 - cfg_.beta1) * gi;
            entry.v.a[i] = cfg_.beta2 * entry.v.a[i] + (1.0 - cfg_.beta2) * gi * gi;
            double mhat = entry.m.a[i] / bc1;
            double vhat = entry.v.a[i] / bc2;
            entry.value.a[i] -= lr_ * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

void LossCurve::save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw InputError("LossCurve: cannot open " + path);
    for (size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
    out << "\n";
    char buf[32];
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out << ",";
            std::snprintf(buf, sizeof(buf), "%.17g", row[i]);
            out << buf;
        }
        out << "\n";
    }
}

namespace {

bool extractor_param(const std::string& name) {
    return name.rfind("dgcnn.", 0) == 0 || name.rfind("xf.", 0) == 0;
}

bool walk_param(const std::string& name) { return name.rfind(kWalkPrefix, 0) == 0; }

// Mean of per-pair gradients, accumulated in pair-index order.
void accumulate_grads(std::map<std::string, Mat>& sum, const ad::Tape& tape,
                      const ParamLeaves& leaves,
                      const std::function<bool(const std::string&)>& wanted) {
    for (const auto& [name, id] : leaves.ids) {
        if (!wanted(name)) continue;
        Mat g = tape.grad(id);
        auto it = sum.find(name);
        if (it == sum.end()) {
            sum.emplace(name, std::move(g));
        } else {
            for (size_t i = 0; i < g.size(); ++i) it->second.a[i] += g.a[i];
        }
    }
}

void finalize_mean(std::map<std::string, Mat>& sum, int batch) {
    for (auto& [name, g] : sum)
        for (double& v : g.a) v /= batch;
}

void maybe_checkpoint(const ad::ParamStore& store, const std::string& run_dir, const char* stage,
                      int step, int cadence) {
    if (run_dir.empty() || cadence <= 0) return;
    if (step % cadence != 0) return;
    ad::save_checkpoint(store, run_dir + "/" + stage + "_latest.ckpt");
}

}  // namespace

LossCurve train_stage1(const std::vector<RegistrationPair>& data, ad::ParamStore& store,
                       const ModelConfig& model_cfg, const TrainConfig& cfg,
                       const std::string& run_dir) {
    cfg.validate();
    if (data.empty()) throw InputError("train_stage1: empty dataset");
    std::vector<std::string> names = store.names("dgcnn.");
    std::vector<std::string> xf = store.names("xf.");
    names.insert(names.end(), xf.begin(), xf.end());
    Adam opt(store, std::move(names), cfg.stage1.lr, cfg.adam);

    LossCurve curve;
    curve.columns = {"step", "l0"};
    int n = static_cast<int>(data.size());
    Rng order_rng(cfg.seed ^ 0x0fd1u);
    std::vector<int> order(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
    for (int step = 0; step < cfg.stage1.steps; ++step) {
        std::map<std::string, Mat> grads;
        double batch_loss = 0.0;
        for (int b = 0; b < cfg.stage1.batch; ++b) {
            int cursor = step * cfg.stage1.batch + b;
            if (cursor % n == 0) order_rng.shuffle(order);  // new epoch
            const RegistrationPair& pair = data[static_cast<size_t>(order[static_cast<size_t>(cursor % n)])];
            ad::Tape tape;
            PipelineOptions opts;
            opts.depth = PipelineDepth::kMatching;
            opts.trainable = extractor_param;
            PipelineNodes nodes = build_pipeline(tape, pair.source, pair.target, store, model_cfg, opts);
            ad::NodeId loss = loss_graph::l0(tape, nodes.match, pair.gt_matrix);
            double value = tape.value(loss)(0, 0);
            if (!std::isfinite(value))
                throw NumericError("train_stage1: non-finite loss at step " + std::to_string(step) +
                                   "; last checkpoint retained");
            batch_loss += value;
            tape.backward(loss);
            accumulate_grads(grads, tape, nodes.leaves, extractor_param);
        }
        finalize_mean(grads, cfg.stage1.batch);
        opt.step(grads);
        curve.rows.push_back({static_cast<double>(step), batch_loss / cfg.stage1.batch});
        maybe_checkpoint(store, run_dir, "stage1", step + 1, cfg.checkpoint_every);
    }
    if (!run_dir.empty()) {
        ad::save_checkpoint(store, run_dir + "/stage1.ckpt");
        curve.save_csv(run_dir + "/stage1_loss.csv");
    }
    return curve;
}

LossCurve train_stage2(const std::vector<RegistrationPair>& data, ad::ParamStore& store,
                       const ModelConfig& model_cfg, const TrainConfig& cfg,
                       const std::string& run_dir) {
    cfg.validate();
    if (data.empty()) throw InputError("train_stage2: empty dataset");
    if (store.names("dgcnn.").empty() || store.names(kWalkPrefix).empty())
        throw InputError("train_stage2: stage-1 parameters missing from the store");
    Adam opt(store, store.names(kWalkPrefix), cfg.stage2.lr, cfg.adam);
    Rng rng(cfg.seed ^ 0x5747u);

    LossCurve curve;
    curve.columns = {"step", "l1", "l2", "l3", "l4", "total"};
    int n = static_cast<int>(data.size());
    Rng order_rng(cfg.seed ^ 0x0fd2u);
    std::vector<int> order(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
    for (int step = 0; step < cfg.stage2.steps; ++step) {
        std::map<std::string, Mat> grads;
        double sums[5] = {0, 0, 0, 0, 0};
        for (int b = 0; b < cfg.stage2.batch; ++b) {
            int cursor = step * cfg.stage2.batch + b;
            if (cursor % n == 0) order_rng.shuffle(order);
            int pair_idx = order[static_cast<size_t>(cursor % n)];
            const RegistrationPair& pair = data[static_cast<size_t>(pair_idx)];
            ad::Tape tape;
            PipelineOptions opts;
            opts.trainable = walk_param;
            PipelineNodes nodes = build_pipeline(tape, pair.source, pair.target, store, model_cfg, opts);

            int subset = cfg.l1_subset_size > 0 ? cfg.l1_subset_size
                                                : default_l1_subset_size(pair.source.size());
            // Resampled fresh each step, deterministic per (seed, step, pair).
            Rng sub_rng = rng.fork(static_cast<uint64_t>(step) * 1000003u +
                                   static_cast<uint64_t>(pair_idx));
            ad::NodeId l1 = loss_graph::l1(tape, pair.source, nodes.rcp, nodes.pose,
                                           cfg.l1_subsets, subset, sub_rng);
            ad::NodeId l2 = loss_graph::l2(tape, pair.source, nodes.rcp);
            ad::NodeId l3 = loss_graph::l3(tape, nodes.pose, pair.source, nodes.rcp);
            ad::NodeId l4 = loss_graph::l4(tape, pair.gt_transform, pair.source, nodes.vcp, nodes.delta);
            ad::NodeId total = loss_graph::hybrid(tape, l1, l2, l3, l4, cfg.weights);

            double value = tape.value(total)(0, 0);
            if (!std::isfinite(value))
                throw NumericError("train_stage2: non-finite loss at step " + std::to_string(step) +
                                   "; last checkpoint retained");
            sums[0] += tape.value(l1)(0, 0);
            sums[1] += tape.value(l2)(0, 0);
            sums[2] += tape.value(l3)(0, 0);
            sums[3] += tape.value(l4)(0, 0);
            sums[4] += value;
            tape.backward(total);
            accumulate_grads(grads, tape, nodes.leaves, walk_param);
        }
        finalize_mean(grads, cfg.stage2.batch);
        opt.step(grads);
        curve.rows.push_back({static_cast<double>(step), sums[0] / cfg.stage2.batch,
                              sums[1] / cfg.stage2.batch, sums[2] / cfg.stage2.batch,
                              sums[3] / cfg.stage2.batch, sums[4] / cfg.stage2.batch});
        maybe_checkpoint(store, run_dir, "stage2", step + 1, cfg.checkpoint_every);
    }
    if (!run_dir.empty()) {
        ad::save_checkpoint(store, run_dir + "/stage2.ckpt");
        curve.save_csv(run_dir + "/stage2_loss.csv");
    }
    return curve;
}

}  // namespace vrnet
