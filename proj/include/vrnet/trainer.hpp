#pragma once
// Two-stage training: stage 1 fits the feature extractor and matching head
// under the correspondence loss; stage 2 freezes everything upstream and
// fits the correction-walk under the weighted hybrid loss. Adam throughout,
// per-pair gradients averaged in pair-index order.

#include "vrnet/data.hpp"
#include "vrnet/loss.hpp"
#include "vrnet/model.hpp"

namespace vrnet {

struct StageConfig {
    double lr = 1e-3;
    int steps = 500;
    int batch = 4;
};

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct TrainConfig {
    StageConfig stage1{1e-3, 500, 4};
    StageConfig stage2{1e-4, 500, 4};
    AdamConfig adam;
    LossWeights weights;
    uint64_t seed = 1;
    int checkpoint_every = 100;  // steps; 0 disables periodic checkpoints
    int l1_subsets = 10;         // G
    int l1_subset_size = 0;      // 0 = max(3, n/8)

    void validate() const;
};

// Adam over a fixed parameter subset; moment buffers live in the store, so
// parameters outside the subset are structurally frozen.
class Adam {
public:
    Adam(ad::ParamStore& store, std::vector<std::string> names, double lr, const AdamConfig& cfg);
    void step(const std::map<std::string, Mat>& grads);
    const std::vector<std::string>& names() const { return names_; }

private:
    ad::ParamStore& store_;
    std::vector<std::string> names_;
    double lr_;
    AdamConfig cfg_;
    int t_ = 0;
};

struct LossCurve {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    void save_csv(const std::string& path) const;
};

// Aborts with NumericError on a non-finite loss; any checkpoint already
// written at the cadence stays on disk. run_dir may be empty (no files).
LossCurve train_stage1(const std::vector<RegistrationPair>& data, ad::ParamStore& store,
                       const ModelConfig& model_cfg, const TrainConfig& cfg,
                       const std::string& run_dir = "");

// Requires stage-1 parameters in the store; updates only "walk.*".
LossCurve train_stage2(const std::vector<RegistrationPair>& data, ad::ParamStore& store,
                       const ModelConfig& model_cfg, const TrainConfig& cfg,
                       const std::string& run_dir = "");

}  // namespace vrnet
