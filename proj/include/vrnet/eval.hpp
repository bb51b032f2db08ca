#pragma once
// Registration metric aggregation: RMSE / MAE over per-axis Euler-angle and
// translation errors, mean / median geodesic rotation error and translation
// error, and recall at fixed thresholds. Serializes to JSON and CSV.

#include <string>

#include "vrnet/geom.hpp"

namespace vrnet {

struct RecallThresholds {
    double re_deg = 15.0;
    double te = 0.30;
};

struct PairResult {
    RigidTransform pred;
    RigidTransform gt;
};

struct MetricReport {
    int count = 0;
    // Per-axis Euler-angle (degrees) and translation errors pooled across
    // axes and pairs.
    double rmse_rot_deg = 0.0;
    double mae_rot_deg = 0.0;
    double rmse_trans = 0.0;
    double mae_trans = 0.0;
    // Geodesic rotation / Euclidean translation errors (all pairs).
    double re_mean_all = 0.0;
    double re_median = 0.0;
    double te_mean_all = 0.0;
    double te_median = 0.0;
    // Means over successfully registered pairs only (NaN when recall is 0).
    double re_mean = 0.0;
    double te_mean = 0.0;
    double recall = 0.0;
    RecallThresholds thresholds;
};

MetricReport compute_metrics(const std::vector<PairResult>& results,
                             const RecallThresholds& thresholds = {});

std::string metric_report_json(const MetricReport& r);
std::string metric_report_csv(const MetricReport& r);

}  // namespace vrnet
