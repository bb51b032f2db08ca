#pragma once
// Similarity and soft-matching algebra, virtual corresponding points, exact
// k-nearest-neighbor search (brute force + uniform grid), Chamfer distance,
// and ground-truth correspondence construction / scoring.

#include <cstdint>

#include "vrnet/geom.hpp"

namespace vrnet {

// Row-stochastic N_X x N_Y matching probabilities (binary in the ground-truth
// variant, where outlier rows sum to 0).
using MatchMatrix = Mat;
using SimilarityMatrix = Mat;
using FeatureMatrix = Mat;

Mat cloud_to_mat(const PointCloud& p);
PointCloud mat_to_cloud(const Mat& m);

// S = phi_x * phi_y^T / sqrt(c) with c the common feature width.
SimilarityMatrix similarity_matrix(const FeatureMatrix& phi_x, const FeatureMatrix& phi_y);

// Row-wise softmax with per-row max subtraction.
MatchMatrix row_softmax(const SimilarityMatrix& s);

// vcp_i = sum_j m_ij y_j, and the same mixture applied to target features.
struct WeightedTargets {
    PointCloud vcp;
    FeatureMatrix vcp_features;
};
WeightedTargets weighted_targets(const PointCloud& y, const FeatureMatrix& phi_y, const MatchMatrix& m);

// Exact k nearest reference rows per query row (squared Euclidean metric,
// ties broken by lower reference index). Result is row-major n_query x k.
// exclude_self skips the reference row with the same index as the query row
// (meaningful when query and ref are the same set). Dispatches to a uniform
// grid for 3-D sets of >= 4096 points, brute force otherwise; the two paths
// agree exactly.
std::vector<int> knn(const Mat& query, const Mat& ref, int k, bool exclude_self = false);
std::vector<int> knn(const PointCloud& query, const PointCloud& ref, int k, bool exclude_self = false);
std::vector<int> knn_brute(const Mat& query, const Mat& ref, int k, bool exclude_self = false);
std::vector<int> knn_grid(const Mat& query, const Mat& ref, int k, bool exclude_self = false);

// Symmetric mean of minimum squared distances, both directions.
double chamfer(const PointCloud& x, const PointCloud& y);

// x_i is matched to the nearest y_j of T_gt x_i when within tau; rows beyond
// tau stay all-zero and are flagged as outliers.
struct GtMatching {
    MatchMatrix matrix;           // binary, at most one 1 per row
    std::vector<uint8_t> outlier; // per source point
    int outlier_count = 0;
};
GtMatching gt_matching_matrix(const PointCloud& x, const PointCloud& y,
                              const RigidTransform& t_gt, double tau);

// Fraction of predictions within tau (strictly) of the ground-truth-
// transformed source point.
double correct_match_ratio(const PointCloud& pred, const PointCloud& x,
                           const RigidTransform& t_gt, double tau = 0.15);

}  // namespace vrnet
