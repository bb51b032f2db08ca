#pragma once
// The hybrid training objective: matching supervision (L0), local motion
// consensus (L1), geometry structure supervision over edges and nodes
// (L2, L3), and explicit amendment-offset supervision (L4), combined as
// L = w1 L1 + w2 L2 + w3 L3 + w4 L4.
//
// Each loss comes in two forms: a tape builder (differentiable, used by the
// trainer) and a plain evaluator matching the same definition. rmse(A, B) is
// sqrt(mean over all entries of (A - B)^2) throughout.

#include "vrnet/autodiff.hpp"
#include "vrnet/matching.hpp"

namespace vrnet {

struct LossWeights {
    double l1 = 1.0;
    double l2 = 1.0;
    double l3 = 1.0;
    double l4 = 100.0;
};

// Pairwise Euclidean distance matrix (symmetric, zero diagonal).
Mat edge_matrix(const PointCloud& p);

// -sum(m_pred .* m_gt) / sum(m_gt); in [-1, 0]. Outlier (all-zero) rows of
// the ground truth contribute nothing; throws DegenerateError when every row
// is an outlier.
double loss_l0(const MatchMatrix& m_pred, const MatchMatrix& m_gt);

// Mean over G random correspondence subsets of
// rmse(R_g^T R, I3) + rmse(t_g, t), poses solved per subset. A subset whose
// source points are coincident is resampled once, then rejected.
double loss_l1(const PointCloud& x, const PointCloud& y_rcp, const RigidTransform& t_pred,
               int g, int subset_size, Rng& rng);

double loss_l2(const Mat& d, const Mat& d_rcp);
double loss_l3(const RigidTransform& t_pred, const PointCloud& x, const PointCloud& y_rcp);
double loss_l4(const RigidTransform& t_gt, const PointCloud& x, const PointCloud& y_vcp,
               const Mat& offsets);
double hybrid_loss(double l1, double l2, double l3, double l4, const LossWeights& w);

// Tape builders. Pose nodes are the 3x4 [R | t] blocks produced by
// Tape::procrustes.
namespace loss_graph {

ad::NodeId l0(ad::Tape& t, ad::NodeId m_pred, const MatchMatrix& m_gt);
ad::NodeId l1(ad::Tape& t, const PointCloud& x, ad::NodeId y_rcp, ad::NodeId pose,
              int g, int subset_size, Rng& rng);
ad::NodeId l2(ad::Tape& t, const PointCloud& x, ad::NodeId y_rcp);
ad::NodeId l3(ad::Tape& t, ad::NodeId pose, const PointCloud& x, ad::NodeId y_rcp);
ad::NodeId l4(ad::Tape& t, const RigidTransform& t_gt, const PointCloud& x, ad::NodeId y_vcp,
              ad::NodeId offsets);
ad::NodeId hybrid(ad::Tape& t, ad::NodeId l1, ad::NodeId l2, ad::NodeId l3, ad::NodeId l4,
                  const LossWeights& w);

}  // namespace loss_graph

// Default subset size for L1: max(3, floor(n / 8)).
int default_l1_subset_size(int n);

}  // namespace vrnet
