#include "vrnet/loss.hpp"

#include <cmath>

#include "vrnet/procrustes.hpp"

namespace vrnet {

namespace {

double rmse_mats(const Mat& a, const Mat& b) {
    if (!a.same_shape(b)) throw ShapeError("rmse: " + shape_str(a) + " vs " + shape_str(b));
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double d = a.a[i] - b.a[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(a.size()));
}

double cloud_spread2(const PointCloud& p, const std::vector<int>& idx) {
    Vec3 mean{0, 0, 0};
    for (int i : idx) mean = mean + p.points[static_cast<size_t>(i)];
    mean = (1.0 / static_cast<double>(idx.size())) * mean;
    double s = 0.0;
    for (int i : idx) s = std::max(s, norm2(p.points[static_cast<size_t>(i)] - mean));
    return s;
}

// Draws G subsets, resampling a coincident-source subset once.
std::vector<std::vector<int>> draw_subsets(const PointCloud& x, int n, int g, int subset_size,
                                           Rng& rng) {
    if (subset_size < 3)
        throw InputError("loss_l1: subset size must be >= 3, got " + std::to_string(subset_size));
    if (n < subset_size)
        throw InputError("loss_l1: clouds smaller than subset size");
    std::vector<std::vector<int>> subsets;
    subsets.reserve(static_cast<size_t>(g));
    for (int s = 0; s < g; ++s) {
        std::vector<int> idx = rng.pick_k(n, subset_size);
        if (cloud_spread2(x, idx) < 1e-24) {
            idx = rng.pick_k(n, subset_size);
            if (cloud_spread2(x, idx) < 1e-24)
                throw DegenerateError("loss_l1: coincident source subset after resample");
        }
        subsets.push_back(std::move(idx));
    }
    return subsets;
}

PointCloud subset_cloud(const PointCloud& p, const std::vector<int>& idx) {
    PointCloud out;
    out.points.reserve(idx.size());
    for (int i : idx) out.points.push_back(p.points[static_cast<size_t>(i)]);
    return out;
}

}  // namespace

int default_l1_subset_size(int n) { return std::max(3, n / 8); }

Mat edge_matrix(const PointCloud& p) {
    if (p.empty()) throw InputError("edge_matrix: empty cloud");
    int n = p.size();
    Mat d(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double v = norm(p.points[static_cast<size_t>(i)] - p.points[static_cast<size_t>(j)]);
            d(i, j) = v;
            d(j, i) = v;
        }
    return d;
}

double loss_l0(const MatchMatrix& m_pred, const MatchMatrix& m_gt) {
    if (!m_pred.same_shape(m_gt))
        throw ShapeError("loss_l0: " + shape_str(m_pred) + " vs " + shape_str(m_gt));
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < m_gt.size(); ++i) {
        num += m_pred.a[i] * m_gt.a[i];
        den += m_gt.a[i];
    }
    if (den <= 0.0) throw DegenerateError("loss_l0: every row is an outlier");
    return -num / den;
}

double loss_l1(const PointCloud& x, const PointCloud& y_rcp, const RigidTransform& t_pred,
               int g, int subset_size, Rng& rng) {
    if (x.size() != y_rcp.size())
        throw ShapeError("loss_l1: cloud sizes differ");
    auto subsets = draw_subsets(x, x.size(), g, subset_size, rng);
    Mat identity3 = Mat::identity(3);
    double acc = 0.0;
    for (const auto& idx : subsets) {
        RigidTransform tg = solve_rigid(subset_cloud(x, idx), subset_cloud(y_rcp, idx));
        Mat rr(3, 3);
        Mat3 prod = mul(transpose(tg.rotation), t_pred.rotation);
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) rr(a, b) = prod[a][b];
        Mat tgm(3, 1), tpm(3, 1);
        for (int a = 0; a < 3; ++a) {
            tgm(a, 0) = tg.translation[static_cast<size_t>(a)];
            tpm(a, 0) = t_pred.translation[static_cast<size_t>(a)];
        }
        acc += rmse_mats(rr, identity3) + rmse_mats(tgm, tpm);
    }
    return acc / g;
}

double loss_l2(const Mat& d, const Mat& d_rcp) { return rmse_mats(d, d_rcp); }

double loss_l3(const RigidTransform& t_pred, const PointCloud& x, const PointCloud& y_rcp) {
    if (x.size() != y_rcp.size()) throw ShapeError("loss_l3: cloud sizes differ");
    double acc = 0.0;
    for (int i = 0; i < x.size(); ++i) {
        Vec3 p = apply_transform(t_pred, x.points[static_cast<size_t>(i)]);
        acc += norm2(p - y_rcp.points[static_cast<size_t>(i)]);
    }
    return std::sqrt(acc / (3.0 * x.size()));
}

double loss_l4(const RigidTransform& t_gt, const PointCloud& x, const PointCloud& y_vcp,
               const Mat& offsets) {
    if (x.size() != y_vcp.size() || offsets.rows != x.size() || offsets.cols != 3)
        throw ShapeError("loss_l4: size mismatch");
    double acc = 0.0;
    for (int i = 0; i < x.size(); ++i) {
        Vec3 gap = apply_transform(t_gt, x.points[static_cast<size_t>(i)]) -
                   y_vcp.points[static_cast<size_t>(i)];
        for (int c = 0; c < 3; ++c) {
            double d = gap[static_cast<size_t>(c)] - offsets(i, c);
            acc += d * d;
        }
    }
    return std::sqrt(acc / (3.0 * x.size()));
}

double hybrid_loss(double l1, double l2, double l3, double l4, const LossWeights& w) {
    if (w.l1 < 0 || w.l2 < 0 || w.l3 < 0 || w.l4 < 0)
        throw InputError("hybrid_loss: weights must be nonnegative");
    return w.l1 * l1 + w.l2 * l2 + w.l3 * l3 + w.l4 * l4;
}

namespace loss_graph {

using ad::NodeId;
using ad::Tape;

NodeId l0(Tape& t, NodeId m_pred, const MatchMatrix& m_gt) {
    const Mat& mp = t.value(m_pred);
    if (!mp.same_shape(m_gt))
        throw ShapeError("loss_l0: " + shape_str(mp) + " vs " + shape_str(m_gt));
    std::vector<int> rows, cols;
    for (int i = 0; i < m_gt.rows; ++i)
        for (int j = 0; j < m_gt.cols; ++j)
            if (m_gt(i, j) != 0.0) {
                rows.push_back(i);
                cols.push_back(j);
            }
    if (rows.empty()) throw DegenerateError("loss_l0: every row is an outlier");
    double inliers = static_cast<double>(rows.size());
    NodeId picked = t.gather_elems(m_pred, std::move(rows), std::move(cols));
    return t.scale(t.sum_all(picked), -1.0 / inliers);
}

namespace {

NodeId pose_rotation(Tape& t, NodeId pose) { return t.gather_cols(pose, {0, 1, 2}); }
NodeId pose_translation(Tape& t, NodeId pose) { return t.gather_cols(pose, {3}); }

}  // namespace

NodeId l1(Tape& t, const PointCloud& x, NodeId y_rcp, NodeId pose, int g, int subset_size,
          Rng& rng) {
    if (t.value(y_rcp).rows != x.size())
        throw ShapeError("loss_l1: cloud sizes differ");
    auto subsets = draw_subsets(x, x.size(), g, subset_size, rng);
    NodeId r_full = pose_rotation(t, pose);
    NodeId t_full = pose_translation(t, pose);
    NodeId identity3 = t.constant(Mat::identity(3));
    NodeId acc = -1;
    for (const auto& idx : subsets) {
        NodeId y_sub = t.gather_rows(y_rcp, idx);
        NodeId pose_g = t.procrustes(y_sub, subset_cloud(x, idx));
        NodeId rot_term = t.rmse(t.matmul(t.transpose(pose_rotation(t, pose_g)), r_full), identity3);
        NodeId trans_term = t.rmse(pose_translation(t, pose_g), t_full);
        NodeId term = t.add(rot_term, trans_term);
        acc = acc < 0 ? term : t.add(acc, term);
    }
    return t.scale(acc, 1.0 / g);
}

NodeId l2(Tape& t, const PointCloud& x, NodeId y_rcp) {
    int n = x.size();
    if (t.value(y_rcp).rows != n || t.value(y_rcp).cols != 3)
        throw ShapeError("loss_l2: rcp must be " + std::to_string(n) + "x3");
    Mat d_src = edge_matrix(x);
    std::vector<int> rows, cols;
    rows.reserve(static_cast<size_t>(n) * (n - 1));
    cols.reserve(rows.capacity());
    Mat d_src_off(n * (n - 1), 1);
    int k = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            rows.push_back(i);
            cols.push_back(j);
            d_src_off(k++, 0) = d_src(i, j);
        }

    // Off-diagonal pairwise distances of the RCPs via the Gram expansion
    // ||y_i||^2 + ||y_j||^2 - 2 y_i . y_j; relu absorbs the tiny negatives
    // cancellation can produce, and the 1e-18 floor keeps sqrt differentiable.
    NodeId gram = t.matmul(y_rcp, t.transpose(y_rcp));
    NodeId sq = t.matmul(t.square(y_rcp), t.constant_full(3, 1, 1.0));
    NodeId sq_row = t.matmul(sq, t.constant_full(1, n, 1.0));
    NodeId d2 = t.add(t.add(sq_row, t.transpose(sq_row)), t.scale(gram, -2.0));
    NodeId d2_off = t.gather_elems(d2, rows, cols);
    NodeId d_off = t.sqrt(t.add(t.relu(d2_off), t.constant_full(n * (n - 1), 1, 1e-18)));

    // The diagonal entries of both edge matrices are exactly zero, so the
    // full-matrix rmse is the off-diagonal sum over n^2.
    NodeId ss = t.sum_all(t.square(t.sub(t.constant(std::move(d_src_off)), d_off)));
    return t.sqrt(t.scale(ss, 1.0 / (static_cast<double>(n) * n)));
}

NodeId l3(Tape& t, NodeId pose, const PointCloud& x, NodeId y_rcp) {
    if (t.value(y_rcp).rows != x.size())
        throw ShapeError("loss_l3: cloud sizes differ");
    NodeId r = pose_rotation(t, pose);
    NodeId tr = pose_translation(t, pose);
    NodeId xm = t.constant(cloud_to_mat(x));
    NodeId pred = t.add(t.matmul(xm, t.transpose(r)), t.transpose(tr));
    return t.rmse(pred, y_rcp);
}

NodeId l4(Tape& t, const RigidTransform& t_gt, const PointCloud& x, NodeId y_vcp,
          NodeId offsets) {
    if (t.value(y_vcp).rows != x.size() || t.value(offsets).rows != x.size())
        throw ShapeError("loss_l4: size mismatch");
    NodeId target = t.constant(cloud_to_mat(apply_transform(t_gt, x)));
    NodeId gap = t.sub(target, y_vcp);
    return t.rmse(gap, offsets);
}

NodeId hybrid(Tape& t, NodeId l1, NodeId l2, NodeId l3, NodeId l4, const LossWeights& w) {
    if (w.l1 < 0 || w.l2 < 0 || w.l3 < 0 || w.l4 < 0)
        throw InputError("hybrid_loss: weights must be nonnegative");
    NodeId acc = t.add(t.scale(l1, w.l1), t.scale(l2, w.l2));
    acc = t.add(acc, t.scale(l3, w.l3));
    return t.add(acc, t.scale(l4, w.l4));
}

}  // namespace loss_graph

}  // namespace vrnet
