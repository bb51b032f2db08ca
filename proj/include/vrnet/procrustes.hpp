#pragma once
// Closed-form rigid alignment of matched point sets via 3x3 SVD of the
// cross-covariance, with a reverse-mode vector-Jacobian product so losses can
// backpropagate through the pose solve.

#include "vrnet/geom.hpp"

namespace vrnet {

struct Svd3 {
    Mat3 u;
    Vec3 s;  // singular values, descending, >= 0
    Mat3 v;  // input = u * diag(s) * v^T
};

// Deterministic sign convention: the largest-magnitude entry of each column
// of U is nonnegative. Zero input yields s = 0 with U = V = I.
Svd3 svd3(const Mat3& h);

// Minimizes sum ||R x_i + t - y_i||^2 over SO(3) x R^3. Reflections are
// corrected (det(R) = +1 always), including planar/mirrored inputs.
RigidTransform solve_rigid(const PointCloud& x, const PointCloud& y);

struct SolveRigidVjpOptions {
    // When singular values of the cross-covariance come within this distance
    // of each other, the analytic SVD differential is ill-posed and the
    // gradient falls back to central finite differences.
    double degenerate_gap = 1e-8;
    bool fd_fallback = true;
    double fd_step = 1e-5;
};

// Gradient of g_r : dR + g_t : dt with respect to every y_i.
std::vector<Vec3> solve_rigid_vjp(const PointCloud& x, const PointCloud& y,
                                  const Mat3& g_r, const Vec3& g_t,
                                  const SolveRigidVjpOptions& opts = {});

}  // namespace vrnet
