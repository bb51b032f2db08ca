#pragma once
// Rigid-motion algebra: point clouds, SO(3)xR3 transforms, fixed-axis X-Y-Z
// Euler conversions, pose sampling, and pose-error primitives.

#include <optional>

#include "vrnet/core.hpp"

namespace vrnet {

// Ordered point set. gt_partner, when present, maps each point to its true
// corresponding index in the paired cloud (-1 = outlier / no partner).
struct PointCloud {
    std::vector<Vec3> points;
    std::optional<std::vector<int>> gt_partner;

    int size() const { return static_cast<int>(points.size()); }
    bool empty() const { return points.empty(); }
};

struct Mat3 {
    // row-major
    std::array<std::array<double, 3>, 3> m{};

    static Mat3 identity() {
        Mat3 r;
        r.m[0][0] = r.m[1][1] = r.m[2][2] = 1.0;
        return r;
    }
    std::array<double, 3>& operator[](int i) { return m[static_cast<size_t>(i)]; }
    const std::array<double, 3>& operator[](int i) const { return m[static_cast<size_t>(i)]; }
};

Mat3 mul(const Mat3& a, const Mat3& b);
Vec3 mul(const Mat3& a, const Vec3& v);
Mat3 transpose(const Mat3& a);
double det(const Mat3& a);
double trace(const Mat3& a);

struct RigidTransform {
    Mat3 rotation = Mat3::identity();
    Vec3 translation{0.0, 0.0, 0.0};

    static RigidTransform identity() { return {}; }
};

// Orthonormality + det(+1) check used by constructors of derived quantities.
bool is_rotation(const Mat3& r, double tol = 1e-9);

RigidTransform inverse(const RigidTransform& t);

// Fixed-axis X-Y-Z convention, degrees: R = Rz(z) * Ry(y) * Rx(x).
struct EulerAnglesDeg {
    double x = 0.0, y = 0.0, z = 0.0;
};

Mat3 rotation_from_euler(const EulerAnglesDeg& e);
// Near gimbal lock (|y| within ~1e-6 deg of 90) the z angle is pinned to 0.
EulerAnglesDeg euler_from_rotation(const Mat3& r);

// output_i = R * p_i + t. Preserves size and gt_partner.
PointCloud apply_transform(const RigidTransform& t, const PointCloud& p);
Vec3 apply_transform(const RigidTransform& t, const Vec3& p);

// apply(compose(t2, t1), p) == apply(t2, apply(t1, p)).
RigidTransform compose(const RigidTransform& t2, const RigidTransform& t1);

// Euler angles per axis uniform in [0, rot_range_deg]; translation components
// uniform in [-trans_range, trans_range].
RigidTransform random_rigid(Rng& rng, double rot_range_deg, double trans_range);

// Geodesic distance on SO(3) in degrees: arccos((trace(R^T Rgt) - 1) / 2),
// argument clamped to [-1, 1].
double rotation_error_deg(const Mat3& r_pred, const Mat3& r_gt);

// Euclidean norm of the translation difference.
double translation_error(const Vec3& t_pred, const Vec3& t_gt);

}  // namespace vrnet
