#include "vrnet/geom.hpp"

#include <algorithm>

namespace vrnet {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kDegToRad = kPi / 180.0;
constexpr double kRadToDeg = 180.0 / kPi;
}  // namespace

Mat3 mul(const Mat3& a, const Mat3& b) {
    Mat3 c;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += a[i][k] * b[k][j];
            c[i][j] = s;
        }
    return c;
}

Vec3 mul(const Mat3& a, const Vec3& v) {
    return {a[0][0] * v[0] + a[0][1] * v[1] + a[0][2] * v[2],
            a[1][0] * v[0] + a[1][1] * v[1] + a[1][2] * v[2],
            a[2][0] * v[0] + a[2][1] * v[1] + a[2][2] * v[2]};
}

Mat3 transpose(const Mat3& a) {
    Mat3 t;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) t[i][j] = a[j][i];
    return t;
}

double det(const Mat3& a) {
    return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
           a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
           a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
}

double trace(const Mat3& a) { return a[0][0] + a[1][1] + a[2][2]; }

bool is_rotation(const Mat3& r, double tol) {
    Mat3 g = mul(transpose(r), r);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double want = (i == j) ? 1.0 : 0.0;
            if (std::abs(g[i][j] - want) > tol) return false;
        }
    return std::abs(det(r) - 1.0) <= tol;
}

RigidTransform inverse(const RigidTransform& t) {
    RigidTransform inv;
    inv.rotation = transpose(t.rotation);
    Vec3 rt = mul(inv.rotation, t.translation);
    inv.translation = {-rt[0], -rt[1], -rt[2]};
    return inv;
}

Mat3 rotation_from_euler(const EulerAnglesDeg& e) {
    double cx = std::cos(e.x * kDegToRad), sx = std::sin(e.x * kDegToRad);
    double cy = std::cos(e.y * kDegToRad), sy = std::sin(e.y * kDegToRad);
    double cz = std::cos(e.z * kDegToRad), sz = std::sin(e.z * kDegToRad);
    // R = Rz * Ry * Rx
    Mat3 r;
    r[0] = {cz * cy, cz * sy * sx - sz * cx, cz * sy * cx + sz * sx};
    r[1] = {sz * cy, sz * sy * sx + cz * cx, sz * sy * cx - cz * sx};
    r[2] = {-sy, cy * sx, cy * cx};
    return r;
}

EulerAnglesDeg euler_from_rotation(const Mat3& r) {
    EulerAnglesDeg e;
    double sy = -r[2][0];
    sy = std::clamp(sy, -1.0, 1.0);
    double cy = std::sqrt(std::max(0.0, 1.0 - sy * sy));
    e.y = std::asin(sy) * kRadToDeg;
    if (cy > 1e-8) {
        e.x = std::atan2(r[2][1], r[2][2]) * kRadToDeg;
        e.z = std::atan2(r[1][0], r[0][0]) * kRadToDeg;
    } else {
        // Gimbal lock: pin z to 0. With z = 0 and sy = +-1,
        // r[0][1] = sy*sx, r[0][2] = sy*cx  (up to sign of sy).
        e.z = 0.0;
        e.x = std::atan2(sy * r[0][1], sy * r[0][2]) * kRadToDeg;
    }
    return e;
}

PointCloud apply_transform(const RigidTransform& t, const PointCloud& p) {
    if (p.empty()) throw InputError("apply_transform: empty cloud");
    PointCloud out;
    out.points.reserve(p.points.size());
    for (const Vec3& v : p.points) {
        if (!finite(v)) throw InputError("apply_transform: non-finite input coordinate");
        Vec3 w = mul(t.rotation, v);
        out.points.push_back(w + t.translation);
    }
    out.gt_partner = p.gt_partner;
    return out;
}

Vec3 apply_transform(const RigidTransform& t, const Vec3& p) {
    return mul(t.rotation, p) + t.translation;
}

RigidTransform compose(const RigidTransform& t2, const RigidTransform& t1) {
    RigidTransform c;
    c.rotation = mul(t2.rotation, t1.rotation);
    c.translation = mul(t2.rotation, t1.translation) + t2.translation;
    return c;
}

RigidTransform random_rigid(Rng& rng, double rot_range_deg, double trans_range) {
    if (rot_range_deg < 0.0 || trans_range < 0.0)
        throw InputError("random_rigid: ranges must be >= 0");
    EulerAnglesDeg e;
    e.x = rng.uniform(0.0, rot_range_deg);
    e.y = rng.uniform(0.0, rot_range_deg);
    e.z = rng.uniform(0.0, rot_range_deg);
    RigidTransform t;
    t.rotation = rotation_from_euler(e);
    t.translation = {rng.uniform(-trans_range, trans_range),
                     rng.uniform(-trans_range, trans_range),
                     rng.uniform(-trans_range, trans_range)};
    return t;
}

double rotation_error_deg(const Mat3& r_pred, const Mat3& r_gt) {
    Mat3 a = mul(transpose(r_pred), r_gt);
    double c = std::clamp((trace(a) - 1.0) / 2.0, -1.0, 1.0);
    // Same angle as acos(c), but conditioned: the skew part carries sin of
    // the angle, which acos alone cannot resolve below ~1e-8 radians.
    double s0 = a[2][1] - a[1][2];
    double s1 = a[0][2] - a[2][0];
    double s2 = a[1][0] - a[0][1];
    double s = 0.5 * std::sqrt(s0 * s0 + s1 * s1 + s2 * s2);
    return std::atan2(s, c) * kRadToDeg;
}

double translation_error(const Vec3& t_pred, const Vec3& t_gt) {
    if (!finite(t_pred) || !finite(t_gt))
        throw InputError("translation_error: non-finite input");
    return norm(t_pred - t_gt);
}

}  // namespace vrnet
