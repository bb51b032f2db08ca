#include "vrnet/procrustes.hpp"

#include <algorithm>
#include <cmath>

namespace vrnet {

namespace {

// Cyclic Jacobi sweeps for a symmetric 3x3 matrix. Returns eigenvalues in w
// and accumulates the rotations into v (columns are eigenvectors).
void jacobi_eig_sym3(Mat3 a, Vec3& w, Mat3& v) {
    v = Mat3::identity();
    for (int sweep = 0; sweep < 32; ++sweep) {
        double off = std::abs(a[0][1]) + std::abs(a[0][2]) + std::abs(a[1][2]);
        if (off == 0.0) break;
        for (int p = 0; p < 2; ++p) {
            for (int q = p + 1; q < 3; ++q) {
                double apq = a[p][q];
                if (apq == 0.0) continue;
                double theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                // A <- G^T A G with Givens rotation in the (p, q) plane.
                double app = a[p][p], aqq = a[q][q];
                a[p][p] = app - t * apq;
                a[q][q] = aqq + t * apq;
                a[p][q] = a[q][p] = 0.0;
                int r = 3 - p - q;  // the remaining index
                double arp = a[r][p], arq = a[r][q];
                a[r][p] = a[p][r] = c * arp - s * arq;
                a[r][q] = a[q][r] = s * arp + c * arq;
                for (int k = 0; k < 3; ++k) {
                    double vkp = v[k][p], vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    w = {a[0][0], a[1][1], a[2][2]};
}

Vec3 col(const Mat3& m, int j) { return {m[0][j], m[1][j], m[2][j]}; }

void set_col(Mat3& m, int j, const Vec3& v) {
    m[0][j] = v[0];
    m[1][j] = v[1];
    m[2][j] = v[2];
}

Vec3 normalized(const Vec3& v) {
    double n = norm(v);
    return {v[0] / n, v[1] / n, v[2] / n};
}

// Any unit vector orthogonal to u.
Vec3 orthogonal_unit(const Vec3& u) {
    Vec3 trial = std::abs(u[0]) < 0.9 ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 1.0, 0.0};
    Vec3 w = cross(u, trial);
    return normalized(w);
}

struct SolveParts {
    Vec3 x_mean, y_mean;
    Mat3 h;
    Svd3 svd;
    double det_sign;  // +1 or -1, the reflection correction
    RigidTransform transform;
};

SolveParts solve_rigid_parts(const PointCloud& x, const PointCloud& y) {
    int n = x.size();
    if (n != y.size())
        throw ShapeError("solve_rigid: cloud sizes differ (" + std::to_string(n) + " vs " +
                         std::to_string(y.size()) + ")");
    if (n < 3) throw InputError("solve_rigid: needs at least 3 point pairs, got " + std::to_string(n));

    SolveParts p;
    p.x_mean = {0, 0, 0};
    p.y_mean = {0, 0, 0};
    for (int i = 0; i < n; ++i) {
        p.x_mean = p.x_mean + x.points[static_cast<size_t>(i)];
        p.y_mean = p.y_mean + y.points[static_cast<size_t>(i)];
    }
    p.x_mean = (1.0 / n) * p.x_mean;
    p.y_mean = (1.0 / n) * p.y_mean;

    double spread = 0.0;
    for (int i = 0; i < n; ++i)
        spread = std::max(spread, norm2(x.points[static_cast<size_t>(i)] - p.x_mean));
    if (spread < 1e-24)
        throw DegenerateError("solve_rigid: source points are coincident");

    p.h = Mat3{};
    for (int i = 0; i < n; ++i) {
        Vec3 xc = x.points[static_cast<size_t>(i)] - p.x_mean;
        Vec3 yc = y.points[static_cast<size_t>(i)] - p.y_mean;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) p.h[a][b] += xc[a] * yc[b];
    }

    p.svd = svd3(p.h);
    double d = det(mul(p.svd.v, transpose(p.svd.u)));
    p.det_sign = d < 0.0 ? -1.0 : 1.0;

    // R = V * diag(1, 1, sign) * U^T
    Mat3 vc = p.svd.v;
    for (int i = 0; i < 3; ++i) vc[i][2] *= p.det_sign;
    p.transform.rotation = mul(vc, transpose(p.svd.u));
    p.transform.translation = p.y_mean - mul(p.transform.rotation, p.x_mean);
    return p;
}

}  // namespace

Svd3 svd3(const Mat3& h) {
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (!std::isfinite(h[i][j])) throw InputError("svd3: non-finite entry");

    Mat3 a;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += h[k][i] * h[k][j];
            a[i][j] = s;
        }

    Vec3 w;
    Mat3 v;
    jacobi_eig_sym3(a, w, v);

    // Singular values recomputed as ||H v_i|| directly from H; this keeps
    // exactly rank-deficient inputs at machine-zero instead of sqrt(eps).
    std::array<int, 3> order = {0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int i, int j) { return w[static_cast<size_t>(i)] > w[static_cast<size_t>(j)]; });

    Svd3 out;
    std::array<Vec3, 3> hv;
    for (int k = 0; k < 3; ++k) {
        Vec3 vk = col(v, order[static_cast<size_t>(k)]);
        set_col(out.v, k, vk);
        hv[static_cast<size_t>(k)] = mul(h, vk);
        out.s[k] = norm(hv[static_cast<size_t>(k)]);
    }

    double s0 = out.s[0];
    if (s0 == 0.0) {
        out.u = Mat3::identity();
        out.v = Mat3::identity();
        out.s = {0.0, 0.0, 0.0};
        return out;
    }

    // Build U columns, Gram-Schmidt against earlier columns; fall back to an
    // orthonormal completion for (near-)zero singular values.
    std::array<Vec3, 3> u;
    double tiny = 1e-13 * s0;
    for (int k = 0; k < 3; ++k) {
        Vec3 cand;
        if (out.s[k] > tiny) {
            cand = (1.0 / out.s[k]) * hv[static_cast<size_t>(k)];
        } else if (k == 1) {
            cand = orthogonal_unit(u[0]);
        } else {
            cand = cross(u[0], u[1]);
        }
        for (int j = 0; j < k; ++j) cand = cand - dot(cand, u[static_cast<size_t>(j)]) * u[static_cast<size_t>(j)];
        double cn = norm(cand);
        if (cn < 1e-7) {
            cand = (k == 1) ? orthogonal_unit(u[0]) : cross(u[0], u[1]);
            cn = norm(cand);
        }
        u[static_cast<size_t>(k)] = (1.0 / cn) * cand;
    }
    for (int k = 0; k < 3; ++k) set_col(out.u, k, u[static_cast<size_t>(k)]);

    // Sign convention: largest-magnitude entry of each U column nonnegative;
    // V flips with U so the product is preserved.
    for (int k = 0; k < 3; ++k) {
        int arg = 0;
        for (int i = 1; i < 3; ++i)
            if (std::abs(out.u[i][k]) > std::abs(out.u[arg][k])) arg = i;
        if (out.u[arg][k] < 0.0)
            for (int i = 0; i < 3; ++i) {
                out.u[i][k] = -out.u[i][k];
                out.v[i][k] = -out.v[i][k];
            }
    }
    return out;
}

RigidTransform solve_rigid(const PointCloud& x, const PointCloud& y) {
    return solve_rigid_parts(x, y).transform;
}

std::vector<Vec3> solve_rigid_vjp(const PointCloud& x, const PointCloud& y,
                                  const Mat3& g_r, const Vec3& g_t,
                                  const SolveRigidVjpOptions& opts) {
    SolveParts parts = solve_rigid_parts(x, y);
    int n = x.size();
    const Vec3& s = parts.svd.s;

    double min_gap = std::min({std::abs(s[0] - s[1]), std::abs(s[0] - s[2]), std::abs(s[1] - s[2])});
    if (min_gap <= opts.degenerate_gap) {
        if (!opts.fd_fallback)
            throw DegenerateError("solve_rigid_vjp: near-equal singular values and fallback disabled");
        // Central finite differences on the full solve.
        std::vector<Vec3> grads(static_cast<size_t>(n), Vec3{0, 0, 0});
        PointCloud yp = y;
        double h = opts.fd_step;
        for (int i = 0; i < n; ++i) {
            for (int c = 0; c < 3; ++c) {
                double orig = yp.points[static_cast<size_t>(i)][static_cast<size_t>(c)];
                yp.points[static_cast<size_t>(i)][static_cast<size_t>(c)] = orig + h;
                RigidTransform tp = solve_rigid(x, yp);
                yp.points[static_cast<size_t>(i)][static_cast<size_t>(c)] = orig - h;
                RigidTransform tm = solve_rigid(x, yp);
                yp.points[static_cast<size_t>(i)][static_cast<size_t>(c)] = orig;
                double acc = 0.0;
                for (int a = 0; a < 3; ++a) {
                    for (int b = 0; b < 3; ++b)
                        acc += g_r[a][b] * (tp.rotation[a][b] - tm.rotation[a][b]) / (2.0 * h);
                    acc += g_t[static_cast<size_t>(a)] *
                           (tp.translation[static_cast<size_t>(a)] - tm.translation[static_cast<size_t>(a)]) / (2.0 * h);
                }
                grads[static_cast<size_t>(i)][static_cast<size_t>(c)] = acc;
            }
        }
        return grads;
    }

    // t = y_mean - R x_mean folds into an effective rotation cotangent.
    Mat3 g_r_eff = g_r;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            g_r_eff[a][b] -= g_t[static_cast<size_t>(a)] * parts.x_mean[static_cast<size_t>(b)];

    // R = V C U^T with C = diag(1, 1, det_sign):
    //   dL/dU = g_r_eff^T V C,  dL/dV = g_r_eff U C.
    const Mat3& u = parts.svd.u;
    const Mat3& v = parts.svd.v;
    Vec3 cdiag = {1.0, 1.0, parts.det_sign};

    // In the U/V bases: mu = U^T (dL/dU), mv = V^T (dL/dV), both derived from
    // T = U^T g_r_eff^T V.
    Mat3 t_mat = mul(transpose(u), mul(transpose(g_r_eff), v));
    Mat3 mu, mv;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            mu[i][j] = t_mat[i][j] * cdiag[static_cast<size_t>(j)];
            mv[i][j] = t_mat[j][i] * cdiag[static_cast<size_t>(j)];
        }

    // Standard SVD differential: dL/dH = U B V^T with
    //   B_pq = (s_q (mu_pq - mu_qp) + s_p (mv_pq - mv_qp)) / (s_q^2 - s_p^2).
    Mat3 b{};
    for (int p = 0; p < 3; ++p)
        for (int q = 0; q < 3; ++q) {
            if (p == q) continue;
            double gu_pq = mu[p][q] - mu[q][p];
            double gv_pq = mv[p][q] - mv[q][p];
            double denom = s[static_cast<size_t>(q)] * s[static_cast<size_t>(q)] -
                           s[static_cast<size_t>(p)] * s[static_cast<size_t>(p)];
            b[p][q] = (s[static_cast<size_t>(q)] * gu_pq + s[static_cast<size_t>(p)] * gv_pq) / denom;
        }
    Mat3 g_h = mul(u, mul(b, transpose(v)));

    // H = sum (x_i - x_mean) y_i^T exactly (the y_mean term cancels), so
    // dL/dy_i = g_h^T (x_i - x_mean); the direct y_mean path adds g_t / n.
    Mat3 g_ht = transpose(g_h);
    std::vector<Vec3> grads(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        Vec3 xc = x.points[static_cast<size_t>(i)] - parts.x_mean;
        Vec3 g = mul(g_ht, xc);
        grads[static_cast<size_t>(i)] = g + (1.0 / n) * g_t;
    }
    return grads;
}

}  // namespace vrnet
