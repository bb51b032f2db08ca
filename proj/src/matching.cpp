#include "vrnet/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vrnet {

Mat cloud_to_mat(const PointCloud& p) {
    Mat m(p.size(), 3);
    for (int i = 0; i < p.size(); ++i)
        for (int j = 0; j < 3; ++j) m(i, j) = p.points[static_cast<size_t>(i)][static_cast<size_t>(j)];
    return m;
}

PointCloud mat_to_cloud(const Mat& m) {
    if (m.cols != 3) throw ShapeError("mat_to_cloud: expected Nx3, got " + shape_str(m));
    PointCloud p;
    p.points.resize(static_cast<size_t>(m.rows));
    for (int i = 0; i < m.rows; ++i) p.points[static_cast<size_t>(i)] = {m(i, 0), m(i, 1), m(i, 2)};
    return p;
}

SimilarityMatrix similarity_matrix(const FeatureMatrix& phi_x, const FeatureMatrix& phi_y) {
    if (phi_x.cols != phi_y.cols)
        throw ShapeError("similarity_matrix: " + shape_str(phi_x) + " vs " + shape_str(phi_y));
    double inv_sqrt_c = 1.0 / std::sqrt(static_cast<double>(phi_x.cols));
    Mat s(phi_x.rows, phi_y.rows);
    for (int i = 0; i < phi_x.rows; ++i)
        for (int j = 0; j < phi_y.rows; ++j) {
            double acc = 0.0;
            for (int c = 0; c < phi_x.cols; ++c) acc += phi_x(i, c) * phi_y(j, c);
            s(i, j) = acc * inv_sqrt_c;
        }
    return s;
}

MatchMatrix row_softmax(const SimilarityMatrix& s) {
    if (!all_finite(s)) throw InputError("row_softmax: non-finite input");
    Mat m(s.rows, s.cols);
    for (int i = 0; i < s.rows; ++i) {
        double mx = s(i, 0);
        for (int j = 1; j < s.cols; ++j) mx = std::max(mx, s(i, j));
        double sum = 0.0;
        for (int j = 0; j < s.cols; ++j) {
            double e = std::exp(s(i, j) - mx);
            m(i, j) = e;
            sum += e;
        }
        for (int j = 0; j < s.cols; ++j) m(i, j) /= sum;
    }
    return m;
}

WeightedTargets weighted_targets(const PointCloud& y, const FeatureMatrix& phi_y, const MatchMatrix& m) {
    if (m.cols != y.size())
        throw ShapeError("weighted_targets: matrix " + shape_str(m) + " vs cloud of " +
                         std::to_string(y.size()));
    if (phi_y.rows != 0 && phi_y.rows != y.size())
        throw ShapeError("weighted_targets: features " + shape_str(phi_y) + " vs cloud of " +
                         std::to_string(y.size()));
    WeightedTargets out;
    out.vcp.points.resize(static_cast<size_t>(m.rows));
    for (int i = 0; i < m.rows; ++i) {
        Vec3 p{0, 0, 0};
        for (int j = 0; j < m.cols; ++j) p = p + m(i, j) * y.points[static_cast<size_t>(j)];
        out.vcp.points[static_cast<size_t>(i)] = p;
    }
    if (phi_y.rows != 0) out.vcp_features = matmul(m, phi_y);
    return out;
}

namespace {

inline double row_dist2(const Mat& a, int i, const Mat& b, int j) {
    double acc = 0.0;
    for (int c = 0; c < a.cols; ++c) {
        double d = a(i, c) - b(j, c);
        acc += d * d;
    }
    return acc;
}

using Cand = std::pair<double, int>;  // (squared distance, reference index)

}  // namespace

std::vector<int> knn_brute(const Mat& query, const Mat& ref, int k, bool exclude_self) {
    if (query.cols != ref.cols)
        throw ShapeError("knn: dimension mismatch " + shape_str(query) + " vs " + shape_str(ref));
    int avail = ref.rows - (exclude_self ? 1 : 0);
    if (k > avail)
        throw InputError("knn: k=" + std::to_string(k) + " exceeds available references " +
                         std::to_string(avail));
    std::vector<int> out(static_cast<size_t>(query.rows) * k);
    std::vector<Cand> cand;
    cand.reserve(static_cast<size_t>(ref.rows));
    for (int i = 0; i < query.rows; ++i) {
        cand.clear();
        for (int j = 0; j < ref.rows; ++j) {
            if (exclude_self && j == i) continue;
            cand.emplace_back(row_dist2(query, i, ref, j), j);
        }
        std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
        for (int t = 0; t < k; ++t) out[static_cast<size_t>(i) * k + t] = cand[static_cast<size_t>(t)].second;
    }
    return out;
}

std::vector<int> knn_grid(const Mat& query, const Mat& ref, int k, bool exclude_self) {
    if (ref.cols != 3) throw InputError("knn_grid: only 3-D point sets are supported");
    if (query.cols != 3)
        throw ShapeError("knn: dimension mismatch " + shape_str(query) + " vs " + shape_str(ref));
    int avail = ref.rows - (exclude_self ? 1 : 0);
    if (k > avail)
        throw InputError("knn: k=" + std::to_string(k) + " exceeds available references " +
                         std::to_string(avail));

    Vec3 lo{ref(0, 0), ref(0, 1), ref(0, 2)};
    Vec3 hi = lo;
    for (int i = 1; i < ref.rows; ++i)
        for (int c = 0; c < 3; ++c) {
            lo[static_cast<size_t>(c)] = std::min(lo[static_cast<size_t>(c)], ref(i, c));
            hi[static_cast<size_t>(c)] = std::max(hi[static_cast<size_t>(c)], ref(i, c));
        }
    double extent = std::max({hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2], 1e-12});
    int cells = std::max(1, static_cast<int>(std::cbrt(static_cast<double>(ref.rows) / 2.0)));
    double cell = extent / cells;

    auto cell_of = [&](double x, int axis) {
        int c = static_cast<int>(std::floor((x - lo[static_cast<size_t>(axis)]) / cell));
        return std::clamp(c, 0, cells - 1);
    };

    // Buckets are filled in ascending reference order, so scans inside a cell
    // visit candidates index-ordered.
    std::vector<std::vector<int>> bucket(static_cast<size_t>(cells) * cells * cells);
    auto flat = [&](int ix, int iy, int iz) {
        return (static_cast<size_t>(ix) * cells + iy) * cells + iz;
    };
    for (int j = 0; j < ref.rows; ++j)
        bucket[flat(cell_of(ref(j, 0), 0), cell_of(ref(j, 1), 1), cell_of(ref(j, 2), 2))].push_back(j);

    std::vector<int> out(static_cast<size_t>(query.rows) * k);
    std::vector<Cand> best;
    for (int i = 0; i < query.rows; ++i) {
        best.clear();
        int qx = cell_of(query(i, 0), 0), qy = cell_of(query(i, 1), 1), qz = cell_of(query(i, 2), 2);
        for (int ring = 0;; ++ring) {
            bool any_cell = false;
            for (int ix = qx - ring; ix <= qx + ring; ++ix) {
                if (ix < 0 || ix >= cells) continue;
                for (int iy = qy - ring; iy <= qy + ring; ++iy) {
                    if (iy < 0 || iy >= cells) continue;
                    for (int iz = qz - ring; iz <= qz + ring; ++iz) {
                        if (iz < 0 || iz >= cells) continue;
                        if (std::max({std::abs(ix - qx), std::abs(iy - qy), std::abs(iz - qz)}) != ring)
                            continue;
                        any_cell = true;
                        for (int j : bucket[flat(ix, iy, iz)]) {
                            if (exclude_self && j == i) continue;
                            best.emplace_back(row_dist2(query, i, ref, j), j);
                        }
                    }
                }
            }
            if (static_cast<int>(best.size()) >= k) {
                std::partial_sort(best.begin(), best.begin() + k, best.end());
                best.resize(static_cast<size_t>(k));
                // Points beyond Chebyshev ring r are at least (r * cell) from
                // any query position inside its own cell.
                double safe = static_cast<double>(ring) * cell;
                if (best.back().first <= safe * safe) break;
            }
            bool grid_done = qx - ring < 0 && qx + ring >= cells && qy - ring < 0 &&
                             qy + ring >= cells && qz - ring < 0 && qz + ring >= cells;
            if (grid_done && !any_cell) {
                std::sort(best.begin(), best.end());
                if (static_cast<int>(best.size()) > k) best.resize(static_cast<size_t>(k));
                break;
            }
        }
        for (int t = 0; t < k; ++t) out[static_cast<size_t>(i) * k + t] = best[static_cast<size_t>(t)].second;
    }
    return out;
}

std::vector<int> knn(const Mat& query, const Mat& ref, int k, bool exclude_self) {
    if (ref.rows >= 4096 && ref.cols == 3) return knn_grid(query, ref, k, exclude_self);
    return knn_brute(query, ref, k, exclude_self);
}

std::vector<int> knn(const PointCloud& query, const PointCloud& ref, int k, bool exclude_self) {
    return knn(cloud_to_mat(query), cloud_to_mat(ref), k, exclude_self);
}

double chamfer(const PointCloud& x, const PointCloud& y) {
    if (x.empty() || y.empty()) throw InputError("chamfer: empty cloud");
    Mat xm = cloud_to_mat(x);
    Mat ym = cloud_to_mat(y);
    std::vector<int> xy = knn(xm, ym, 1);
    std::vector<int> yx = knn(ym, xm, 1);
    double fwd = 0.0;
    for (int i = 0; i < xm.rows; ++i) fwd += row_dist2(xm, i, ym, xy[static_cast<size_t>(i)]);
    double bwd = 0.0;
    for (int j = 0; j < ym.rows; ++j) bwd += row_dist2(ym, j, xm, yx[static_cast<size_t>(j)]);
    return fwd / x.size() + bwd / y.size();
}

GtMatching gt_matching_matrix(const PointCloud& x, const PointCloud& y,
                              const RigidTransform& t_gt, double tau) {
    if (tau <= 0.0) throw InputError("gt_matching_matrix: tau must be positive");
    GtMatching out;
    out.matrix = Mat(x.size(), y.size());
    out.outlier.assign(static_cast<size_t>(x.size()), 0);
    PointCloud tx = apply_transform(t_gt, x);
    std::vector<int> nn = knn(tx, y, 1);
    for (int i = 0; i < x.size(); ++i) {
        int j = nn[static_cast<size_t>(i)];
        double d = norm(tx.points[static_cast<size_t>(i)] - y.points[static_cast<size_t>(j)]);
        if (d <= tau) {
            out.matrix(i, j) = 1.0;
        } else {
            out.outlier[static_cast<size_t>(i)] = 1;
            ++out.outlier_count;
        }
    }
    return out;
}

double correct_match_ratio(const PointCloud& pred, const PointCloud& x,
                           const RigidTransform& t_gt, double tau) {
    if (pred.size() != x.size())
        throw ShapeError("correct_match_ratio: size mismatch " + std::to_string(pred.size()) +
                         " vs " + std::to_string(x.size()));
    PointCloud tx = apply_transform(t_gt, x);
    int good = 0;
    for (int i = 0; i < x.size(); ++i)
        if (norm(pred.points[static_cast<size_t>(i)] - tx.points[static_cast<size_t>(i)]) < tau) ++good;
    return static_cast<double>(good) / x.size();
}

}  // namespace vrnet
