#include <doctest.h>

#include <cmath>

#include "vrnet/matching.hpp"

using namespace vrnet;

namespace {

PointCloud random_cloud(int n, Rng& rng, double scale = 1.0) {
    PointCloud p;
    for (int i = 0; i < n; ++i)
        p.points.push_back({scale * rng.uniform(-1, 1), scale * rng.uniform(-1, 1),
                            scale * rng.uniform(-1, 1)});
    return p;
}

Mat random_stochastic(int rows, int cols, Rng& rng) {
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        double sum = 0.0;
        for (int j = 0; j < cols; ++j) {
            m(i, j) = rng.uniform(0.0, 1.0);
            sum += m(i, j);
        }
        for (int j = 0; j < cols; ++j) m(i, j) /= sum;
    }
    return m;
}

}  // namespace

TEST_SUITE("matching") {

TEST_CASE("similarity matrix basics") {
    Mat a(1, 4), b(1, 4);
    a(0, 0) = 1.0;
    b(0, 0) = 1.0;
    Mat s = similarity_matrix(a, b);
    CHECK(s(0, 0) == doctest::Approx(0.5));  // 1 / sqrt(4)

    Mat ortho_a(1, 2), ortho_b(1, 2);
    ortho_a(0, 0) = 1.0;
    ortho_b(0, 1) = 1.0;
    CHECK(similarity_matrix(ortho_a, ortho_b)(0, 0) == 0.0);

    Rng rng(1);
    Mat fa(3, 5), fb(4, 5);
    for (double& v : fa.a) v = rng.uniform(-1, 1);
    for (double& v : fb.a) v = rng.uniform(-1, 1);
    Mat s1 = similarity_matrix(fa, fb);
    Mat fa2 = fa, fb2 = fb;
    for (double& v : fa2.a) v *= 3.0;
    for (double& v : fb2.a) v *= 3.0;
    Mat s9 = similarity_matrix(fa2, fb2);
    for (size_t i = 0; i < s1.size(); ++i) CHECK(s9.a[i] == doctest::Approx(9.0 * s1.a[i]));

    Mat bad(3, 4);
    CHECK_THROWS_AS(similarity_matrix(fa, bad), ShapeError);
}

TEST_CASE("row_softmax closed forms") {
    Mat flat(1, 4, 7.0);
    Mat m = row_softmax(flat);
    for (int j = 0; j < 4; ++j) CHECK(m(0, j) == doctest::Approx(0.25));

    Mat two(1, 2);
    two(0, 1) = std::log(3.0);
    Mat m2 = row_softmax(two);
    CHECK(m2(0, 0) == doctest::Approx(0.25));
    CHECK(m2(0, 1) == doctest::Approx(0.75));

    Mat spike(1, 5);
    spike(0, 3) = 1e6;
    Mat m3 = row_softmax(spike);
    CHECK(std::abs(m3(0, 3) - 1.0) < 1e-9);
    for (int j = 0; j < 5; ++j)
        if (j != 3) CHECK(m3(0, j) < 1e-9);

    Rng rng(2);
    Mat wild(8, 6);
    for (double& v : wild.a) v = rng.uniform(-1e6, 1e6);
    Mat mw = row_softmax(wild);
    for (int i = 0; i < 8; ++i) {
        double sum = 0.0;
        for (int j = 0; j < 6; ++j) sum += mw(i, j);
        CHECK(std::abs(sum - 1.0) < 1e-9);
    }
}

TEST_CASE("weighted_targets selection and midpoint") {
    PointCloud y;
    y.points = {{0, 0, 0}, {2, 0, 0}};
    Mat one_hot(2, 2);
    one_hot(0, 1) = 1.0;
    one_hot(1, 0) = 1.0;
    WeightedTargets sel = weighted_targets(y, Mat(), one_hot);
    CHECK(norm(sel.vcp.points[0] - Vec3{2, 0, 0}) == 0.0);
    CHECK(norm(sel.vcp.points[1] - Vec3{0, 0, 0}) == 0.0);

    Mat mid(1, 2, 0.5);
    WeightedTargets wm = weighted_targets(y, Mat(), mid);
    CHECK(norm(wm.vcp.points[0] - Vec3{1, 0, 0}) < 1e-15);
}

TEST_CASE("weighted_targets stays in target bounds") {
    Rng rng(3);
    PointCloud y = random_cloud(20, rng);
    Vec3 lo = y.points[0], hi = y.points[0];
    for (const Vec3& p : y.points)
        for (int c = 0; c < 3; ++c) {
            lo[c] = std::min(lo[c], p[c]);
            hi[c] = std::max(hi[c], p[c]);
        }
    for (int trial = 0; trial < 100; ++trial) {
        Mat m = random_stochastic(15, 20, rng);
        WeightedTargets wt = weighted_targets(y, Mat(), m);
        for (const Vec3& v : wt.vcp.points)
            for (int c = 0; c < 3; ++c) {
                CHECK(v[c] >= lo[c] - 1e-12);
                CHECK(v[c] <= hi[c] + 1e-12);
            }
    }
}

TEST_CASE("weighted_targets commutes with rigid motion of the target") {
    Rng rng(4);
    PointCloud y = random_cloud(12, rng);
    Mat m = random_stochastic(9, 12, rng);
    RigidTransform t = random_rigid(rng, 180, 1.0);
    PointCloud moved_first = weighted_targets(apply_transform(t, y), Mat(), m).vcp;
    PointCloud mixed_first = apply_transform(t, weighted_targets(y, Mat(), m).vcp);
    for (int i = 0; i < 9; ++i) CHECK(norm(moved_first.points[i] - mixed_first.points[i]) < 1e-9);
}

TEST_CASE("knn basics") {
    PointCloud p;
    p.points = {{0, 0, 0}, {1, 0, 0}, {3, 0, 0}};
    auto self = knn(p, p, 1, false);
    CHECK(self[0] == 0);
    CHECK(self[1] == 1);
    CHECK(self[2] == 2);

    auto excl = knn(p, p, 1, true);
    CHECK(excl[1] == 0);  // (1) is closer to (0) than to (3)

    CHECK_THROWS_AS(knn(p, p, 4, false), InputError);
    CHECK_THROWS_AS(knn(p, p, 3, true), InputError);
}

TEST_CASE("knn grid path agrees with brute force") {
    Rng rng(5);
    Mat ref(1000, 3);
    for (double& v : ref.a) v = rng.uniform(-1, 1);
    Mat query(200, 3);
    for (double& v : query.a) v = rng.uniform(-1.2, 1.2);
    auto brute = knn_brute(query, ref, 5);
    auto grid = knn_grid(query, ref, 5);
    CHECK(brute == grid);

    // self-query variant with exclusion
    auto brute_self = knn_brute(ref, ref, 3, true);
    auto grid_self = knn_grid(ref, ref, 3, true);
    CHECK(brute_self == grid_self);
}

TEST_CASE("knn grid handles duplicated points and ties by index") {
    Mat ref(6, 3);
    for (int i = 0; i < 6; ++i) ref(i, 0) = (i < 3) ? 0.0 : 1.0;  // two stacks of 3
    Mat query(1, 3);
    query(0, 0) = 0.4;
    auto b = knn_brute(query, ref, 4);
    auto g = knn_grid(query, ref, 4);
    CHECK(b == g);
    CHECK(b[0] == 0);
    CHECK(b[1] == 1);
    CHECK(b[2] == 2);
    CHECK(b[3] == 3);
}

TEST_CASE("chamfer examples") {
    Rng rng(6);
    PointCloud x = random_cloud(30, rng);
    CHECK(chamfer(x, x) == 0.0);

    PointCloud a, b;
    a.points = {{0, 0, 0}};
    b.points = {{1, 0, 0}};
    CHECK(chamfer(a, b) == doctest::Approx(2.0));

    PointCloud y = random_cloud(20, rng);
    CHECK(chamfer(x, y) == doctest::Approx(chamfer(y, x)));

    RigidTransform t = random_rigid(rng, 90, 0.5);
    CHECK(chamfer(apply_transform(t, x), apply_transform(t, y)) ==
          doctest::Approx(chamfer(x, y)).epsilon(1e-9));

    PointCloud empty;
    CHECK_THROWS_AS(chamfer(empty, x), InputError);
}

TEST_CASE("gt_matching_matrix on exact correspondence") {
    Rng rng(7);
    PointCloud x = random_cloud(25, rng);
    RigidTransform t = random_rigid(rng, 45, 0.5);
    PointCloud y = apply_transform(t, x);
    // shuffle target
    std::vector<int> perm(25);
    for (int i = 0; i < 25; ++i) perm[i] = i;
    rng.shuffle(perm);
    PointCloud ys;
    for (int i : perm) ys.points.push_back(y.points[i]);

    GtMatching gt = gt_matching_matrix(x, ys, t, 1e-6);
    CHECK(gt.outlier_count == 0);
    // permutation structure: every row and column has exactly one 1
    for (int i = 0; i < 25; ++i) {
        int row_count = 0;
        for (int j = 0; j < 25; ++j)
            if (gt.matrix(i, j) != 0.0) ++row_count;
        CHECK(row_count == 1);
    }
    for (int j = 0; j < 25; ++j) {
        int col_count = 0;
        for (int i = 0; i < 25; ++i)
            if (gt.matrix(i, j) != 0.0) ++col_count;
        CHECK(col_count == 1);
    }
}

TEST_CASE("gt_matching_matrix marks deleted partners as outliers") {
    Rng rng(8);
    PointCloud x = random_cloud(15, rng);
    RigidTransform t = random_rigid(rng, 30, 0.3);
    PointCloud y = apply_transform(t, x);
    int removed = 7;
    y.points.erase(y.points.begin() + removed);
    GtMatching gt = gt_matching_matrix(x, y, t, 1e-6);
    CHECK(gt.outlier_count == 1);
    CHECK(gt.outlier[removed] == 1);
    for (int j = 0; j < y.size(); ++j) CHECK(gt.matrix(removed, j) == 0.0);
}

TEST_CASE("gt_matching_matrix scene-style threshold") {
    Rng rng(9);
    PointCloud x = random_cloud(40, rng, 2.0);
    RigidTransform t = random_rigid(rng, 20, 0.2);
    PointCloud y = apply_transform(t, x);
    // jitter below / above the 3cm threshold
    for (int i = 0; i < 40; ++i) {
        double mag = (i % 4 == 0) ? 0.05 : 0.01;
        y.points[i] = y.points[i] + Vec3{mag, 0, 0};
    }
    GtMatching gt = gt_matching_matrix(x, y, t, 0.03);
    int outliers = 0;
    for (auto o : gt.outlier) outliers += o;
    CHECK(outliers == 10);  // the i % 4 == 0 rows
    CHECK_THROWS_AS(gt_matching_matrix(x, y, t, 0.0), InputError);
}

TEST_CASE("correct_match_ratio") {
    Rng rng(10);
    PointCloud x = random_cloud(20, rng);
    RigidTransform t = random_rigid(rng, 45, 0.5);
    PointCloud exact = apply_transform(t, x);
    CHECK(correct_match_ratio(exact, x, t) == doctest::Approx(1.0));

    PointCloud off = exact;
    for (auto& p : off.points) p = p + Vec3{0.2, 0, 0};
    CHECK(correct_match_ratio(off, x, t, 0.15) == doctest::Approx(0.0));

    PointCloud half = exact;
    for (int i = 0; i < 10; ++i) half.points[i] = half.points[i] + Vec3{1, 0, 0};
    CHECK(correct_match_ratio(half, x, t, 0.15) == doctest::Approx(0.5));

    PointCloud short_cloud = exact;
    short_cloud.points.pop_back();
    CHECK_THROWS_AS(correct_match_ratio(short_cloud, x, t), ShapeError);
}

}  // TEST_SUITE
