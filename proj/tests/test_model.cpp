#include <doctest.h>

#include <cmath>

#include "vrnet/model.hpp"

using namespace vrnet;
using ad::NodeId;
using ad::Tape;

namespace {

PointCloud random_cloud(int n, Rng& rng) {
    PointCloud p;
    for (int i = 0; i < n; ++i)
        p.points.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
    return p;
}

Mat random_mat(int r, int c, Rng& rng, double lo = -1, double hi = 1) {
    Mat m(r, c);
    for (double& v : m.a) v = rng.uniform(lo, hi);
    return m;
}

ModelConfig tiny_cfg() {
    ModelConfig cfg;
    cfg.filters = {8, 8};
    cfg.knn_k = 3;
    cfg.heads = 2;
    cfg.walk = {8, 3};
    return cfg;
}

ad::ParamStore tiny_store(uint64_t seed, const ModelConfig& cfg) {
    ad::ParamStore store;
    Rng rng(seed);
    init_params(store, cfg, rng);
    return store;
}

// Plain-loop reimplementation of one edge-conv layer, independent of the tape.
Mat edge_conv_oracle(const Mat& f, int k, const Mat& w, const Mat& gamma,
                     const Mat& beta, bool concat_diff) {
    int n = f.rows;
    int cin = f.cols;
    int cout = w.cols;
    std::vector<int> nn = knn(f, f, k, true);
    // edge features
    Mat e(n * k, 2 * cin);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j) {
            int row = i * k + j;
            int nb = nn[static_cast<size_t>(row)];
            for (int c = 0; c < cin; ++c) {
                e(row, c) = f(i, c);
                e(row, cin + c) = concat_diff ? f(nb, c) - f(i, c) : f(nb, c);
            }
        }
    // linear (bias-free: the norm would cancel it)
    Mat h(n * k, cout);
    for (int r = 0; r < n * k; ++r)
        for (int c = 0; c < cout; ++c) {
            double acc = 0.0;
            for (int m = 0; m < 2 * cin; ++m) acc += e(r, m) * w(m, c);
            h(r, c) = acc;
        }
    // per-channel standardization over rows
    for (int c = 0; c < cout; ++c) {
        double mean = 0.0;
        for (int r = 0; r < n * k; ++r) mean += h(r, c);
        mean /= n * k;
        double var = 0.0;
        for (int r = 0; r < n * k; ++r) var += (h(r, c) - mean) * (h(r, c) - mean);
        var /= n * k;
        double inv = 1.0 / std::sqrt(var + 1e-5);
        for (int r = 0; r < n * k; ++r) h(r, c) = gamma(0, c) * (h(r, c) - mean) * inv + beta(0, c);
    }
    // relu + maxpool over each group of k rows
    Mat out(n, cout);
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < cout; ++c) {
            double best = -1e300;
            for (int j = 0; j < k; ++j) best = std::max(best, std::max(0.0, h(i * k + j, c)));
            out(i, c) = best;
        }
    return out;
}

std::vector<int> random_perm(int n, Rng& rng) {
    std::vector<int> p(n);
    for (int i = 0; i < n; ++i) p[i] = i;
    rng.shuffle(p);
    return p;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("edge_conv identical features give identical outputs") {
    Rng rng(1);
    Tape t;
    Mat f(6, 3, 0.7);  // all points identical in feature space
    ParamLeaves leaves;
    leaves.ids["ec.weight"] = t.leaf(random_mat(6, 4, rng), false);
    leaves.ids["ec.norm.gamma"] = t.leaf(Mat(1, 4, 1.0), false);
    leaves.ids["ec.norm.beta"] = t.leaf(Mat(1, 4, 0.0), false);
    NodeId out = edge_conv(t, t.constant(f), 3, leaves, "ec", false);
    const Mat& o = t.value(out);
    for (int i = 1; i < o.rows; ++i)
        for (int c = 0; c < o.cols; ++c) CHECK(o(i, c) == doctest::Approx(o(0, c)));
}

TEST_CASE("edge_conv with two points uses the other point") {
    Rng rng(2);
    Tape t;
    Mat f(2, 3);
    f(0, 0) = 1.0;
    f(1, 1) = 1.0;
    Mat w = random_mat(6, 2, rng);
    ParamLeaves leaves;
    leaves.ids["ec.weight"] = t.leaf(w, false);
    leaves.ids["ec.norm.gamma"] = t.leaf(Mat(1, 2, 1.0), false);
    leaves.ids["ec.norm.beta"] = t.leaf(Mat(1, 2, 0.0), false);
    NodeId out = edge_conv(t, t.constant(f), 1, leaves, "ec", false);
    Mat oracle = edge_conv_oracle(f, 1, w, Mat(1, 2, 1.0), Mat(1, 2, 0.0), false);
    for (int i = 0; i < 2; ++i)
        for (int c = 0; c < 2; ++c) CHECK(t.value(out)(i, c) == doctest::Approx(oracle(i, c)));
}

TEST_CASE("edge_conv matches naive double-loop oracle on 16 random points") {
    Rng rng(3);
    Mat f = random_mat(16, 3, rng);
    Mat w = random_mat(6, 8, rng);
    Mat gamma = random_mat(1, 8, rng, 0.5, 1.5);
    Mat beta = random_mat(1, 8, rng, -0.5, 0.5);
    for (bool diff : {false, true}) {
        Tape t;
        ParamLeaves leaves;
        leaves.ids["ec.weight"] = t.leaf(w, false);
        leaves.ids["ec.norm.gamma"] = t.leaf(gamma, false);
        leaves.ids["ec.norm.beta"] = t.leaf(beta, false);
        NodeId out = edge_conv(t, t.constant(f), 4, leaves, "ec", diff);
        Mat oracle = edge_conv_oracle(f, 4, w, gamma, beta, diff);
        for (int i = 0; i < 16; ++i)
            for (int c = 0; c < 8; ++c)
                CHECK(t.value(out)(i, c) == doctest::Approx(oracle(i, c)).epsilon(1e-12));
    }
}

TEST_CASE("edge_conv single point is degenerate") {
    Tape t;
    ParamLeaves leaves;
    CHECK_THROWS_AS(edge_conv(t, t.constant(Mat(1, 3)), 3, leaves, "ec", false), DegenerateError);
}

TEST_CASE("edge_conv clamps k to n - 1 on small clouds") {
    Rng rng(31);
    Tape t;
    Mat f = random_mat(4, 3, rng);
    ParamLeaves leaves;
    leaves.ids["ec.weight"] = t.leaf(random_mat(6, 5, rng), false);
    leaves.ids["ec.norm.gamma"] = t.leaf(Mat(1, 5, 1.0), false);
    leaves.ids["ec.norm.beta"] = t.leaf(Mat(1, 5, 0.0), false);
    NodeId out = edge_conv(t, t.constant(f), 10, leaves, "ec", false);  // k > n - 1
    CHECK(t.value(out).rows == 4);
    CHECK(t.value(out).cols == 5);
    CHECK(all_finite(t.value(out)));
}

TEST_CASE("dgcnn_forward shapes at desk and paper scale") {
    {
        ModelConfig cfg;  // desk defaults [16,16,32,32,64]
        ad::ParamStore store = tiny_store(4, cfg);
        Rng rng(5);
        Tape t;
        ParamLeaves leaves = leaves_for(t, store, nullptr);
        NodeId out = dgcnn_forward(t, random_mat(64, 3, rng), cfg, leaves);
        CHECK(t.value(out).rows == 64);
        CHECK(t.value(out).cols == 64);
    }
    {
        ModelConfig cfg = ModelConfig::paper();
        ad::ParamStore store = tiny_store(6, cfg);
        Rng rng(7);
        Tape t;
        ParamLeaves leaves = leaves_for(t, store, nullptr);
        NodeId out = dgcnn_forward(t, random_mat(128, 3, rng), cfg, leaves);
        CHECK(t.value(out).rows == 128);
        CHECK(t.value(out).cols == 512);
    }
}

TEST_CASE("dgcnn_forward is permutation equivariant") {
    ModelConfig cfg = tiny_cfg();
    ad::ParamStore store = tiny_store(8, cfg);
    Rng rng(9);
    Mat coords = random_mat(20, 3, rng);
    Tape t1;
    ParamLeaves l1 = leaves_for(t1, store, nullptr);
    Mat base = t1.value(dgcnn_forward(t1, coords, cfg, l1));

    std::vector<int> perm = random_perm(20, rng);
    Mat permuted(20, 3);
    for (int i = 0; i < 20; ++i)
        for (int c = 0; c < 3; ++c) permuted(i, c) = coords(perm[i], c);
    Tape t2;
    ParamLeaves l2 = leaves_for(t2, store, nullptr);
    Mat out = t2.value(dgcnn_forward(t2, permuted, cfg, l2));
    for (int i = 0; i < 20; ++i)
        for (int c = 0; c < base.cols; ++c)
            CHECK(out(i, c) == doctest::Approx(base(perm[i], c)).epsilon(1e-9));
}

TEST_CASE("transformer residual identity under zeroed projection") {
    ModelConfig cfg = tiny_cfg();
    ad::ParamStore store = tiny_store(10, cfg);
    store.value("xf.proj.weight") = Mat(cfg.feature_dim(), cfg.feature_dim());
    store.value("xf.proj.bias") = Mat(1, cfg.feature_dim());
    Rng rng(11);
    Mat fx = random_mat(7, cfg.feature_dim(), rng);
    Mat fy = random_mat(9, cfg.feature_dim(), rng);
    Tape t;
    ParamLeaves leaves = leaves_for(t, store, nullptr);
    auto [px, py] = transformer_attend(t, t.constant(fx), t.constant(fy), cfg, leaves);
    for (int i = 0; i < 7; ++i)
        for (int c = 0; c < cfg.feature_dim(); ++c) CHECK(t.value(px)(i, c) == fx(i, c));
    for (int i = 0; i < 9; ++i)
        for (int c = 0; c < cfg.feature_dim(); ++c) CHECK(t.value(py)(i, c) == fy(i, c));
}

TEST_CASE("attention rows sum to one") {
    ModelConfig cfg = tiny_cfg();
    ad::ParamStore store = tiny_store(12, cfg);
    Rng rng(13);
    Tape t;
    ParamLeaves leaves = leaves_for(t, store, nullptr);
    std::vector<NodeId> attn;
    transformer_attend(t, t.constant(random_mat(6, cfg.feature_dim(), rng)),
                       t.constant(random_mat(8, cfg.feature_dim(), rng)), cfg, leaves, &attn);
    CHECK(attn.size() == 4u * cfg.heads);  // 2 encoders + 2 decoders, per head
    for (NodeId a : attn) {
        const Mat& m = t.value(a);
        for (int i = 0; i < m.rows; ++i) {
            double sum = 0.0;
            for (int j = 0; j < m.cols; ++j) sum += m(i, j);
            CHECK(std::abs(sum - 1.0) < 1e-9);
        }
    }
}

TEST_CASE("transformer permutation of Y leaves phi_X unchanged") {
    ModelConfig cfg = tiny_cfg();
    ad::ParamStore store = tiny_store(14, cfg);
    Rng rng(15);
    Mat fx = random_mat(6, cfg.feature_dim(), rng);
    Mat fy = random_mat(10, cfg.feature_dim(), rng);

    Tape t1;
    ParamLeaves l1 = leaves_for(t1, store, nullptr);
    auto [px1, py1] = transformer_attend(t1, t1.constant(fx), t1.constant(fy), cfg, l1);
    Mat phix = t1.value(px1);
    Mat phiy = t1.value(py1);

    std::vector<int> perm = random_perm(10, rng);
    Mat fyp(10, cfg.feature_dim());
    for (int i = 0; i < 10; ++i)
        for (int c = 0; c < cfg.feature_dim(); ++c) fyp(i, c) = fy(perm[i], c);
    Tape t2;
    ParamLeaves l2 = leaves_for(t2, store, nullptr);
    auto [px2, py2] = transformer_attend(t2, t2.constant(fx), t2.constant(fyp), cfg, l2);
    for (int i = 0; i < 6; ++i)
        for (int c = 0; c < cfg.feature_dim(); ++c)
            CHECK(t2.value(px2)(i, c) == doctest::Approx(phix(i, c)).epsilon(1e-9));
    for (int i = 0; i < 10; ++i)
        for (int c = 0; c < cfg.feature_dim(); ++c)
            CHECK(t2.value(py2)(i, c) == doctest::Approx(phiy(perm[i], c)).epsilon(1e-9));
}

TEST_CASE("correction_walk zero final layer gives zero offsets") {
    ModelConfig cfg = tiny_cfg();
    ad::ParamStore store = tiny_store(16, cfg);
    size_t last = cfg.walk.size() - 1;
    std::string prefix = "walk.layer" + std::to_string(last);
    store.value(prefix + ".weight") = Mat(cfg.walk[last - 1], 3);
    store.value(prefix + ".bias") = Mat(1, 3);
    Rng rng(17);
    Tape t;
    ParamLeaves leaves = leaves_for(t, store, nullptr);
    NodeId delta = correction_walk(t, t.constant(random_mat(5, 2 * cfg.feature_dim(), rng)), cfg, leaves);
    for (double v : t.value(delta).a) CHECK(v == 0.0);
}

TEST_CASE("correction_walk paper widths produce the documented chain") {
    ModelConfig cfg = ModelConfig::paper();
    ad::ParamStore store = tiny_store(18, cfg);
    // input 2c = 1024, then 512,256,512,256,128,16,3
    CHECK(store.value("walk.layer0.weight").rows == 1024);
    CHECK(store.value("walk.layer0.weight").cols == 512);
    CHECK(store.value("walk.layer1.weight").cols == 256);
    CHECK(store.value("walk.layer2.weight").cols == 512);
    CHECK(store.value("walk.layer3.weight").cols == 256);
    CHECK(store.value("walk.layer4.weight").cols == 128);
    CHECK(store.value("walk.layer5.weight").cols == 16);
    CHECK(store.value("walk.layer6.weight").cols == 3);
    Rng rng(19);
    Tape t;
    ParamLeaves leaves = leaves_for(t, store, nullptr);
    NodeId delta = correction_walk(t, t.constant(random_mat(4, 1024, rng)), cfg, leaves);
    CHECK(t.value(delta).rows == 4);
    CHECK(t.value(delta).cols == 3);
    CHECK(all_finite(t.value(delta)));
}

TEST_CASE("vrnet_register zero-initialized walk reduces to the VCP pipeline") {
    ModelConfig cfg = tiny_cfg();
    ad::ParamStore store = tiny_store(20, cfg);
    size_t last = cfg.walk.size() - 1;
    store.value("walk.layer" + std::to_string(last) + ".weight") = Mat(cfg.walk[last - 1], 3);
    store.value("walk.layer" + std::to_string(last) + ".bias") = Mat(1, 3);

    Rng rng(21);
    PointCloud x = random_cloud(12, rng);
    PointCloud y = random_cloud(14, rng);
    RegistrationResult with = vrnet_register(x, y, store, cfg, true);
    RegistrationResult without = vrnet_register(x, y, store, cfg, false);
    CHECK(rotation_error_deg(with.transform.rotation, without.transform.rotation) < 1e-12);
    CHECK(norm(with.transform.translation - without.transform.translation) < 1e-12);
    for (int i = 0; i < 12; ++i)
        CHECK(norm(with.rcp.points[i] - without.vcp.points[i]) == 0.0);
}

TEST_CASE("vrnet_register rcp equals vcp plus offsets") {
    ModelConfig cfg = tiny_cfg();
    ad::ParamStore store = tiny_store(22, cfg);
    Rng rng(23);
    PointCloud x = random_cloud(10, rng);
    PointCloud y = random_cloud(11, rng);
    RegistrationResult r = vrnet_register(x, y, store, cfg);
    for (int i = 0; i < 10; ++i)
        for (int c = 0; c < 3; ++c)
            CHECK(r.rcp.points[i][c] == r.vcp.points[i][c] + r.offsets(i, c));
}

TEST_CASE("vrnet_register vcp lies inside target bounds") {
    ModelConfig cfg = tiny_cfg();
    ad::ParamStore store = tiny_store(24, cfg);
    Rng rng(25);
    PointCloud x = random_cloud(15, rng);
    PointCloud y = random_cloud(18, rng);
    RegistrationResult r = vrnet_register(x, y, store, cfg);
    Vec3 lo = y.points[0], hi = y.points[0];
    for (const Vec3& p : y.points)
        for (int c = 0; c < 3; ++c) {
            lo[c] = std::min(lo[c], p[c]);
            hi[c] = std::max(hi[c], p[c]);
        }
    for (const Vec3& v : r.vcp.points)
        for (int c = 0; c < 3; ++c) {
            CHECK(v[c] >= lo[c] - 1e-12);
            CHECK(v[c] <= hi[c] + 1e-12);
        }
}

TEST_CASE("vrnet_register permutation equivariance") {
    ModelConfig cfg = tiny_cfg();
    ad::ParamStore store = tiny_store(26, cfg);
    Rng rng(27);
    PointCloud x = random_cloud(9, rng);
    PointCloud y = random_cloud(11, rng);
    RegistrationResult base = vrnet_register(x, y, store, cfg);

    // permute X: rows of M, vcp, rcp, offsets permute; pose unchanged
    std::vector<int> px = random_perm(9, rng);
    PointCloud xp;
    for (int i : px) xp.points.push_back(x.points[i]);
    RegistrationResult rx = vrnet_register(xp, y, store, cfg);
    CHECK(rotation_error_deg(rx.transform.rotation, base.transform.rotation) < 1e-9);
    CHECK(norm(rx.transform.translation - base.transform.translation) < 1e-9);
    for (int i = 0; i < 9; ++i) {
        for (int j = 0; j < 11; ++j)
            CHECK(rx.match(i, j) == doctest::Approx(base.match(px[i], j)).epsilon(1e-9));
        CHECK(norm(rx.rcp.points[i] - base.rcp.points[px[i]]) < 1e-9);
    }

    // permute Y: columns of M permute; vcp and pose unchanged
    std::vector<int> py = random_perm(11, rng);
    PointCloud yp;
    for (int j : py) yp.points.push_back(y.points[j]);
    RegistrationResult ry = vrnet_register(x, yp, store, cfg);
    CHECK(rotation_error_deg(ry.transform.rotation, base.transform.rotation) < 1e-9);
    for (int i = 0; i < 9; ++i) {
        CHECK(norm(ry.vcp.points[i] - base.vcp.points[i]) < 1e-9);
        for (int j = 0; j < 11; ++j)
            CHECK(ry.match(i, j) == doctest::Approx(base.match(i, py[j])).epsilon(1e-9));
    }
}

TEST_CASE("vrnet_register rejects tiny clouds") {
    ModelConfig cfg = tiny_cfg();
    ad::ParamStore store = tiny_store(28, cfg);
    Rng rng(29);
    PointCloud two = random_cloud(2, rng);
    PointCloud ok = random_cloud(5, rng);
    CHECK_THROWS_AS(vrnet_register(two, ok, store, cfg), InputError);
    CHECK_THROWS_AS(vrnet_register(ok, two, store, cfg), InputError);
}

TEST_CASE("model config validation") {
    ModelConfig bad = tiny_cfg();
    bad.walk = {8, 4};
    CHECK_THROWS_AS(bad.validate(), InputError);
    ModelConfig bad2 = tiny_cfg();
    bad2.heads = 3;  // does not divide 8
    CHECK_THROWS_AS(bad2.validate(), InputError);
}

}  // TEST_SUITE
