#include "vrnet/gradcheck.hpp"

#include <cmath>
#include <sstream>

#include "vrnet/data.hpp"
#include "vrnet/loss.hpp"
#include "vrnet/model.hpp"
#include "vrnet/procrustes.hpp"

namespace vrnet {

namespace {

constexpr double kPrimitiveTol = 1e-6;
constexpr double kModelTol = 1e-4;

Mat random_mat(int rows, int cols, Rng& rng, double lo = -2.0, double hi = 2.0) {
    Mat m(rows, cols);
    for (double& v : m.a) v = rng.uniform(lo, hi);
    return m;
}

// Bounded in [-2, 2] but kept a margin away from the relu kink.
Mat random_mat_off_kink(int rows, int cols, Rng& rng, double margin = 1e-3) {
    Mat m(rows, cols);
    for (double& v : m.a) {
        do {
            v = rng.uniform(-2.0, 2.0);
        } while (std::abs(v) < margin);
    }
    return m;
}

// Column entries within each pooling group separated by at least `gap` so a
// 1e-5 probe cannot flip the recorded argmax.
Mat random_mat_pool_safe(int rows, int cols, int group, Rng& rng, double gap = 1e-3) {
    while (true) {
        Mat m = random_mat(rows, cols, rng);
        bool ok = true;
        for (int g = 0; g < rows / group && ok; ++g)
            for (int j = 0; j < cols && ok; ++j)
                for (int a = 0; a < group && ok; ++a)
                    for (int b = a + 1; b < group && ok; ++b)
                        if (std::abs(m(g * group + a, j) - m(g * group + b, j)) < gap) ok = false;
        if (ok) return m;
    }
}

struct Ctx {
    GradCheckReport report;
    void run(const std::string& name, double tol, const ad::GraphBuilder& build,
             const std::vector<Mat>& leaves) {
        GradCheckBlock b;
        b.name = name;
        b.tolerance = tol;
        b.max_rel_err = ad::grad_check(build, leaves);
        b.pass = b.max_rel_err < tol;
        report.all_pass = report.all_pass && b.pass;
        report.worst = std::max(report.worst, b.max_rel_err);
        report.blocks.push_back(std::move(b));
    }
    void add(const std::string& name, double tol, double err) {
        GradCheckBlock b;
        b.name = name;
        b.tolerance = tol;
        b.max_rel_err = err;
        b.pass = err < tol;
        report.all_pass = report.all_pass && b.pass;
        report.worst = std::max(report.worst, err);
        report.blocks.push_back(std::move(b));
    }
};

void check_primitives(Ctx& ctx, Rng& rng) {
    using ad::NodeId;
    using ad::Tape;

    ctx.run("primitive.add", kPrimitiveTol,
            [](Tape& t, const std::vector<NodeId>& l) {
                return t.sum_all(t.square(t.add(l[0], l[1])));
            },
            {random_mat(3, 4, rng), random_mat(3, 4, rng)});

    ctx.run("primitive.add_rowvec", kPrimitiveTol,
            [](Tape& t, const std::vector<NodeId>& l) {
                return t.sum_all(t.square(t.add(l[0], l[1])));
            },
            {random_mat(4, 3, rng), random_mat(1, 3, rng)});

    ctx.run("primitive.scalar_mul", kPrimitiveTol,
            [](Tape& t, const std::vector<NodeId>& l) {
                return t.sum_all(t.square(t.scale(l[0], -1.7)));
            },
            {random_mat(3, 3, rng)});

    ctx.run("primitive.matmul", kPrimitiveTol,
            [](Tape& t, const std::vector<NodeId>& l) {
                return t.sum_all(t.square(t.matmul(l[0], l[1])));
            },
            {random_mat(3, 4, rng), random_mat(4, 2, rng)});

    ctx.run("primitive.transpose", kPrimitiveTol,
            [](Tape& t, const std::vector<NodeId>& l) {
                return t.sum_all(t.square(t.matmul(t.transpose(l[0]), l[1])));
            },
            {random_mat(3, 4, rng), random_mat(3, 2, rng)});

    ctx.run("primitive.concat", kPrimitiveTol,
            [](Tape& t, const std::vector<NodeId>& l) {
                return t.sum_all(t.square(t.concat_cols(l[0], l[1])));
            },
            {random_mat(3, 2, rng), random_mat(3, 3, rng)});

    ctx.run("primitive.relu", kPrimitiveTol,
            [](Tape& t, const std::vector<NodeId>& l) {
                return t.sum_all(t.square(t.relu(l[0])));
            },
            {random_mat_off_kink(4, 4, rng)});

    ctx.run("primitive.row_softmax", kPrimitiveTol,
            [](Tape& t, const std::vector<NodeId>& l) {
                return t.sum_all(t.square(t.row_softmax(l[0])));
            },
            {random_mat(3, 5, rng)});

    ctx.run("primitive.max_over_axis", kPrimitiveTol,
            [](Tape& t, const std::vector<NodeId>& l) {
                return t.sum_all(t.square(t.max_pool_rows(l[0], 3)));
            },
            {random_mat_pool_safe(9, 4, 3, rng)});

    ctx.run("primitive.gather_rows", kPrimitiveTol,
            [](Tape& t, const std::vector<NodeId>& l) {
                return t.sum_all(t.square(t.gather_rows(l[0], {0, 2, 2, 1})));
            },
            {random_mat(4, 3, rng)});

    ctx.run("primitive.gather_cols", kPrimitiveTol,
            [](Tape& t, const std::vector<NodeId>& l) {
                return t.sum_all(t.square(t.gather_cols(l[0], {1, 1, 0})));
            },
            {random_mat(3, 4, rng)});

    ctx.run("primitive.gather_elems", kPrimitiveTol,
            [](Tape& t, const std::vector<NodeId>& l) {
                return t.sum_all(t.square(t.gather_elems(l[0], {0, 1, 1, 2}, {1, 0, 0, 2})));
            },
            {random_mat(3, 3, rng)});

    {
        // mean(square(norm(...))) alone is nearly input-invariant (the output
        // is standardized), which leaves no gradient to compare; mixing in a
        // constant breaks the invariance.
        Mat mix = random_mat(5, 3, rng);
        ctx.run("primitive.norm_channels", kPrimitiveTol,
                [mix](Tape& t, const std::vector<NodeId>& l) {
                    return t.mean_all(t.square(t.add(t.norm_channels(l[0], l[1], l[2]), t.constant(mix))));
                },
                {random_mat(5, 3, rng), random_mat(1, 3, rng), random_mat(1, 3, rng)});
    }

    ctx.run("primitive.mean", kPrimitiveTol,
            [](Tape& t, const std::vector<NodeId>& l) { return t.square(t.mean_all(l[0])); },
            {random_mat(4, 3, rng)});

    ctx.run("primitive.sum", kPrimitiveTol,
            [](Tape& t, const std::vector<NodeId>& l) { return t.square(t.sum_all(l[0])); },
            {random_mat(4, 3, rng)});

    ctx.run("primitive.square", kPrimitiveTol,
            [](Tape& t, const std::vector<NodeId>& l) { return t.mean_all(t.square(l[0])); },
            {random_mat(4, 4, rng)});

    ctx.run("primitive.sqrt", kPrimitiveTol,
            [](Tape& t, const std::vector<NodeId>& l) { return t.sum_all(t.sqrt(l[0])); },
            {random_mat(3, 3, rng, 0.5, 2.0)});
}

// Tiny model configuration keeping the end-to-end finite differencing fast.
ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.filters = {8, 8};
    cfg.knn_k = 3;
    cfg.heads = 2;
    cfg.walk = {8, 3};
    return cfg;
}

// Leaf mats in store iteration order plus a builder-side name list. The
// zero-initialized offset head is re-randomized so the probe point is
// generic rather than the degenerate init configuration.
std::pair<std::vector<std::string>, std::vector<Mat>> store_leaves(const ad::ParamStore& store,
                                                                   Rng& rng) {
    std::vector<std::string> names;
    std::vector<Mat> mats;
    for (const auto& [name, entry] : store.entries) {
        names.push_back(name);
        Mat m = entry.value;
        bool all_zero = true;
        for (double v : m.a) all_zero = all_zero && v == 0.0;
        if (all_zero && name.rfind("walk.", 0) == 0)
            for (double& v : m.a) v = rng.uniform(-0.2, 0.2);
        mats.push_back(std::move(m));
    }
    return {names, mats};
}

ParamLeaves leaves_from_ids(const std::vector<std::string>& names,
                            const std::vector<ad::NodeId>& ids) {
    ParamLeaves leaves;
    for (size_t i = 0; i < names.size(); ++i) leaves.ids[names[i]] = ids[i];
    return leaves;
}

void check_model_blocks(Ctx& ctx, Rng& rng) {
    using ad::NodeId;
    using ad::Tape;

    // edge_conv on 16 points.
    {
        Mat coords = random_mat(16, 3, rng, -1.0, 1.0);
        std::vector<std::string> names = {"ec.weight", "ec.norm.gamma", "ec.norm.beta"};
        std::vector<Mat> leaves = {random_mat(6, 8, rng, -0.5, 0.5),
                                   random_mat(1, 8, rng, 0.5, 1.5), random_mat(1, 8, rng, -0.5, 0.5)};
        ctx.run("model.edge_conv", kModelTol,
                [coords, names](Tape& t, const std::vector<NodeId>& ids) {
                    ParamLeaves pl = leaves_from_ids(names, ids);
                    NodeId f = t.constant(coords);
                    return t.mean_all(t.square(edge_conv(t, f, 3, pl, "ec", false)));
                },
                leaves);
    }

    ModelConfig cfg = tiny_config();

    // transformer_attend on two 8-point feature sets.
    {
        ad::ParamStore store;
        Rng init = rng.fork(11);
        init_params(store, cfg, init);
        for (const std::string& name : store.names("dgcnn.")) store.entries.erase(name);
        for (const std::string& name : store.names("walk.")) store.entries.erase(name);
        auto [names, mats] = store_leaves(store, rng);
        Mat fx = random_mat(8, cfg.feature_dim(), rng, -1.0, 1.0);
        Mat fy = random_mat(8, cfg.feature_dim(), rng, -1.0, 1.0);
        ctx.run("model.transformer_attend", kModelTol,
                [names, fx, fy, cfg](Tape& t, const std::vector<NodeId>& ids) {
                    ParamLeaves pl = leaves_from_ids(names, ids);
                    auto [px, py] = transformer_attend(t, t.constant(fx), t.constant(fy), cfg, pl);
                    return t.add(t.mean_all(t.square(px)), t.mean_all(t.square(py)));
                },
                mats);
    }

    // correction_walk, two layers.
    {
        ad::ParamStore store;
        Rng init = rng.fork(12);
        init_params(store, cfg, init);
        for (const std::string& name : store.names("dgcnn.")) store.entries.erase(name);
        for (const std::string& name : store.names("xf.")) store.entries.erase(name);
        auto [names, mats] = store_leaves(store, rng);
        Mat seeds = random_mat(6, 2 * cfg.feature_dim(), rng, -1.0, 1.0);
        ctx.run("model.correction_walk", kModelTol,
                [names, seeds, cfg](Tape& t, const std::vector<NodeId>& ids) {
                    ParamLeaves pl = leaves_from_ids(names, ids);
                    return t.mean_all(t.square(correction_walk(t, t.constant(seeds), cfg, pl)));
                },
                mats);
    }
}

// Direct (non-tape) check of the rigid-solve VJP against finite differences.
void check_solve_rigid_vjp(Ctx& ctx, Rng& rng) {
    PointCloud x, y;
    for (int i = 0; i < 8; ++i) {
        x.points.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
        y.points.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
    }
    Mat3 g_r;
    Vec3 g_t;
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) g_r[a][b] = rng.uniform(-1, 1);
        g_t[static_cast<size_t>(a)] = rng.uniform(-1, 1);
    }
    std::vector<Vec3> analytic = solve_rigid_vjp(x, y, g_r, g_t);

    auto loss_of = [&](const PointCloud& yy) {
        RigidTransform t = solve_rigid(x, yy);
        double acc = 0.0;
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) acc += g_r[a][b] * t.rotation[a][b];
            acc += g_t[static_cast<size_t>(a)] * t.translation[static_cast<size_t>(a)];
        }
        return acc;
    };

    double step = 1e-5;
    double max_rel = 0.0;
    PointCloud probe = y;
    for (int i = 0; i < 8; ++i)
        for (int c = 0; c < 3; ++c) {
            double orig = probe.points[static_cast<size_t>(i)][static_cast<size_t>(c)];
            probe.points[static_cast<size_t>(i)][static_cast<size_t>(c)] = orig + step;
            double fp = loss_of(probe);
            probe.points[static_cast<size_t>(i)][static_cast<size_t>(c)] = orig - step;
            double fm = loss_of(probe);
            probe.points[static_cast<size_t>(i)][static_cast<size_t>(c)] = orig;
            double fd = (fp - fm) / (2.0 * step);
            double an = analytic[static_cast<size_t>(i)][static_cast<size_t>(c)];
            double denom = std::max({std::abs(an), std::abs(fd), 1e-8});
            max_rel = std::max(max_rel, std::abs(an - fd) / denom);
        }
    ctx.add("procrustes.solve_rigid_vjp", kModelTol, max_rel);
}

void check_losses_end_to_end(Ctx& ctx, Rng& rng) {
    using ad::NodeId;
    using ad::Tape;

    ModelConfig cfg = tiny_config();
    ad::ParamStore store;
    Rng init = rng.fork(21);
    init_params(store, cfg, init);
    auto [names, mats] = store_leaves(store, rng);

    PairSetting setting;
    setting.mode = PairMode::kCO;
    setting.base_n = 8;
    setting.keep_n = 8;
    Rng pair_rng = rng.fork(22);
    Rng base_rng = rng.fork(23);
    PointCloud base = sample_shape(ShapeKind::kGaussianBlobs, 8, base_rng);
    RegistrationPair pair = make_pair(base, setting, SplitRegime::kUPC, pair_rng);

    auto pipeline = [&, names](Tape& t, const std::vector<NodeId>& ids, PipelineDepth depth) {
        ParamLeaves pl = leaves_from_ids(names, ids);
        PipelineOptions opts;
        opts.depth = depth;
        return build_pipeline_with_leaves(t, pair.source, pair.target, std::move(pl), cfg, opts);
    };

    ctx.run("loss.l0", kModelTol,
            [&](Tape& t, const std::vector<NodeId>& ids) {
                PipelineNodes nodes = pipeline(t, ids, PipelineDepth::kMatching);
                return loss_graph::l0(t, nodes.match, pair.gt_matrix);
            },
            mats);

    ctx.run("loss.l1", kModelTol,
            [&](Tape& t, const std::vector<NodeId>& ids) {
                PipelineNodes nodes = pipeline(t, ids, PipelineDepth::kFull);
                Rng sub(424242);
                return loss_graph::l1(t, pair.source, nodes.rcp, nodes.pose, 4, 4, sub);
            },
            mats);

    ctx.run("loss.l2", kModelTol,
            [&](Tape& t, const std::vector<NodeId>& ids) {
                PipelineNodes nodes = pipeline(t, ids, PipelineDepth::kFull);
                return loss_graph::l2(t, pair.source, nodes.rcp);
            },
            mats);

    ctx.run("loss.l3", kModelTol,
            [&](Tape& t, const std::vector<NodeId>& ids) {
                PipelineNodes nodes = pipeline(t, ids, PipelineDepth::kFull);
                return loss_graph::l3(t, nodes.pose, pair.source, nodes.rcp);
            },
            mats);

    ctx.run("loss.l4", kModelTol,
            [&](Tape& t, const std::vector<NodeId>& ids) {
                PipelineNodes nodes = pipeline(t, ids, PipelineDepth::kFull);
                return loss_graph::l4(t, pair.gt_transform, pair.source, nodes.vcp, nodes.delta);
            },
            mats);

    ctx.run("loss.hybrid", kModelTol,
            [&](Tape& t, const std::vector<NodeId>& ids) {
                PipelineNodes nodes = pipeline(t, ids, PipelineDepth::kFull);
                Rng sub(424242);
                NodeId l1 = loss_graph::l1(t, pair.source, nodes.rcp, nodes.pose, 4, 4, sub);
                NodeId l2 = loss_graph::l2(t, pair.source, nodes.rcp);
                NodeId l3 = loss_graph::l3(t, nodes.pose, pair.source, nodes.rcp);
                NodeId l4 = loss_graph::l4(t, pair.gt_transform, pair.source, nodes.vcp, nodes.delta);
                return loss_graph::hybrid(t, l1, l2, l3, l4, LossWeights{});
            },
            mats);
}

}  // namespace

GradCheckReport run_gradcheck(uint64_t seed) {
    Ctx ctx;
    Rng rng(seed);
    check_primitives(ctx, rng);
    check_model_blocks(ctx, rng);
    check_solve_rigid_vjp(ctx, rng);
    check_losses_end_to_end(ctx, rng);
    return ctx.report;
}

std::string format_gradcheck(const GradCheckReport& report) {
    std::ostringstream out;
    for (const auto& b : report.blocks) {
        out << (b.pass ? "[PASS] " : "[FAIL] ") << b.name << "  max rel err " << b.max_rel_err
            << "  (tol " << b.tolerance << ")\n";
    }
    out << (report.all_pass ? "gradcheck: all blocks passed" : "gradcheck: FAILURES present")
        << ", worst " << report.worst << "\n";
    return out.str();
}

}  // namespace vrnet
