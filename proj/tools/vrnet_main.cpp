// Experiment front door: dataset generation, two-stage training, registration
// (learned or ICP), metric evaluation, and the gradient-check suite. All
// commands are config-driven and deterministic: identical (command, config,
// seed) runs produce byte-identical manifests and reports.
//
// Exit codes: 0 ok, 2 usage error, 3 numeric failure (message names the
// stage), 1 anything else.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "vrnet/data.hpp"
#include "vrnet/eval.hpp"
#include "vrnet/gradcheck.hpp"
#include "vrnet/icp.hpp"
#include "vrnet/loss.hpp"
#include "vrnet/matching.hpp"
#include "vrnet/model.hpp"
#include "vrnet/procrustes.hpp"
#include "vrnet/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vrnet;

namespace {

json default_config() {
    return json{
        {"seed", 1},
        {"threads", 1},
        {"data",
         {{"shape", "gaussian-blobs"},
          {"mesh", ""},
          {"role", "train"},
          {"pairs", 16},
          {"mode", "CO"},
          {"split", "UPC"},
          {"base_n", 1024},
          {"keep_n", 768},
          {"pv_rs_intermediate", 896},
          {"rot_range_deg", 45.0},
          {"trans_range", 0.5},
          {"noise_sigma", 0.01},
          {"noise_clip", 0.05},
          {"tau_gt_clean", 1e-6},
          {"tau_gt_noisy", 0.05},
          {"viewpoint", "same"}}},
        {"model",
         {{"filters", {16, 16, 32, 32, 64}},
          {"k", 10},
          {"heads", 2},
          {"encoder_layers", 1},
          {"decoder_layers", 1},
          {"walk", {64, 32, 16, 3}},
          {"edge_concat_diff", false}}},
        {"train",
         {{"stage1", {{"lr", 1e-3}, {"steps", 500}, {"batch", 4}}},
          {"stage2", {{"lr", 1e-4}, {"steps", 500}, {"batch", 4}}},
          {"adam", {{"beta1", 0.9}, {"beta2", 0.999}, {"eps", 1e-8}}},
          {"weights", {{"l1", 1.0}, {"l2", 1.0}, {"l3", 1.0}, {"l4", 100.0}}},
          {"checkpoint_every", 100},
          {"l1_subsets", 10},
          {"l1_subset_size", 0}}},
        {"eval", {{"recall_re_deg", 15.0}, {"recall_te", 0.30}}}};
}

// Deep-merge user config over defaults so partial files work.
void merge(json& base, const json& over) {
    for (auto it = over.begin(); it != over.end(); ++it) {
        if (it->is_object() && base.contains(it.key()) && base[it.key()].is_object())
            merge(base[it.key()], *it);
        else
            base[it.key()] = *it;
    }
}

// Applies "--a.b.c value" style overrides left over after option parsing.
void apply_overrides(json& cfg, const std::vector<std::string>& extras) {
    for (size_t i = 0; i < extras.size(); ++i) {
        std::string key = extras[i];
        if (key.rfind("--", 0) != 0 || i + 1 >= extras.size())
            throw CLI::ValidationError("overrides", "expected --dot.path value pairs, got '" + key + "'");
        key = key.substr(2);
        std::string value = extras[++i];
        json* node = &cfg;
        size_t pos = 0;
        while (true) {
            size_t dot = key.find('.', pos);
            std::string part = key.substr(pos, dot == std::string::npos ? dot : dot - pos);
            if (dot == std::string::npos) {
                json parsed = json::parse(value, nullptr, false);
                (*node)[part] = parsed.is_discarded() ? json(value) : parsed;
                break;
            }
            node = &(*node)[part];
            pos = dot + 1;
        }
    }
}

json load_config(const std::string& path, const std::vector<std::string>& extras) {
    json cfg = default_config();
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw InputError("config: cannot open " + path);
        json user = json::parse(in);
        merge(cfg, user);
    }
    apply_overrides(cfg, extras);
    return cfg;
}

void echo_config(const json& cfg, const std::string& command) {
    std::cout << "command: " << command << "\nseed: " << cfg.at("seed").get<uint64_t>()
              << "\nconfig: " << cfg.dump() << "\n";
}

void write_snapshot(const json& cfg, const std::string& dir) {
    fs::create_directories(dir);
    std::ofstream out(dir + "/config.json");
    out << cfg.dump(2) << "\n";
}

PairSetting setting_from(const json& d) {
    PairSetting s;
    s.mode = pair_mode_from_string(d.at("mode").get<std::string>());
    s.base_n = d.at("base_n").get<int>();
    s.keep_n = d.at("keep_n").get<int>();
    s.pv_rs_intermediate = d.at("pv_rs_intermediate").get<int>();
    s.rot_range_deg = d.at("rot_range_deg").get<double>();
    s.trans_range = d.at("trans_range").get<double>();
    s.tau_gt_clean = d.at("tau_gt_clean").get<double>();
    s.tau_gt_noisy = d.at("tau_gt_noisy").get<double>();
    s.viewpoint = d.at("viewpoint").get<std::string>() == "symmetric" ? ViewpointMode::kSymmetric
                                                                      : ViewpointMode::kSame;
    NoiseSpec noise{d.at("noise_sigma").get<double>(), d.at("noise_clip").get<double>()};
    if (split_from_string(d.at("split").get<std::string>()) == SplitRegime::kND) s.noise = noise;
    return s;
}

ModelConfig model_from(const json& m) {
    ModelConfig cfg;
    cfg.filters = m.at("filters").get<std::vector<int>>();
    cfg.knn_k = m.at("k").get<int>();
    cfg.heads = m.at("heads").get<int>();
    cfg.encoder_layers = m.at("encoder_layers").get<int>();
    cfg.decoder_layers = m.at("decoder_layers").get<int>();
    cfg.walk = m.at("walk").get<std::vector<int>>();
    cfg.edge_concat_diff = m.at("edge_concat_diff").get<bool>();
    cfg.validate();
    return cfg;
}

TrainConfig train_from(const json& t, uint64_t seed) {
    TrainConfig cfg;
    cfg.stage1 = {t.at("stage1").at("lr").get<double>(), t.at("stage1").at("steps").get<int>(),
                  t.at("stage1").at("batch").get<int>()};
    cfg.stage2 = {t.at("stage2").at("lr").get<double>(), t.at("stage2").at("steps").get<int>(),
                  t.at("stage2").at("batch").get<int>()};
    cfg.adam = {t.at("adam").at("beta1").get<double>(), t.at("adam").at("beta2").get<double>(),
                t.at("adam").at("eps").get<double>()};
    cfg.weights = {t.at("weights").at("l1").get<double>(), t.at("weights").at("l2").get<double>(),
                   t.at("weights").at("l3").get<double>(), t.at("weights").at("l4").get<double>()};
    cfg.checkpoint_every = t.at("checkpoint_every").get<int>();
    cfg.l1_subsets = t.at("l1_subsets").get<int>();
    cfg.l1_subset_size = t.at("l1_subset_size").get<int>();
    cfg.seed = seed;
    cfg.validate();
    return cfg;
}

// UC holds out shape kinds; everything else uses the configured shape.
ShapeKind shape_for_pair(const json& d, SplitRegime split, int index) {
    bool train_role = d.at("role").get<std::string>() != "test";
    if (split == SplitRegime::kUC) {
        static const ShapeKind train_kinds[2] = {ShapeKind::kSphere, ShapeKind::kTorus};
        static const ShapeKind test_kinds[2] = {ShapeKind::kBoxSurface, ShapeKind::kGaussianBlobs};
        return train_role ? train_kinds[index % 2] : test_kinds[index % 2];
    }
    return shape_kind_from_string(d.at("shape").get<std::string>());
}

std::vector<RegistrationPair> generate_pairs(const json& cfg) {
    const json& d = cfg.at("data");
    PairSetting setting = setting_from(d);
    SplitRegime split = split_from_string(d.at("split").get<std::string>());
    int pairs = d.at("pairs").get<int>();
    uint64_t seed = cfg.at("seed").get<uint64_t>();
    // Train/test roles draw from disjoint seed streams (the UPC regime).
    uint64_t role_salt = d.at("role").get<std::string>() == "test" ? 0x7e57ull : 0;
    Rng rng(seed ^ role_salt);

    Mesh mesh;
    const Mesh* mesh_ptr = nullptr;
    if (d.at("shape").get<std::string>() == "from-mesh" && split != SplitRegime::kUC) {
        mesh = load_mesh(d.at("mesh").get<std::string>());
        mesh_ptr = &mesh;
    }

    std::vector<RegistrationPair> out;
    out.reserve(static_cast<size_t>(pairs));
    for (int i = 0; i < pairs; ++i) {
        Rng base_rng = rng.fork(static_cast<uint64_t>(i) * 2);
        Rng pair_rng = rng.fork(static_cast<uint64_t>(i) * 2 + 1);
        PointCloud base =
            sample_shape(shape_for_pair(d, split, i), setting.base_n, base_rng, mesh_ptr);
        out.push_back(make_pair(base, setting, split, pair_rng));
    }
    return out;
}

// One registered pair in the results file; gt fields present when known.
json result_entry(int id, const RigidTransform& pred, const RigidTransform* gt) {
    json e;
    e["id"] = id;
    std::vector<double> rot(9);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) rot[static_cast<size_t>(a * 3 + b)] = pred.rotation[a][b];
    e["rotation"] = rot;
    e["translation"] =
        std::vector<double>{pred.translation[0], pred.translation[1], pred.translation[2]};
    if (gt) {
        std::vector<double> grot(9);
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) grot[static_cast<size_t>(a * 3 + b)] = gt->rotation[a][b];
        e["gt_rotation"] = grot;
        e["gt_translation"] =
            std::vector<double>{gt->translation[0], gt->translation[1], gt->translation[2]};
        e["re_deg"] = rotation_error_deg(pred.rotation, gt->rotation);
        e["te"] = translation_error(pred.translation, gt->translation);
    }
    return e;
}

json points_json(const PointCloud& p) {
    json arr = json::array();
    for (const Vec3& v : p.points) arr.push_back({v[0], v[1], v[2]});
    return arr;
}

int cmd_gen(const json& cfg, const std::string& out_dir) {
    auto pairs = generate_pairs(cfg);
    save_pairs(out_dir, pairs, cfg.at("seed").get<uint64_t>(), cfg.dump());
    write_snapshot(cfg, out_dir);
    std::cout << "gen: wrote " << pairs.size() << " pairs to " << out_dir << "\n";
    return 0;
}

int cmd_train(const json& cfg, const std::string& data_dir, const std::string& out_dir,
              const std::string& stage, const std::string& init_ckpt) {
    std::vector<RegistrationPair> pairs =
        data_dir.empty() ? generate_pairs(cfg) : load_pairs(data_dir);
    ModelConfig model_cfg = model_from(cfg.at("model"));
    TrainConfig train_cfg = train_from(cfg.at("train"), cfg.at("seed").get<uint64_t>());
    write_snapshot(cfg, out_dir);

    ad::ParamStore store;
    if (!init_ckpt.empty()) {
        ad::load_checkpoint(store, init_ckpt);
    } else if (stage == "2") {
        throw InputError("train --stage 2 needs --init-checkpoint with the stage-1 parameters");
    } else {
        Rng init_rng(cfg.at("seed").get<uint64_t>() ^ 0x1417ull);
        init_params(store, model_cfg, init_rng);
    }

    if (stage == "1" || stage == "both") {
        LossCurve c = train_stage1(pairs, store, model_cfg, train_cfg, out_dir);
        std::cout << "stage1: " << c.rows.size() << " steps, final l0 "
                  << (c.rows.empty() ? 0.0 : c.rows.back()[1]) << "\n";
    }
    if (stage == "2" || stage == "both") {
        LossCurve c = train_stage2(pairs, store, model_cfg, train_cfg, out_dir);
        std::cout << "stage2: " << c.rows.size() << " steps, final total "
                  << (c.rows.empty() ? 0.0 : c.rows.back()[5]) << "\n";
    }
    std::cout << "train: checkpoints in " << out_dir << "\n";
    return 0;
}

int cmd_register(const json& cfg, const std::string& checkpoint, const std::string& data_dir,
                 const std::string& source_path, const std::string& target_path,
                 const std::string& out_dir, int iters, bool no_correction, bool dump_match) {
    ModelConfig model_cfg = model_from(cfg.at("model"));
    ad::ParamStore store;
    ad::load_checkpoint(store, checkpoint);
    write_snapshot(cfg, out_dir);
    int threads = cfg.at("threads").get<int>();

    std::vector<RegistrationPair> jobs;
    bool have_gt = !data_dir.empty();
    if (have_gt) {
        jobs = load_pairs(data_dir);
    } else {
        RegistrationPair p;
        p.source = load_xyz(source_path);
        p.target = load_xyz(target_path);
        jobs.push_back(std::move(p));
    }

    std::vector<json> slots(jobs.size());
    uint64_t seed = cfg.at("seed").get<uint64_t>();
    parallel_for(static_cast<int>(jobs.size()), threads, [&](int i) {
        const RegistrationPair& job = jobs[static_cast<size_t>(i)];
        RegistrationResult reg =
            vrnet_register(job.source, job.target, store, model_cfg, !no_correction);
        RigidTransform pose = reg.transform;
        if (iters > 1) {
            RegisterFn fn = [&](const PointCloud& a, const PointCloud& b) {
                return vrnet_register(a, b, store, model_cfg, !no_correction).transform;
            };
            pose = iterative_refine(fn, job.source, job.target, iters);
        }
        json e = result_entry(i, pose, have_gt ? &job.gt_transform : nullptr);
        // single-pass diagnostics
        Rng l1_rng(seed ^ (0x11ull + static_cast<uint64_t>(i)));
        e["losses"]["l1"] = loss_l1(job.source, reg.rcp, reg.transform, 10,
                                    default_l1_subset_size(job.source.size()), l1_rng);
        e["losses"]["l2"] = loss_l2(edge_matrix(job.source), edge_matrix(reg.rcp));
        e["losses"]["l3"] = loss_l3(reg.transform, job.source, reg.rcp);
        if (have_gt) {
            e["losses"]["l0"] = loss_l0(reg.match, job.gt_matrix);
            e["losses"]["l4"] = loss_l4(job.gt_transform, job.source, reg.vcp, reg.offsets);
            PointCloud gtx = apply_transform(job.gt_transform, job.source);
            e["chamfer_gtx_vcp"] = chamfer(gtx, reg.vcp);
            e["chamfer_gtx_rcp"] = chamfer(gtx, reg.rcp);
        }
        e["vcp"] = points_json(reg.vcp);
        e["rcp"] = points_json(reg.rcp);
        json offs = json::array();
        for (int r = 0; r < reg.offsets.rows; ++r)
            offs.push_back({reg.offsets(r, 0), reg.offsets(r, 1), reg.offsets(r, 2)});
        e["offsets"] = offs;
        if (dump_match) {
            json m = json::array();
            for (int r = 0; r < reg.match.rows; ++r) {
                json row = json::array();
                for (int c = 0; c < reg.match.cols; ++c) row.push_back(reg.match(r, c));
                m.push_back(row);
            }
            e["match"] = m;
        }
        slots[static_cast<size_t>(i)] = std::move(e);
    });

    json results = json::array();
    for (auto& s : slots) results.push_back(std::move(s));
    std::ofstream out(out_dir + "/results.json");
    out << results.dump(2) << "\n";
    std::cout << "register: " << jobs.size() << " pair(s) -> " << out_dir << "/results.json\n";
    return 0;
}

int cmd_icp(const json& cfg, const std::string& data_dir, const std::string& source_path,
            const std::string& target_path, const std::string& out_dir, int max_iter, double tol) {
    write_snapshot(cfg, out_dir);
    int threads = cfg.at("threads").get<int>();
    std::vector<RegistrationPair> pairs;
    bool have_gt = !data_dir.empty();
    if (have_gt) {
        pairs = load_pairs(data_dir);
    } else {
        RegistrationPair p;
        p.source = load_xyz(source_path);
        p.target = load_xyz(target_path);
        pairs.push_back(std::move(p));
    }

    std::vector<json> slots(pairs.size());
    parallel_for(static_cast<int>(pairs.size()), threads, [&](int i) {
        const RegistrationPair& p = pairs[static_cast<size_t>(i)];
        IcpResult r = icp_register(p.source, p.target, max_iter, tol);
        json e = result_entry(i, r.transform, have_gt ? &p.gt_transform : nullptr);
        e["iterations"] = r.iterations;
        e["converged"] = r.converged;
        e["residuals"] = r.residuals;
        slots[static_cast<size_t>(i)] = std::move(e);
    });
    json results = json::array();
    for (auto& s : slots) results.push_back(std::move(s));
    std::ofstream out(out_dir + "/results.json");
    out << results.dump(2) << "\n";
    std::cout << "icp: " << pairs.size() << " pair(s) -> " << out_dir << "/results.json\n";
    return 0;
}

int cmd_eval(const json& cfg, const std::string& results_path, const std::string& out_dir) {
    std::ifstream in(results_path);
    if (!in) throw InputError("eval: cannot open " + results_path);
    json results = json::parse(in);
    std::vector<PairResult> pairs;
    for (const auto& e : results) {
        if (!e.contains("gt_rotation")) continue;
        PairResult pr;
        auto rot = e.at("rotation").get<std::vector<double>>();
        auto grot = e.at("gt_rotation").get<std::vector<double>>();
        auto tr = e.at("translation").get<std::vector<double>>();
        auto gtr = e.at("gt_translation").get<std::vector<double>>();
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) {
                pr.pred.rotation[a][b] = rot[static_cast<size_t>(a * 3 + b)];
                pr.gt.rotation[a][b] = grot[static_cast<size_t>(a * 3 + b)];
            }
        pr.pred.translation = {tr[0], tr[1], tr[2]};
        pr.gt.translation = {gtr[0], gtr[1], gtr[2]};
        pairs.push_back(pr);
    }
    if (pairs.empty()) throw InputError("eval: no entries with ground truth in " + results_path);
    RecallThresholds thresholds{cfg.at("eval").at("recall_re_deg").get<double>(),
                                cfg.at("eval").at("recall_te").get<double>()};
    MetricReport report = compute_metrics(pairs, thresholds);
    write_snapshot(cfg, out_dir);
    std::ofstream jf(out_dir + "/report.json");
    jf << metric_report_json(report);
    std::ofstream cf(out_dir + "/report.csv");
    cf << metric_report_csv(report);
    std::cout << metric_report_json(report);
    return 0;
}

int cmd_gradcheck(uint64_t seed) {
    GradCheckReport report = run_gradcheck(seed);
    std::cout << format_gradcheck(report);
    return report.all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vrnet: learned point-cloud registration experiments"};
    app.require_subcommand(1);
    app.allow_extras();

    // VRNET_RUN_DIR steers where runs land when --out is not given.
    std::string default_out = "runs";
    if (const char* env = std::getenv("VRNET_RUN_DIR")) default_out = env;

    std::string config_path, out_dir, data_dir, source_path, target_path;
    std::string checkpoint, stage = "both", init_ckpt, results_path;
    int iters = 1, max_iter = 100, threads = 0;
    double tol = 1e-8;
    bool no_correction = false, dump_match = false;
    uint64_t gc_seed = 7;

    app.add_option("--config", config_path, "config JSON; omitted fields use defaults");
    app.add_option("--threads", threads, "worker threads for dataset-level parallelism");

    CLI::App* gen = app.add_subcommand("gen", "generate a synthetic pair dataset");
    gen->add_option("--out", out_dir, "output directory");
    gen->allow_extras();

    CLI::App* train = app.add_subcommand("train", "run stage 1 and/or stage 2 training");
    train->add_option("--data", data_dir, "dataset directory from gen (default: generate in-memory)");
    train->add_option("--out", out_dir, "run directory");
    train->add_option("--stage", stage, "1, 2 or both");
    train->add_option("--init-checkpoint", init_ckpt, "starting checkpoint (e.g. stage1.ckpt)");
    train->allow_extras();

    CLI::App* reg = app.add_subcommand("register", "align a pair or a dataset with a trained model");
    reg->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
    reg->add_option("--data", data_dir, "dataset directory");
    reg->add_option("--source", source_path, "source .xyz (with --target)");
    reg->add_option("--target", target_path, "target .xyz");
    reg->add_option("--out", out_dir, "output directory");
    reg->add_option("--iters", iters, "iterative refinement rounds");
    reg->add_flag("--no-correction", no_correction, "disable the correction-walk");
    reg->add_flag("--dump-match", dump_match, "include the full matching matrix in results");
    reg->allow_extras();

    CLI::App* icp = app.add_subcommand("icp", "point-to-point ICP baseline");
    icp->add_option("--data", data_dir, "dataset directory");
    icp->add_option("--source", source_path, "source .xyz (with --target)");
    icp->add_option("--target", target_path, "target .xyz");
    icp->add_option("--out", out_dir, "output directory");
    icp->add_option("--max-iter", max_iter, "iteration cap");
    icp->add_option("--tol", tol, "residual-change stopping tolerance");
    icp->allow_extras();

    CLI::App* ev = app.add_subcommand("eval", "aggregate metrics from a results file");
    ev->add_option("--results", results_path, "results.json from register/icp")->required();
    ev->add_option("--out", out_dir, "output directory");
    ev->allow_extras();

    CLI::App* gc = app.add_subcommand("gradcheck", "finite-difference gradient suite");
    gc->add_option("--seed", gc_seed, "probe seed");
    gc->allow_extras();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        std::vector<std::string> extras = app.remaining();
        for (CLI::App* sub : {gen, train, reg, icp, ev, gc}) {
            if (!sub->parsed()) continue;
            auto more = sub->remaining();
            extras.insert(extras.end(), more.begin(), more.end());
        }
        json cfg = load_config(config_path, extras);
        if (threads > 0) cfg["threads"] = threads;
        if (out_dir.empty()) {
            for (CLI::App* sub : {gen, train, reg, icp, ev, gc})
                if (sub->parsed()) out_dir = default_out + "/" + sub->get_name();
        }

        if (gen->parsed()) {
            echo_config(cfg, "gen");
            return cmd_gen(cfg, out_dir);
        }
        if (train->parsed()) {
            echo_config(cfg, "train");
            return cmd_train(cfg, data_dir, out_dir, stage, init_ckpt);
        }
        if (reg->parsed()) {
            echo_config(cfg, "register");
            if (data_dir.empty() && (source_path.empty() || target_path.empty()))
                throw CLI::ValidationError("register", "need --data or --source/--target");
            return cmd_register(cfg, checkpoint, data_dir, source_path, target_path, out_dir,
                                iters, no_correction, dump_match);
        }
        if (icp->parsed()) {
            echo_config(cfg, "icp");
            if (data_dir.empty() && (source_path.empty() || target_path.empty()))
                throw CLI::ValidationError("icp", "need --data or --source/--target");
            return cmd_icp(cfg, data_dir, source_path, target_path, out_dir, max_iter, tol);
        }
        if (ev->parsed()) {
            echo_config(cfg, "eval");
            return cmd_eval(cfg, results_path, out_dir);
        }
        if (gc->parsed()) {
            echo_config(cfg, "gradcheck");
            return cmd_gradcheck(gc_seed);
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
