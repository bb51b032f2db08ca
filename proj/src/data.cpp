#include "vrnet/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace vrnet {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

PairMode pair_mode_from_string(const std::string& s) {
    if (s == "CO") return PairMode::kCO;
    if (s == "PV") return PairMode::kPV;
    if (s == "RS") return PairMode::kRS;
    if (s == "PV_RS" || s == "PV+RS") return PairMode::kPVRS;
    throw InputError("unknown pair mode: " + s);
}

std::string to_string(PairMode m) {
    switch (m) {
        case PairMode::kCO: return "CO";
        case PairMode::kPV: return "PV";
        case PairMode::kRS: return "RS";
        case PairMode::kPVRS: return "PV_RS";
    }
    return "?";
}

SplitRegime split_from_string(const std::string& s) {
    if (s == "UPC") return SplitRegime::kUPC;
    if (s == "UC") return SplitRegime::kUC;
    if (s == "ND") return SplitRegime::kND;
    throw InputError("unknown split regime: " + s);
}

std::string to_string(SplitRegime s) {
    switch (s) {
        case SplitRegime::kUPC: return "UPC";
        case SplitRegime::kUC: return "UC";
        case SplitRegime::kND: return "ND";
    }
    return "?";
}

ShapeKind shape_kind_from_string(const std::string& s) {
    if (s == "sphere") return ShapeKind::kSphere;
    if (s == "torus") return ShapeKind::kTorus;
    if (s == "box-surface" || s == "box") return ShapeKind::kBoxSurface;
    if (s == "gaussian-blobs" || s == "blobs") return ShapeKind::kGaussianBlobs;
    if (s == "from-mesh" || s == "mesh") return ShapeKind::kFromMesh;
    throw InputError("unknown shape kind: " + s);
}

std::string to_string(ShapeKind k) {
    switch (k) {
        case ShapeKind::kSphere: return "sphere";
        case ShapeKind::kTorus: return "torus";
        case ShapeKind::kBoxSurface: return "box-surface";
        case ShapeKind::kGaussianBlobs: return "gaussian-blobs";
        case ShapeKind::kFromMesh: return "from-mesh";
    }
    return "?";
}

void PairSetting::validate() const {
    if (base_n < 1 || keep_n < 1) throw InputError("PairSetting: counts must be positive");
    if (keep_n > base_n) throw InputError("PairSetting: keep_n exceeds base_n");
    if (mode == PairMode::kPVRS &&
        (pv_rs_intermediate < keep_n || pv_rs_intermediate > base_n))
        throw InputError("PairSetting: pv_rs_intermediate must lie between keep_n and base_n");
}

// ---------------------------------------------------------------------------
// Shape samplers
// ---------------------------------------------------------------------------

namespace {
Vec3 random_unit(Rng& rng) {
    while (true) {
        Vec3 v{rng.gaussian(), rng.gaussian(), rng.gaussian()};
        double n = norm(v);
        if (n > 1e-12) return (1.0 / n) * v;
    }
}
}  // namespace

PointCloud sample_sphere(int n, Rng& rng) {
    if (n < 1) throw InputError("sample_sphere: n must be >= 1");
    PointCloud p;
    p.points.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) p.points.push_back(random_unit(rng));
    return p;
}

PointCloud sample_torus(int n, Rng& rng, double major, double minor) {
    if (n < 1) throw InputError("sample_torus: n must be >= 1");
    PointCloud p;
    p.points.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        double u = rng.uniform(0.0, 2.0 * kPi);
        double v = rng.uniform(0.0, 2.0 * kPi);
        double w = major + minor * std::cos(v);
        p.points.push_back({w * std::cos(u), w * std::sin(u), minor * std::sin(v)});
    }
    return p;
}

PointCloud sample_box_surface(int n, Rng& rng) {
    if (n < 1) throw InputError("sample_box_surface: n must be >= 1");
    PointCloud p;
    p.points.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        int face = rng.index(6);
        double u = rng.uniform(-1.0, 1.0);
        double v = rng.uniform(-1.0, 1.0);
        double s = (face % 2 == 0) ? -1.0 : 1.0;
        switch (face / 2) {
            case 0: p.points.push_back({s, u, v}); break;
            case 1: p.points.push_back({u, s, v}); break;
            default: p.points.push_back({u, v, s}); break;
        }
    }
    return p;
}

PointCloud sample_gaussian_blobs(int n, Rng& rng) {
    if (n < 1) throw InputError("sample_gaussian_blobs: n must be >= 1");
    constexpr int kBlobs = 4;
    std::array<Vec3, kBlobs> centers;
    for (auto& c : centers) c = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    PointCloud p;
    p.points.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const Vec3& c = centers[static_cast<size_t>(rng.index(kBlobs))];
        p.points.push_back(c + 0.2 * Vec3{rng.gaussian(), rng.gaussian(), rng.gaussian()});
    }
    return p;
}

PointCloud sample_mesh_surface(const Mesh& mesh, int n, Rng& rng) {
    if (n < 1) throw InputError("sample_mesh_surface: n must be >= 1");
    if (mesh.vertices.empty()) throw InputError("sample_mesh_surface: empty mesh");
    PointCloud p;
    p.points.reserve(static_cast<size_t>(n));
    if (mesh.faces.empty()) {
        for (int i = 0; i < n; ++i)
            p.points.push_back(mesh.vertices[static_cast<size_t>(rng.index(static_cast<int>(mesh.vertices.size())))]);
        return p;
    }
    std::vector<double> cum_area(mesh.faces.size());
    double total = 0.0;
    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& tri = mesh.faces[f];
        Vec3 a = mesh.vertices[static_cast<size_t>(tri[0])];
        Vec3 b = mesh.vertices[static_cast<size_t>(tri[1])];
        Vec3 c = mesh.vertices[static_cast<size_t>(tri[2])];
        total += 0.5 * norm(cross(b - a, c - a));
        cum_area[f] = total;
    }
    if (total <= 0.0) throw DegenerateError("sample_mesh_surface: zero total face area");
    for (int i = 0; i < n; ++i) {
        double r = rng.uniform(0.0, total);
        size_t f = static_cast<size_t>(std::lower_bound(cum_area.begin(), cum_area.end(), r) -
                                       cum_area.begin());
        if (f >= mesh.faces.size()) f = mesh.faces.size() - 1;
        const auto& tri = mesh.faces[f];
        double u = rng.uniform();
        double v = rng.uniform();
        if (u + v > 1.0) {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        Vec3 a = mesh.vertices[static_cast<size_t>(tri[0])];
        Vec3 b = mesh.vertices[static_cast<size_t>(tri[1])];
        Vec3 c = mesh.vertices[static_cast<size_t>(tri[2])];
        p.points.push_back(a + u * (b - a) + v * (c - a));
    }
    return p;
}

void normalize_cloud(PointCloud& p) {
    if (p.empty()) throw InputError("normalize_cloud: empty cloud");
    Vec3 lo = p.points[0], hi = p.points[0];
    for (const Vec3& v : p.points)
        for (int c = 0; c < 3; ++c) {
            lo[static_cast<size_t>(c)] = std::min(lo[static_cast<size_t>(c)], v[static_cast<size_t>(c)]);
            hi[static_cast<size_t>(c)] = std::max(hi[static_cast<size_t>(c)], v[static_cast<size_t>(c)]);
        }
    Vec3 center = 0.5 * (lo + hi);
    double diag = norm(hi - lo);
    double scale = diag > 1e-12 ? 2.0 / diag : 1.0;
    for (Vec3& v : p.points) v = scale * (v - center);
}

PointCloud sample_shape(ShapeKind kind, int n, Rng& rng, const Mesh* mesh) {
    PointCloud p;
    switch (kind) {
        case ShapeKind::kSphere: p = sample_sphere(n, rng); break;
        case ShapeKind::kTorus: p = sample_torus(n, rng); break;
        case ShapeKind::kBoxSurface: p = sample_box_surface(n, rng); break;
        case ShapeKind::kGaussianBlobs: p = sample_gaussian_blobs(n, rng); break;
        case ShapeKind::kFromMesh:
            if (!mesh) throw InputError("sample_shape: from-mesh requires a mesh");
            p = sample_mesh_surface(*mesh, n, rng);
            break;
    }
    normalize_cloud(p);
    return p;
}

void add_clipped_noise(PointCloud& p, const NoiseSpec& noise, Rng& rng) {
    for (Vec3& v : p.points)
        for (int c = 0; c < 3; ++c)
            v[static_cast<size_t>(c)] +=
                std::clamp(noise.sigma * rng.gaussian(), -noise.clip, noise.clip);
}

// ---------------------------------------------------------------------------
// Pair construction
// ---------------------------------------------------------------------------

namespace {

Vec3 centroid(const PointCloud& p) {
    Vec3 c{0, 0, 0};
    for (const Vec3& v : p.points) c = c + v;
    return (1.0 / p.size()) * c;
}

// keep nearest points to the viewpoint; pool indexes into base.
std::vector<int> nearest_to_viewpoint(const PointCloud& base, const std::vector<int>& pool,
                                      const Vec3& viewpoint, int keep) {
    std::vector<std::pair<double, int>> d;
    d.reserve(pool.size());
    for (int i : pool)
        d.emplace_back(norm2(base.points[static_cast<size_t>(i)] - viewpoint), i);
    std::partial_sort(d.begin(), d.begin() + keep, d.end());
    std::vector<int> out(static_cast<size_t>(keep));
    for (int i = 0; i < keep; ++i) out[static_cast<size_t>(i)] = d[static_cast<size_t>(i)].second;
    return out;
}

std::vector<int> iota_idx(int n) {
    std::vector<int> v(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<size_t>(i)] = i;
    return v;
}

PointCloud select(const PointCloud& base, const std::vector<int>& idx) {
    PointCloud out;
    out.points.reserve(idx.size());
    for (int i : idx) out.points.push_back(base.points[static_cast<size_t>(i)]);
    return out;
}

}  // namespace

RegistrationPair make_pair(const PointCloud& base, const PairSetting& setting,
                           SplitRegime split, Rng& rng) {
    setting.validate();
    int n = base.size();
    if (n < setting.keep_n)
        throw InputError("make_pair: base cloud smaller than keep_n");
    if (setting.mode == PairMode::kPVRS && n < setting.pv_rs_intermediate)
        throw InputError("make_pair: base cloud smaller than pv_rs_intermediate");

    // Independent substreams so noise-on/off runs share subsets and shuffles.
    Rng rng_pose = rng.fork(1);
    Rng rng_subset = rng.fork(2);
    Rng rng_noise = rng.fork(3);
    Rng rng_shuffle = rng.fork(4);

    RegistrationPair pair;
    pair.gt_transform = random_rigid(rng_pose, setting.rot_range_deg, setting.trans_range);

    std::vector<int> src_idx, tgt_idx;
    switch (setting.mode) {
        case PairMode::kCO:
            src_idx = iota_idx(n);
            tgt_idx = src_idx;
            break;
        case PairMode::kPV: {
            Vec3 c = centroid(base);
            Vec3 v = c + 3.0 * random_unit(rng_subset);
            Vec3 v2 = setting.viewpoint == ViewpointMode::kSame ? v : c - (v - c);
            src_idx = nearest_to_viewpoint(base, iota_idx(n), v, setting.keep_n);
            tgt_idx = nearest_to_viewpoint(base, iota_idx(n), v2, setting.keep_n);
            pair.view_source = v;
            pair.view_target = v2;
            break;
        }
        case PairMode::kRS:
            src_idx = rng_subset.pick_k(n, setting.keep_n);
            tgt_idx = rng_subset.pick_k(n, setting.keep_n);
            break;
        case PairMode::kPVRS: {
            std::vector<int> src_pool = rng_subset.pick_k(n, setting.pv_rs_intermediate);
            std::vector<int> tgt_pool = rng_subset.pick_k(n, setting.pv_rs_intermediate);
            Vec3 c = centroid(base);
            Vec3 v = c + 3.0 * random_unit(rng_subset);
            Vec3 v2 = setting.viewpoint == ViewpointMode::kSame ? v : c - (v - c);
            src_idx = nearest_to_viewpoint(base, src_pool, v, setting.keep_n);
            tgt_idx = nearest_to_viewpoint(base, tgt_pool, v2, setting.keep_n);
            pair.view_source = v;
            pair.view_target = v2;
            break;
        }
    }

    pair.source = select(base, src_idx);
    pair.target = apply_transform(pair.gt_transform, select(base, tgt_idx));

    bool noisy = split == SplitRegime::kND || setting.noise.has_value();
    if (noisy) {
        NoiseSpec noise = setting.noise.value_or(NoiseSpec{});
        Rng rn_src = rng_noise.fork(0);
        Rng rn_tgt = rng_noise.fork(1);
        add_clipped_noise(pair.source, noise, rn_src);
        add_clipped_noise(pair.target, noise, rn_tgt);
    }

    // Independent shuffles of both clouds.
    Rng rs_src = rng_shuffle.fork(0);
    Rng rs_tgt = rng_shuffle.fork(1);
    rs_src.shuffle(pair.source.points);
    rs_tgt.shuffle(pair.target.points);

    pair.tau_gt = noisy ? setting.tau_gt_noisy : setting.tau_gt_clean;
    GtMatching gt = gt_matching_matrix(pair.source, pair.target, pair.gt_transform, pair.tau_gt);
    pair.gt_matrix = std::move(gt.matrix);
    pair.outlier = std::move(gt.outlier);

    std::vector<int> partner(static_cast<size_t>(pair.source.size()), -1);
    for (int i = 0; i < pair.source.size(); ++i)
        for (int j = 0; j < pair.target.size(); ++j)
            if (pair.gt_matrix(i, j) != 0.0) {
                partner[static_cast<size_t>(i)] = j;
                break;
            }
    pair.source.gt_partner = std::move(partner);
    return pair;
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

namespace {

std::string next_content_line(std::istream& in, int& line_no) {
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        size_t pos = line.find_first_not_of(" \t\r\n");
        if (pos == std::string::npos) continue;
        if (line[pos] == '#') continue;
        return line;
    }
    return {};
}

Mesh load_off(std::istream& in, const std::string& path) {
    int line_no = 0;
    std::string header = next_content_line(in, line_no);
    std::istringstream hs(header);
    std::string tag;
    hs >> tag;
    if (tag != "OFF")
        throw ParseError(path + ":" + std::to_string(line_no) + ": expected OFF header");
    long nv = -1, nf = -1, ne = -1;
    if (!(hs >> nv >> nf >> ne)) {
        std::string counts = next_content_line(in, line_no);
        std::istringstream cs(counts);
        if (!(cs >> nv >> nf >> ne))
            throw ParseError(path + ":" + std::to_string(line_no) + ": malformed OFF counts");
    }
    if (nv < 1) throw ParseError(path + ":" + std::to_string(line_no) + ": no vertices");
    Mesh mesh;
    mesh.vertices.reserve(static_cast<size_t>(nv));
    for (long i = 0; i < nv; ++i) {
        std::string line = next_content_line(in, line_no);
        std::istringstream vs(line);
        Vec3 v;
        if (!(vs >> v[0] >> v[1] >> v[2]))
            throw ParseError(path + ":" + std::to_string(line_no) + ": malformed vertex");
        mesh.vertices.push_back(v);
    }
    for (long f = 0; f < nf; ++f) {
        std::string line = next_content_line(in, line_no);
        std::istringstream fs(line);
        int k = 0;
        if (!(fs >> k) || k < 3)
            throw ParseError(path + ":" + std::to_string(line_no) + ": malformed face");
        std::vector<int> idx(static_cast<size_t>(k));
        for (int j = 0; j < k; ++j) {
            if (!(fs >> idx[static_cast<size_t>(j)]) || idx[static_cast<size_t>(j)] < 0 ||
                idx[static_cast<size_t>(j)] >= nv)
                throw ParseError(path + ":" + std::to_string(line_no) + ": face index out of range");
        }
        for (int j = 1; j + 1 < k; ++j)  // fan triangulation
            mesh.faces.push_back({idx[0], idx[static_cast<size_t>(j)], idx[static_cast<size_t>(j + 1)]});
    }
    return mesh;
}

Mesh load_ply(std::istream& in, const std::string& path) {
    int line_no = 1;  // "ply" already consumed
    long n_vertex = -1, n_face = -1;
    int xi = -1, yi = -1, zi = -1;
    int vertex_props = 0;
    bool in_vertex = false, in_face = false, saw_format = false;
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word == "comment" || word.empty()) continue;
        if (word == "format") {
            std::string enc;
            ls >> enc;
            if (enc != "ascii")
                throw ParseError(path + ":" + std::to_string(line_no) +
                                 ": unsupported encoding (" + enc + "); only ASCII PLY is readable");
            saw_format = true;
        } else if (word == "element") {
            std::string what;
            long count = 0;
            ls >> what >> count;
            in_vertex = what == "vertex";
            in_face = what == "face";
            if (in_vertex) n_vertex = count;
            if (in_face) n_face = count;
        } else if (word == "property") {
            if (in_vertex) {
                std::string type, name;
                ls >> type;
                if (type == "list") continue;
                ls >> name;
                if (name == "x") xi = vertex_props;
                if (name == "y") yi = vertex_props;
                if (name == "z") zi = vertex_props;
                ++vertex_props;
            }
        } else if (word == "end_header") {
            break;
        }
    }
    if (!saw_format) throw ParseError(path + ": missing PLY format line");
    if (n_vertex < 1 || xi < 0 || yi < 0 || zi < 0)
        throw ParseError(path + ": PLY header lacks vertex x/y/z properties");

    Mesh mesh;
    mesh.vertices.reserve(static_cast<size_t>(n_vertex));
    for (long i = 0; i < n_vertex; ++i) {
        std::string vline = next_content_line(in, line_no);
        std::istringstream vs(vline);
        std::vector<double> vals(static_cast<size_t>(vertex_props));
        for (int p = 0; p < vertex_props; ++p)
            if (!(vs >> vals[static_cast<size_t>(p)]))
                throw ParseError(path + ":" + std::to_string(line_no) + ": malformed vertex line");
        mesh.vertices.push_back({vals[static_cast<size_t>(xi)], vals[static_cast<size_t>(yi)],
                                 vals[static_cast<size_t>(zi)]});
    }
    for (long f = 0; f < std::max(0L, n_face); ++f) {
        std::string fline = next_content_line(in, line_no);
        std::istringstream fs(fline);
        int k = 0;
        if (!(fs >> k) || k < 3)
            throw ParseError(path + ":" + std::to_string(line_no) + ": malformed face line");
        std::vector<int> idx(static_cast<size_t>(k));
        for (int j = 0; j < k; ++j)
            if (!(fs >> idx[static_cast<size_t>(j)]) || idx[static_cast<size_t>(j)] < 0 ||
                idx[static_cast<size_t>(j)] >= n_vertex)
                throw ParseError(path + ":" + std::to_string(line_no) + ": face index out of range");
        for (int j = 1; j + 1 < k; ++j)
            mesh.faces.push_back({idx[0], idx[static_cast<size_t>(j)], idx[static_cast<size_t>(j + 1)]});
    }
    return mesh;
}

}  // namespace

Mesh load_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("load_mesh: cannot open " + path);
    std::string first;
    std::getline(in, first);
    while (!first.empty() && (first.back() == '\r' || first.back() == '\n')) first.pop_back();
    if (first.rfind("ply", 0) == 0) return load_ply(in, path);
    // OFF variants keep the first line relevant; rewind.
    in.clear();
    in.seekg(0);
    return load_off(in, path);
}

PointCloud cloud_from_mesh(const Mesh& mesh) {
    PointCloud p;
    p.points = mesh.vertices;
    return p;
}

PointCloud load_xyz(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("load_xyz: cannot open " + path);
    PointCloud p;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        std::istringstream ls(line);
        Vec3 v;
        if (!(ls >> v[0] >> v[1] >> v[2]))
            throw ParseError(path + ":" + std::to_string(line_no) + ": malformed xyz line");
        p.points.push_back(v);
    }
    if (p.empty()) throw ParseError(path + ": no points");
    return p;
}

void save_xyz(const PointCloud& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("save_xyz: cannot open " + path);
    char buf[96];
    for (const Vec3& v : p.points) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", v[0], v[1], v[2]);
        out << buf;
    }
}

void save_pairs(const std::string& dir, const std::vector<RegistrationPair>& pairs,
                uint64_t seed, const std::string& config_snapshot_json) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["seed"] = seed;
    manifest["config"] = config_snapshot_json.empty()
                             ? nlohmann::json::object()
                             : nlohmann::json::parse(config_snapshot_json);
    manifest["pairs"] = nlohmann::json::array();
    for (size_t i = 0; i < pairs.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof(name), "pair_%04zu", i);
        std::string src = std::string(name) + "_source.xyz";
        std::string tgt = std::string(name) + "_target.xyz";
        save_xyz(pairs[i].source, dir + "/" + src);
        save_xyz(pairs[i].target, dir + "/" + tgt);
        nlohmann::json entry;
        entry["id"] = i;
        entry["source"] = src;
        entry["target"] = tgt;
        std::vector<double> rot(9);
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) rot[static_cast<size_t>(a * 3 + b)] = pairs[i].gt_transform.rotation[a][b];
        entry["rotation"] = rot;
        entry["translation"] = std::vector<double>{pairs[i].gt_transform.translation[0],
                                                   pairs[i].gt_transform.translation[1],
                                                   pairs[i].gt_transform.translation[2]};
        entry["tau_gt"] = pairs[i].tau_gt;
        manifest["pairs"].push_back(entry);
    }
    std::ofstream out(dir + "/manifest.json");
    if (!out) throw InputError("save_pairs: cannot write manifest in " + dir);
    out << manifest.dump(2) << "\n";
}

std::vector<RegistrationPair> load_pairs(const std::string& dir) {
    std::ifstream in(dir + "/manifest.json");
    if (!in) throw InputError("load_pairs: cannot open " + dir + "/manifest.json");
    nlohmann::json manifest = nlohmann::json::parse(in);
    std::vector<RegistrationPair> pairs;
    for (const auto& entry : manifest.at("pairs")) {
        RegistrationPair p;
        p.source = load_xyz(dir + "/" + entry.at("source").get<std::string>());
        p.target = load_xyz(dir + "/" + entry.at("target").get<std::string>());
        auto rot = entry.at("rotation").get<std::vector<double>>();
        auto tr = entry.at("translation").get<std::vector<double>>();
        if (rot.size() != 9 || tr.size() != 3)
            throw ParseError(dir + "/manifest.json: bad transform for pair " +
                             std::to_string(pairs.size()));
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) p.gt_transform.rotation[a][b] = rot[static_cast<size_t>(a * 3 + b)];
        p.gt_transform.translation = {tr[0], tr[1], tr[2]};
        p.tau_gt = entry.at("tau_gt").get<double>();
        GtMatching gt = gt_matching_matrix(p.source, p.target, p.gt_transform, p.tau_gt);
        p.gt_matrix = std::move(gt.matrix);
        p.outlier = std::move(gt.outlier);
        std::vector<int> partner(static_cast<size_t>(p.source.size()), -1);
        for (int i = 0; i < p.source.size(); ++i)
            for (int j = 0; j < p.target.size(); ++j)
                if (p.gt_matrix(i, j) != 0.0) {
                    partner[static_cast<size_t>(i)] = j;
                    break;
                }
        p.source.gt_partner = std::move(partner);
        pairs.push_back(std::move(p));
    }
    return pairs;
}

}  // namespace vrnet
