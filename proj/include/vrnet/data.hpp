#pragma once
// Synthetic registration-pair generation (consistent / partial-view /
// random-sample settings, optional clipped Gaussian noise), procedural shape
// samplers, ASCII OFF/PLY mesh ingestion, and dataset persistence as XYZ
// files plus a JSON manifest.

#include <optional>
#include <string>

#include "vrnet/matching.hpp"

namespace vrnet {

enum class PairMode { kCO, kPV, kRS, kPVRS };
enum class SplitRegime { kUPC, kUC, kND };
enum class ViewpointMode { kSame, kSymmetric };

PairMode pair_mode_from_string(const std::string& s);
std::string to_string(PairMode m);
SplitRegime split_from_string(const std::string& s);
std::string to_string(SplitRegime s);

struct NoiseSpec {
    double sigma = 0.01;  // standard deviation
    double clip = 0.05;   // per-coordinate clamp
};

struct PairSetting {
    PairMode mode = PairMode::kCO;
    int base_n = 1024;
    int keep_n = 768;
    int pv_rs_intermediate = 896;
    std::optional<NoiseSpec> noise;  // engaged by the ND regime
    ViewpointMode viewpoint = ViewpointMode::kSame;
    double rot_range_deg = 45.0;
    double trans_range = 0.5;
    double tau_gt_clean = 1e-6;
    double tau_gt_noisy = 0.05;

    void validate() const;
};

struct RegistrationPair {
    PointCloud source;
    PointCloud target;
    RigidTransform gt_transform;
    MatchMatrix gt_matrix;
    std::vector<uint8_t> outlier;
    double tau_gt = 1e-6;
    // PV diagnostics: the sampled crop viewpoints, in base coordinates.
    std::optional<Vec3> view_source;
    std::optional<Vec3> view_target;
};

enum class ShapeKind { kSphere, kTorus, kBoxSurface, kGaussianBlobs, kFromMesh };
ShapeKind shape_kind_from_string(const std::string& s);
std::string to_string(ShapeKind k);

struct Mesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;  // triangulated
};

// Raw samplers (no normalization); deterministic per rng state.
PointCloud sample_sphere(int n, Rng& rng);
PointCloud sample_torus(int n, Rng& rng, double major = 1.0, double minor = 0.4);
PointCloud sample_box_surface(int n, Rng& rng);
PointCloud sample_gaussian_blobs(int n, Rng& rng);
// Area-weighted surface sampling when faces are present, vertex subsampling
// (with replacement) otherwise.
PointCloud sample_mesh_surface(const Mesh& mesh, int n, Rng& rng);

// Center the bounding box at the origin and scale its diagonal to 2.
void normalize_cloud(PointCloud& p);

// Unit-scale cloud of the requested kind; mesh required for kFromMesh.
PointCloud sample_shape(ShapeKind kind, int n, Rng& rng, const Mesh* mesh = nullptr);

// Additive per-coordinate Gaussian noise, clamped to [-clip, clip].
void add_clipped_noise(PointCloud& p, const NoiseSpec& noise, Rng& rng);

// Builds one pair from a base cloud: subsets per mode selected in the base
// frame, target subset rigidly moved by a random pose, optional noise (ND),
// independent shuffles, ground-truth matching by thresholded nearest
// neighbor under the true pose.
RegistrationPair make_pair(const PointCloud& base, const PairSetting& setting,
                           SplitRegime split, Rng& rng);

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

Mesh load_mesh(const std::string& path);  // ASCII OFF / ASCII PLY
PointCloud cloud_from_mesh(const Mesh& mesh);

PointCloud load_xyz(const std::string& path);
void save_xyz(const PointCloud& p, const std::string& path);

// Directory layout: <dir>/pair_<i>_{source,target}.xyz plus manifest.json
// holding the seed, a config snapshot, and per-pair row-major rotation +
// translation + tau. Loading rebuilds gt matrices with the stored pose.
void save_pairs(const std::string& dir, const std::vector<RegistrationPair>& pairs,
                uint64_t seed, const std::string& config_snapshot_json);
std::vector<RegistrationPair> load_pairs(const std::string& dir);

}  // namespace vrnet
