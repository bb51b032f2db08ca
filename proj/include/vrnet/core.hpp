#pragma once
// Shared building blocks: 3-vectors, dense row-major matrices, deterministic
// RNG streams, and the error taxonomy used across the library.

#include <array>
#include <cmath>
#include <functional>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace vrnet {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct VrnetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// Rejected or ill-formed input values (non-finite coordinates, bad counts).
struct InputError : VrnetError { using VrnetError::VrnetError; };
// Operand dimension mismatch; message names both operands.
struct ShapeError : VrnetError { using VrnetError::VrnetError; };
// Degenerate configuration, neighborhood, or gradient.
struct DegenerateError : VrnetError { using VrnetError::VrnetError; };
// API misuse (e.g. backward from a non-scalar).
struct ContractError : VrnetError { using VrnetError::VrnetError; };
// File format problems; message carries the line number where known.
struct ParseError : VrnetError { using VrnetError::VrnetError; };
// Non-finite values produced at runtime; message names the stage.
struct NumericError : VrnetError { using VrnetError::VrnetError; };

// ---------------------------------------------------------------------------
// 3-vectors
// ---------------------------------------------------------------------------

using Vec3 = std::array<double, 3>;

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& v) { return {s * v[0], s * v[1], s * v[2]}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double norm2(const Vec3& v) { return dot(v, v); }
inline double norm(const Vec3& v) { return std::sqrt(norm2(v)); }
inline bool finite(const Vec3& v) {
    return std::isfinite(v[0]) && std::isfinite(v[1]) && std::isfinite(v[2]);
}

// ---------------------------------------------------------------------------
// Dense row-major matrix
// ---------------------------------------------------------------------------

struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c, double fill = 0.0) : rows(r), cols(c), a(static_cast<size_t>(r) * c, fill) {}

    double& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }

    size_t size() const { return a.size(); }
    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

    static Mat identity(int n) {
        Mat m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

inline std::string shape_str(const Mat& m) {
    return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

inline bool all_finite(const Mat& m) {
    for (double v : m.a)
        if (!std::isfinite(v)) return false;
    return true;
}

// C = A * B, naive ikj loop; adequate at desk scale.
Mat matmul(const Mat& a, const Mat& b);
Mat transpose(const Mat& m);

// ---------------------------------------------------------------------------
// Deterministic RNG
// ---------------------------------------------------------------------------

uint64_t splitmix64(uint64_t x);

// xoshiro-free deterministic stream: splitmix64-seeded explicit generator with
// distributions implemented here so results do not depend on the standard
// library's unspecified algorithms. fork() derives an independent stream from
// the base seed and a salt, regardless of how many draws were consumed.
class Rng {
public:
    explicit Rng(uint64_t seed) : seed_(seed), state_(splitmix64(seed ^ 0x6a09e667f3bcc909ull)) {}

    Rng fork(uint64_t salt) const { return Rng(splitmix64(seed_ + 0x9e3779b97f4a7c15ull * (salt + 1))); }

    uint64_t next_u64() {
        state_ = splitmix64(state_);
        return state_;
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller, one cached value.
    double gaussian() {
        if (have_cache_) {
            have_cache_ = false;
            return cache_;
        }
        double u1 = 0.0;
        do { u1 = uniform(); } while (u1 <= 0.0);
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double th = 2.0 * 3.14159265358979323846 * u2;
        cache_ = r * std::sin(th);
        have_cache_ = true;
        return r * std::cos(th);
    }

    // Uniform integer in [0, n).
    int index(int n) { return static_cast<int>(next_u64() % static_cast<uint64_t>(n)); }

    // k distinct indices from [0, n), order randomized (partial Fisher-Yates).
    std::vector<int> pick_k(int n, int k);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
            int j = static_cast<int>(next_u64() % static_cast<uint64_t>(i + 1));
            std::swap(v[static_cast<size_t>(i)], v[static_cast<size_t>(j)]);
        }
    }

    uint64_t seed() const { return seed_; }

private:
    uint64_t seed_;
    uint64_t state_;
    bool have_cache_ = false;
    double cache_ = 0.0;
};

// Runs fn(0..n-1) over at most `threads` workers. Results must be written to
// pre-sized per-index slots; the schedule is deterministic in the sense that
// every index runs exactly once regardless of thread count.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace vrnet
