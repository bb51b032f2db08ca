#pragma once
// Minimal reverse-mode automatic differentiation over dense 2-D real arrays.
//
// A Tape owns a flat vector of nodes; construction order is topological, so
// the backward pass is a single reverse sweep. Shapes must match exactly; the
// only broadcast is a 1xC row vector added across the rows of an NxC matrix
// (leading-axis broadcast, used for layer biases). Gradients accumulate
// additively across fan-out and are cleared only by an explicit zero_grad().

#include <functional>
#include <map>
#include <memory>
#include <string>

#include "vrnet/geom.hpp"

namespace vrnet::ad {

using NodeId = int;

enum class Op {
    kLeaf,
    kAdd,
    kAddRowVec,
    kScale,
    kMatMul,
    kTranspose,
    kConcatCols,
    kRelu,
    kRowSoftmax,
    kMaxPoolRows,
    kGatherRows,
    kGatherCols,
    kGatherElems,
    kNormChannels,
    kMeanAll,
    kSumAll,
    kSquare,
    kSqrt,
    kProcrustes,
};

struct Node {
    Op op = Op::kLeaf;
    Mat value;
    Mat grad;  // lazily allocated; empty means "all zeros so far"
    bool requires_grad = false;
    std::array<NodeId, 3> parents{-1, -1, -1};
    int n_parents = 0;

    double scalar = 0.0;            // kScale factor
    int group = 0;                  // kMaxPoolRows group size
    std::vector<int> idx;           // gather indices / recorded argmax rows
    std::vector<int> idx2;          // gather_elems column indices
    std::vector<double> saved;      // kNormChannels: per-column mean then inv-std
    double eps = 0.0;               // kNormChannels epsilon
    std::shared_ptr<PointCloud> proc_x;  // kProcrustes: fixed source cloud
};

class Tape {
public:
    NodeId leaf(Mat v, bool requires_grad);
    NodeId constant(Mat v) { return leaf(std::move(v), false); }
    NodeId constant_full(int rows, int cols, double fill);

    NodeId add(NodeId a, NodeId b);
    NodeId scale(NodeId a, double s);
    NodeId matmul(NodeId a, NodeId b);
    NodeId transpose(NodeId a);
    NodeId concat_cols(NodeId a, NodeId b);
    NodeId relu(NodeId a);
    NodeId row_softmax(NodeId a);
    // Reduces each consecutive block of `group` rows to its columnwise max;
    // the winning row index per output entry is recorded for the backward
    // pass (first maximum wins on ties).
    NodeId max_pool_rows(NodeId a, int group);
    NodeId gather_rows(NodeId a, std::vector<int> rows);
    NodeId gather_cols(NodeId a, std::vector<int> cols);
    // out(k, 0) = a(rows[k], cols[k]); backward scatters.
    NodeId gather_elems(NodeId a, std::vector<int> rows, std::vector<int> cols);
    // Per-channel standardization over the row axis (mean 0 / var 1 per
    // column) with learnable 1xC scale and shift.
    NodeId norm_channels(NodeId a, NodeId gamma, NodeId beta, double eps = 1e-5);
    NodeId mean_all(NodeId a);
    NodeId sum_all(NodeId a);
    NodeId square(NodeId a);
    NodeId sqrt(NodeId a);
    // Rigid solve of the fixed source cloud onto the Nx3 node y. Output is
    // the 3x4 block [R | t]; backward routes through solve_rigid_vjp.
    NodeId procrustes(NodeId y, PointCloud x);

    // Compositions (no new primitives).
    NodeId sub(NodeId a, NodeId b) { return add(a, scale(b, -1.0)); }
    // sqrt(mean((a - b)^2)) over all entries.
    NodeId rmse(NodeId a, NodeId b) { return sqrt(mean_all(square(sub(a, b)))); }

    const Mat& value(NodeId id) const { return nodes_[static_cast<size_t>(id)].value; }
    // Zero matrix if the node never received a gradient.
    Mat grad(NodeId id) const;
    bool requires_grad(NodeId id) const { return nodes_[static_cast<size_t>(id)].requires_grad; }

    void backward(NodeId loss);
    void zero_grad();
    int size() const { return static_cast<int>(nodes_.size()); }

private:
    NodeId push(Node n);
    Node& at(NodeId id) { return nodes_[static_cast<size_t>(id)]; }
    void accumulate(NodeId id, const Mat& g);
    std::vector<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Gradient verification
// ---------------------------------------------------------------------------

// Builds the scalar graph twice per probed component and compares backward()
// against central finite differences. The builder must be a pure function of
// the leaf values. Returns the max relative error with denominators floored
// at 1e-8; components where the two sides agree within 1e-7 absolute sit
// below the finite-difference noise floor and are skipped. Throws
// NumericError if a probe evaluates non-finite.
using GraphBuilder = std::function<NodeId(Tape&, const std::vector<NodeId>&)>;
double grad_check(const GraphBuilder& build, const std::vector<Mat>& leaves, double step = 1e-5);

// ---------------------------------------------------------------------------
// Parameter store
// ---------------------------------------------------------------------------

struct ParamStore {
    struct Entry {
        Mat value;
        Mat m;  // Adam first moment
        Mat v;  // Adam second moment
    };
    std::map<std::string, Entry> entries;  // ordered; iteration is deterministic

    void add(const std::string& name, Mat init);
    bool has(const std::string& name) const { return entries.count(name) != 0; }
    Mat& value(const std::string& name);
    const Mat& value(const std::string& name) const;
    std::vector<std::string> names(const std::string& prefix = "") const;
};

// Checkpoint file: magic line, manifest byte length, JSON manifest listing
// (name, shape, dtype, byte offset), then little-endian IEEE-754 float64
// data. Round-trips bit-exactly.
void save_checkpoint(const ParamStore& store, const std::string& path);
void load_checkpoint(ParamStore& store, const std::string& path);

}  // namespace vrnet::ad
