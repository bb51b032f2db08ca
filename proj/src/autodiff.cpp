#include "vrnet/autodiff.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>

#include "vrnet/procrustes.hpp"

#include <json.hpp>

namespace vrnet::ad {

NodeId Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Tape::leaf(Mat v, bool requires_grad) {
    Node n;
    n.op = Op::kLeaf;
    n.value = std::move(v);
    n.requires_grad = requires_grad;
    return push(std::move(n));
}

NodeId Tape::constant_full(int rows, int cols, double fill) {
    return constant(Mat(rows, cols, fill));
}

namespace {
Node make(Op op, Mat value, std::initializer_list<NodeId> parents, const std::vector<Node>& nodes) {
    Node n;
    n.op = op;
    n.value = std::move(value);
    int i = 0;
    for (NodeId p : parents) {
        n.parents[static_cast<size_t>(i++)] = p;
        n.requires_grad = n.requires_grad || nodes[static_cast<size_t>(p)].requires_grad;
    }
    n.n_parents = i;
    return n;
}
}  // namespace

NodeId Tape::add(NodeId a, NodeId b) {
    const Mat& av = value(a);
    const Mat& bv = value(b);
    if (av.same_shape(bv)) {
        Mat out = av;
        for (size_t i = 0; i < out.size(); ++i) out.a[i] += bv.a[i];
        return push(make(Op::kAdd, std::move(out), {a, b}, nodes_));
    }
    if (bv.rows == 1 && bv.cols == av.cols && av.rows > 1) {
        Mat out = av;
        for (int i = 0; i < av.rows; ++i)
            for (int j = 0; j < av.cols; ++j) out(i, j) += bv(0, j);
        return push(make(Op::kAddRowVec, std::move(out), {a, b}, nodes_));
    }
    throw ShapeError("add: " + shape_str(av) + " vs " + shape_str(bv));
}

NodeId Tape::scale(NodeId a, double s) {
    Mat out = value(a);
    for (double& x : out.a) x *= s;
    Node n = make(Op::kScale, std::move(out), {a}, nodes_);
    n.scalar = s;
    return push(std::move(n));
}

NodeId Tape::matmul(NodeId a, NodeId b) {
    const Mat& av = value(a);
    const Mat& bv = value(b);
    if (av.cols != bv.rows)
        throw ShapeError("matmul: " + shape_str(av) + " * " + shape_str(bv));
    return push(make(Op::kMatMul, vrnet::matmul(av, bv), {a, b}, nodes_));
}

NodeId Tape::transpose(NodeId a) {
    return push(make(Op::kTranspose, vrnet::transpose(value(a)), {a}, nodes_));
}

NodeId Tape::concat_cols(NodeId a, NodeId b) {
    const Mat& av = value(a);
    const Mat& bv = value(b);
    if (av.rows != bv.rows)
        throw ShapeError("concat_cols: " + shape_str(av) + " vs " + shape_str(bv));
    Mat out(av.rows, av.cols + bv.cols);
    for (int i = 0; i < av.rows; ++i) {
        for (int j = 0; j < av.cols; ++j) out(i, j) = av(i, j);
        for (int j = 0; j < bv.cols; ++j) out(i, av.cols + j) = bv(i, j);
    }
    return push(make(Op::kConcatCols, std::move(out), {a, b}, nodes_));
}

NodeId Tape::relu(NodeId a) {
    Mat out = value(a);
    for (double& x : out.a) x = x > 0.0 ? x : 0.0;
    return push(make(Op::kRelu, std::move(out), {a}, nodes_));
}

NodeId Tape::row_softmax(NodeId a) {
    const Mat& av = value(a);
    Mat out(av.rows, av.cols);
    for (int i = 0; i < av.rows; ++i) {
        double mx = av(i, 0);
        for (int j = 1; j < av.cols; ++j) mx = std::max(mx, av(i, j));
        double sum = 0.0;
        for (int j = 0; j < av.cols; ++j) {
            double e = std::exp(av(i, j) - mx);
            out(i, j) = e;
            sum += e;
        }
        for (int j = 0; j < av.cols; ++j) out(i, j) /= sum;
    }
    return push(make(Op::kRowSoftmax, std::move(out), {a}, nodes_));
}

NodeId Tape::max_pool_rows(NodeId a, int group) {
    const Mat& av = value(a);
    if (group < 1 || av.rows % group != 0)
        throw ShapeError("max_pool_rows: rows " + std::to_string(av.rows) +
                         " not divisible by group " + std::to_string(group));
    int n = av.rows / group;
    Mat out(n, av.cols);
    std::vector<int> arg(static_cast<size_t>(n) * av.cols);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < av.cols; ++j) {
            int best = i * group;
            double bv = av(best, j);
            for (int r = 1; r < group; ++r) {
                double v = av(i * group + r, j);
                if (v > bv) {
                    bv = v;
                    best = i * group + r;
                }
            }
            out(i, j) = bv;
            arg[static_cast<size_t>(i) * av.cols + j] = best;
        }
    }
    Node node = make(Op::kMaxPoolRows, std::move(out), {a}, nodes_);
    node.group = group;
    node.idx = std::move(arg);
    return push(std::move(node));
}

NodeId Tape::gather_rows(NodeId a, std::vector<int> rows) {
    const Mat& av = value(a);
    Mat out(static_cast<int>(rows.size()), av.cols);
    for (size_t k = 0; k < rows.size(); ++k) {
        int r = rows[k];
        if (r < 0 || r >= av.rows) throw ShapeError("gather_rows: index out of range");
        for (int j = 0; j < av.cols; ++j) out(static_cast<int>(k), j) = av(r, j);
    }
    Node n = make(Op::kGatherRows, std::move(out), {a}, nodes_);
    n.idx = std::move(rows);
    return push(std::move(n));
}

NodeId Tape::gather_cols(NodeId a, std::vector<int> cols) {
    const Mat& av = value(a);
    Mat out(av.rows, static_cast<int>(cols.size()));
    for (size_t k = 0; k < cols.size(); ++k) {
        int c = cols[k];
        if (c < 0 || c >= av.cols) throw ShapeError("gather_cols: index out of range");
        for (int i = 0; i < av.rows; ++i) out(i, static_cast<int>(k)) = av(i, c);
    }
    Node n = make(Op::kGatherCols, std::move(out), {a}, nodes_);
    n.idx = std::move(cols);
    return push(std::move(n));
}

NodeId Tape::gather_elems(NodeId a, std::vector<int> rows, std::vector<int> cols) {
    if (rows.size() != cols.size())
        throw ShapeError("gather_elems: index arrays differ in length");
    const Mat& av = value(a);
    Mat out(static_cast<int>(rows.size()), 1);
    for (size_t k = 0; k < rows.size(); ++k) {
        if (rows[k] < 0 || rows[k] >= av.rows || cols[k] < 0 || cols[k] >= av.cols)
            throw ShapeError("gather_elems: index out of range");
        out(static_cast<int>(k), 0) = av(rows[k], cols[k]);
    }
    Node n = make(Op::kGatherElems, std::move(out), {a}, nodes_);
    n.idx = std::move(rows);
    n.idx2 = std::move(cols);
    return push(std::move(n));
}

NodeId Tape::norm_channels(NodeId a, NodeId gamma, NodeId beta, double eps) {
    const Mat& av = value(a);
    const Mat& gv = value(gamma);
    const Mat& bv = value(beta);
    if (gv.rows != 1 || gv.cols != av.cols || bv.rows != 1 || bv.cols != av.cols)
        throw ShapeError("norm_channels: scale/shift must be 1x" + std::to_string(av.cols) +
                         ", got " + shape_str(gv) + " and " + shape_str(bv));
    int m = av.rows;
    Mat out(m, av.cols);
    std::vector<double> saved(static_cast<size_t>(av.cols) * 2);
    for (int j = 0; j < av.cols; ++j) {
        double mean = 0.0;
        for (int i = 0; i < m; ++i) mean += av(i, j);
        mean /= m;
        double var = 0.0;
        for (int i = 0; i < m; ++i) {
            double d = av(i, j) - mean;
            var += d * d;
        }
        var /= m;
        double inv_std = 1.0 / std::sqrt(var + eps);
        saved[static_cast<size_t>(j)] = mean;
        saved[static_cast<size_t>(av.cols + j)] = inv_std;
        for (int i = 0; i < m; ++i)
            out(i, j) = gv(0, j) * (av(i, j) - mean) * inv_std + bv(0, j);
    }
    Node n = make(Op::kNormChannels, std::move(out), {a, gamma, beta}, nodes_);
    n.saved = std::move(saved);
    n.eps = eps;
    return push(std::move(n));
}

NodeId Tape::mean_all(NodeId a) {
    const Mat& av = value(a);
    double s = 0.0;
    for (double x : av.a) s += x;
    Mat out(1, 1);
    out(0, 0) = s / static_cast<double>(av.size());
    return push(make(Op::kMeanAll, std::move(out), {a}, nodes_));
}

NodeId Tape::sum_all(NodeId a) {
    const Mat& av = value(a);
    double s = 0.0;
    for (double x : av.a) s += x;
    Mat out(1, 1);
    out(0, 0) = s;
    return push(make(Op::kSumAll, std::move(out), {a}, nodes_));
}

NodeId Tape::square(NodeId a) {
    Mat out = value(a);
    for (double& x : out.a) x *= x;
    return push(make(Op::kSquare, std::move(out), {a}, nodes_));
}

NodeId Tape::sqrt(NodeId a) {
    Mat out = value(a);
    for (double& x : out.a) x = std::sqrt(x);
    return push(make(Op::kSqrt, std::move(out), {a}, nodes_));
}

NodeId Tape::procrustes(NodeId y, PointCloud x) {
    const Mat& yv = value(y);
    if (yv.cols != 3 || yv.rows != x.size())
        throw ShapeError("procrustes: y must be " + std::to_string(x.size()) + "x3, got " + shape_str(yv));
    PointCloud yc;
    yc.points.resize(static_cast<size_t>(yv.rows));
    for (int i = 0; i < yv.rows; ++i) yc.points[static_cast<size_t>(i)] = {yv(i, 0), yv(i, 1), yv(i, 2)};
    RigidTransform t = solve_rigid(x, yc);
    Mat out(3, 4);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) out(i, j) = t.rotation[i][j];
        out(i, 3) = t.translation[static_cast<size_t>(i)];
    }
    Node n = make(Op::kProcrustes, std::move(out), {y}, nodes_);
    n.proc_x = std::make_shared<PointCloud>(std::move(x));
    return push(std::move(n));
}

Mat Tape::grad(NodeId id) const {
    const Node& n = nodes_[static_cast<size_t>(id)];
    if (n.grad.size() == 0) return Mat(n.value.rows, n.value.cols);
    return n.grad;
}

void Tape::accumulate(NodeId id, const Mat& g) {
    Node& n = at(id);
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) n.grad = Mat(n.value.rows, n.value.cols);
    for (size_t i = 0; i < g.size(); ++i) n.grad.a[i] += g.a[i];
}

void Tape::zero_grad() {
    for (Node& n : nodes_) n.grad = Mat();
}

void Tape::backward(NodeId loss) {
    Node& ln = at(loss);
    if (ln.value.rows != 1 || ln.value.cols != 1)
        throw ContractError("backward: loss must be scalar, got " + shape_str(ln.value));
    if (!ln.requires_grad) return;
    // Intermediate grads are per-sweep scratch; only leaf grads persist
    // across calls (cleared by an explicit zero_grad).
    for (Node& n : nodes_)
        if (n.op != Op::kLeaf) n.grad = Mat();
    if (ln.grad.size() == 0) ln.grad = Mat(1, 1);
    ln.grad(0, 0) += 1.0;

    for (NodeId id = loss; id >= 0; --id) {
        Node& n = at(id);
        if (!n.requires_grad || n.grad.size() == 0) continue;
        const Mat& g = n.grad;
        NodeId pa = n.parents[0];
        NodeId pb = n.parents[1];
        switch (n.op) {
            case Op::kLeaf:
                break;
            case Op::kAdd:
                accumulate(pa, g);
                accumulate(pb, g);
                break;
            case Op::kAddRowVec: {
                accumulate(pa, g);
                if (at(pb).requires_grad) {
                    Mat gb(1, g.cols);
                    for (int i = 0; i < g.rows; ++i)
                        for (int j = 0; j < g.cols; ++j) gb(0, j) += g(i, j);
                    accumulate(pb, gb);
                }
                break;
            }
            case Op::kScale: {
                Mat ga = g;
                for (double& x : ga.a) x *= n.scalar;
                accumulate(pa, ga);
                break;
            }
            case Op::kMatMul: {
                if (at(pa).requires_grad)
                    accumulate(pa, vrnet::matmul(g, vrnet::transpose(at(pb).value)));
                if (at(pb).requires_grad)
                    accumulate(pb, vrnet::matmul(vrnet::transpose(at(pa).value), g));
                break;
            }
            case Op::kTranspose:
                accumulate(pa, vrnet::transpose(g));
                break;
            case Op::kConcatCols: {
                const Mat& av = at(pa).value;
                const Mat& bv = at(pb).value;
                if (at(pa).requires_grad) {
                    Mat ga(av.rows, av.cols);
                    for (int i = 0; i < av.rows; ++i)
                        for (int j = 0; j < av.cols; ++j) ga(i, j) = g(i, j);
                    accumulate(pa, ga);
                }
                if (at(pb).requires_grad) {
                    Mat gb(bv.rows, bv.cols);
                    for (int i = 0; i < bv.rows; ++i)
                        for (int j = 0; j < bv.cols; ++j) gb(i, j) = g(i, av.cols + j);
                    accumulate(pb, gb);
                }
                break;
            }
            case Op::kRelu: {
                const Mat& av = at(pa).value;
                Mat ga = g;
                // Right-derivative at the kink: d/dx relu(0) = 1.
                for (size_t i = 0; i < ga.size(); ++i)
                    if (av.a[i] < 0.0) ga.a[i] = 0.0;
                accumulate(pa, ga);
                break;
            }
            case Op::kRowSoftmax: {
                const Mat& y = n.value;
                Mat ga(y.rows, y.cols);
                for (int i = 0; i < y.rows; ++i) {
                    double dotp = 0.0;
                    for (int j = 0; j < y.cols; ++j) dotp += g(i, j) * y(i, j);
                    for (int j = 0; j < y.cols; ++j) ga(i, j) = y(i, j) * (g(i, j) - dotp);
                }
                accumulate(pa, ga);
                break;
            }
            case Op::kMaxPoolRows: {
                const Mat& av = at(pa).value;
                Mat ga(av.rows, av.cols);
                for (int i = 0; i < g.rows; ++i)
                    for (int j = 0; j < g.cols; ++j)
                        ga(n.idx[static_cast<size_t>(i) * g.cols + j], j) += g(i, j);
                accumulate(pa, ga);
                break;
            }
            case Op::kGatherRows: {
                const Mat& av = at(pa).value;
                Mat ga(av.rows, av.cols);
                for (size_t k = 0; k < n.idx.size(); ++k)
                    for (int j = 0; j < av.cols; ++j) ga(n.idx[k], j) += g(static_cast<int>(k), j);
                accumulate(pa, ga);
                break;
            }
            case Op::kGatherCols: {
                const Mat& av = at(pa).value;
                Mat ga(av.rows, av.cols);
                for (size_t k = 0; k < n.idx.size(); ++k)
                    for (int i = 0; i < av.rows; ++i) ga(i, n.idx[k]) += g(i, static_cast<int>(k));
                accumulate(pa, ga);
                break;
            }
            case Op::kGatherElems: {
                const Mat& av = at(pa).value;
                Mat ga(av.rows, av.cols);
                for (size_t k = 0; k < n.idx.size(); ++k)
                    ga(n.idx[k], n.idx2[k]) += g(static_cast<int>(k), 0);
                accumulate(pa, ga);
                break;
            }
            case Op::kNormChannels: {
                NodeId pg = n.parents[1];
                NodeId pbeta = n.parents[2];
                const Mat& av = at(pa).value;
                const Mat& gv = at(pg).value;
                int m = av.rows;
                int c = av.cols;
                Mat ga(m, c), ggamma(1, c), gbeta(1, c);
                for (int j = 0; j < c; ++j) {
                    double mean = n.saved[static_cast<size_t>(j)];
                    double inv_std = n.saved[static_cast<size_t>(c + j)];
                    double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
                    for (int i = 0; i < m; ++i) {
                        double xhat = (av(i, j) - mean) * inv_std;
                        double dxhat = g(i, j) * gv(0, j);
                        sum_dxhat += dxhat;
                        sum_dxhat_xhat += dxhat * xhat;
                        gbeta(0, j) += g(i, j);
                        ggamma(0, j) += g(i, j) * xhat;
                    }
                    for (int i = 0; i < m; ++i) {
                        double xhat = (av(i, j) - mean) * inv_std;
                        double dxhat = g(i, j) * gv(0, j);
                        ga(i, j) = inv_std / m * (m * dxhat - sum_dxhat - xhat * sum_dxhat_xhat);
                    }
                }
                if (at(pa).requires_grad) accumulate(pa, ga);
                if (at(pg).requires_grad) accumulate(pg, ggamma);
                if (at(pbeta).requires_grad) accumulate(pbeta, gbeta);
                break;
            }
            case Op::kMeanAll: {
                const Mat& av = at(pa).value;
                Mat ga(av.rows, av.cols, g(0, 0) / static_cast<double>(av.size()));
                accumulate(pa, ga);
                break;
            }
            case Op::kSumAll: {
                const Mat& av = at(pa).value;
                Mat ga(av.rows, av.cols, g(0, 0));
                accumulate(pa, ga);
                break;
            }
            case Op::kSquare: {
                const Mat& av = at(pa).value;
                Mat ga = g;
                for (size_t i = 0; i < ga.size(); ++i) ga.a[i] *= 2.0 * av.a[i];
                accumulate(pa, ga);
                break;
            }
            case Op::kSqrt: {
                Mat ga = g;
                for (size_t i = 0; i < ga.size(); ++i) ga.a[i] *= 0.5 / n.value.a[i];
                accumulate(pa, ga);
                break;
            }
            case Op::kProcrustes: {
                const Mat& yv = at(pa).value;
                PointCloud yc;
                yc.points.resize(static_cast<size_t>(yv.rows));
                for (int i = 0; i < yv.rows; ++i)
                    yc.points[static_cast<size_t>(i)] = {yv(i, 0), yv(i, 1), yv(i, 2)};
                Mat3 gr;
                Vec3 gt;
                for (int i = 0; i < 3; ++i) {
                    for (int j = 0; j < 3; ++j) gr[i][j] = g(i, j);
                    gt[static_cast<size_t>(i)] = g(i, 3);
                }
                std::vector<Vec3> gy = solve_rigid_vjp(*n.proc_x, yc, gr, gt);
                Mat ga(yv.rows, 3);
                for (int i = 0; i < yv.rows; ++i)
                    for (int j = 0; j < 3; ++j) ga(i, j) = gy[static_cast<size_t>(i)][static_cast<size_t>(j)];
                accumulate(pa, ga);
                break;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// grad_check
// ---------------------------------------------------------------------------

double grad_check(const GraphBuilder& build, const std::vector<Mat>& leaves, double step) {
    Tape tape;
    std::vector<NodeId> ids;
    ids.reserve(leaves.size());
    for (const Mat& m : leaves) ids.push_back(tape.leaf(m, true));
    NodeId loss = build(tape, ids);
    tape.backward(loss);

    auto eval = [&](const std::vector<Mat>& probe) {
        Tape t;
        std::vector<NodeId> pids;
        pids.reserve(probe.size());
        for (const Mat& m : probe) pids.push_back(t.leaf(m, false));
        NodeId l = build(t, pids);
        double v = t.value(l)(0, 0);
        if (!std::isfinite(v)) throw NumericError("grad_check: non-finite probe evaluation");
        return v;
    };

    double max_rel = 0.0;
    std::vector<Mat> probe = leaves;
    for (size_t li = 0; li < leaves.size(); ++li) {
        Mat analytic = tape.grad(ids[li]);
        for (size_t k = 0; k < probe[li].size(); ++k) {
            double orig = probe[li].a[k];
            probe[li].a[k] = orig + step;
            double fp = eval(probe);
            probe[li].a[k] = orig - step;
            double fm = eval(probe);
            probe[li].a[k] = orig;
            double fd = (fp - fm) / (2.0 * step);
            double diff = std::abs(analytic.a[k] - fd);
            // Below the central-difference noise floor (roundoff is about
            // eps * |f| / step) the comparison carries no information; this
            // absolute guard cannot hide a real defect at the tolerances in
            // play, since any meaningful disagreement is far larger.
            if (diff < 1e-7) continue;
            double denom = std::max({std::abs(analytic.a[k]), std::abs(fd), 1e-8});
            max_rel = std::max(max_rel, diff / denom);
        }
    }
    return max_rel;
}

// ---------------------------------------------------------------------------
// ParamStore + checkpoint
// ---------------------------------------------------------------------------

void ParamStore::add(const std::string& name, Mat init) {
    if (has(name)) throw ContractError("ParamStore: duplicate parameter " + name);
    Entry e;
    e.m = Mat(init.rows, init.cols);
    e.v = Mat(init.rows, init.cols);
    e.value = std::move(init);
    entries.emplace(name, std::move(e));
}

Mat& ParamStore::value(const std::string& name) {
    auto it = entries.find(name);
    if (it == entries.end()) throw ContractError("ParamStore: unknown parameter " + name);
    return it->second.value;
}

const Mat& ParamStore::value(const std::string& name) const {
    auto it = entries.find(name);
    if (it == entries.end()) throw ContractError("ParamStore: unknown parameter " + name);
    return it->second.value;
}

std::vector<std::string> ParamStore::names(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries)
        if (k.rfind(prefix, 0) == 0) out.push_back(k);
    return out;
}

namespace {
constexpr char kMagic[] = "VRNETCKPT1";

void put_f64_le(std::string& buf, double d) {
    uint64_t u = std::bit_cast<uint64_t>(d);
    for (int b = 0; b < 8; ++b) buf.push_back(static_cast<char>((u >> (8 * b)) & 0xff));
}

double get_f64_le(const char* p) {
    uint64_t u = 0;
    for (int b = 0; b < 8; ++b)
        u |= static_cast<uint64_t>(static_cast<unsigned char>(p[b])) << (8 * b);
    return std::bit_cast<double>(u);
}
}  // namespace

void save_checkpoint(const ParamStore& store, const std::string& path) {
    nlohmann::json manifest;
    manifest["params"] = nlohmann::json::array();
    std::string blob;
    for (const auto& [name, e] : store.entries) {
        nlohmann::json p;
        p["name"] = name;
        p["rows"] = e.value.rows;
        p["cols"] = e.value.cols;
        p["dtype"] = "f64";
        p["offset"] = blob.size();
        manifest["params"].push_back(p);
        for (double d : e.value.a) put_f64_le(blob, d);
    }
    std::string mtxt = manifest.dump();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("save_checkpoint: cannot open " + path);
    f << kMagic << "\n" << mtxt.size() << "\n" << mtxt << blob;
    if (!f) throw InputError("save_checkpoint: write failed for " + path);
}

void load_checkpoint(ParamStore& store, const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("load_checkpoint: cannot open " + path);
    std::string magic;
    std::getline(f, magic);
    if (magic != kMagic) throw ParseError("load_checkpoint: bad magic in " + path);
    std::string len_line;
    std::getline(f, len_line);
    size_t mlen = std::stoul(len_line);
    std::string mtxt(mlen, '\0');
    f.read(mtxt.data(), static_cast<std::streamsize>(mlen));
    std::string blob((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    nlohmann::json manifest = nlohmann::json::parse(mtxt);
    for (const auto& p : manifest.at("params")) {
        std::string name = p.at("name");
        int rows = p.at("rows");
        int cols = p.at("cols");
        size_t offset = p.at("offset");
        Mat m(rows, cols);
        if (offset + m.size() * 8 > blob.size())
            throw ParseError("load_checkpoint: truncated data for " + name);
        for (size_t k = 0; k < m.size(); ++k) m.a[k] = get_f64_le(blob.data() + offset + 8 * k);
        if (store.has(name))
            store.value(name) = std::move(m);
        else
            store.add(name, std::move(m));
    }
}

}  // namespace vrnet::ad
