#pragma once
// Plain point-to-point ICP (source-to-target nearest neighbor, no trimming)
// and the iterative refinement wrapper that re-applies a registration
// function and composes the per-round transforms.

#include <functional>

#include "vrnet/geom.hpp"

namespace vrnet {

struct IcpResult {
    RigidTransform transform;
    std::vector<double> residuals;  // mean squared correspondence distance per iteration
    int iterations = 0;
    bool converged = false;
};

IcpResult icp_register(const PointCloud& x, const PointCloud& y, int max_iter = 100,
                       double tol = 1e-8);

using RegisterFn = std::function<RigidTransform(const PointCloud&, const PointCloud&)>;

// T_final = T_k o ... o T_1, each round re-solving on the re-posed source.
RigidTransform iterative_refine(const RegisterFn& register_fn, const PointCloud& x,
                                const PointCloud& y, int rounds);

}  // namespace vrnet
