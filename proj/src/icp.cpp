#include "vrnet/icp.hpp"

#include <cmath>

#include "vrnet/matching.hpp"
#include "vrnet/procrustes.hpp"

namespace vrnet {

IcpResult icp_register(const PointCloud& x, const PointCloud& y, int max_iter, double tol) {
    if (x.size() < 3 || y.size() < 3)
        throw InputError("icp_register: both clouds need at least 3 points");
    IcpResult result;
    PointCloud current = x;
    Mat ym = cloud_to_mat(y);
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iter; ++it) {
        Mat cm = cloud_to_mat(current);
        std::vector<int> nn = knn(cm, ym, 1);
        PointCloud matched;
        matched.points.reserve(static_cast<size_t>(current.size()));
        for (int i = 0; i < current.size(); ++i)
            matched.points.push_back(y.points[static_cast<size_t>(nn[static_cast<size_t>(i)])]);

        RigidTransform step = solve_rigid(current, matched);
        current = apply_transform(step, current);
        result.transform = compose(step, result.transform);
        ++result.iterations;

        double resid = 0.0;
        for (int i = 0; i < current.size(); ++i)
            resid += norm2(current.points[static_cast<size_t>(i)] - matched.points[static_cast<size_t>(i)]);
        resid /= current.size();
        result.residuals.push_back(resid);

        if (std::abs(prev - resid) < tol) {
            result.converged = true;
            break;
        }
        prev = resid;
    }
    return result;
}

RigidTransform iterative_refine(const RegisterFn& register_fn, const PointCloud& x,
                                const PointCloud& y, int rounds) {
    if (rounds < 1) throw InputError("iterative_refine: rounds must be >= 1");
    RigidTransform total;
    PointCloud current = x;
    for (int r = 0; r < rounds; ++r) {
        RigidTransform step = register_fn(current, y);
        current = apply_transform(step, current);
        total = compose(step, total);
    }
    return total;
}

}  // namespace vrnet
