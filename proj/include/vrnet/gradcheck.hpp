#pragma once
// Finite-difference verification suite covering every tape primitive, the
// learned blocks, the rigid-solve VJP, and the losses end-to-end on small
// instances. Shared by the CLI `gradcheck` command and the acceptance tests.

#include <string>
#include <vector>

#include <cstdint>

namespace vrnet {

struct GradCheckBlock {
    std::string name;
    double max_rel_err = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct GradCheckReport {
    std::vector<GradCheckBlock> blocks;
    bool all_pass = true;
    double worst = 0.0;
};

GradCheckReport run_gradcheck(uint64_t seed = 7);
std::string format_gradcheck(const GradCheckReport& report);

}  // namespace vrnet
