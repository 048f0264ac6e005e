#pragma once

#include <functional>
#include <string>
#include <vector>

#include "acegan/layers.hpp"
#include "acegan/rng.hpp"

namespace acegan {

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst;  // "param[index]" of the largest error
    int64_t checked = 0;
};

// Compares analytic gradients against central finite differences.
//
// compute_grads must zero the gradients, run a forward pass and a backward
// pass so that every tensor in params holds its analytic gradient. loss must
// rerun the same forward pass (identically: closures with stochastic parts
// have to reseed their generator) and return the scalar loss. Each parameter
// tensor is probed at up to max_per_tensor entries; larger tensors are
// subsampled with pick. Relative error uses |a-n| / max(1, |a|, |n|).
GradCheckReport check_gradients(const std::vector<ParamRef>& params,
                                const std::function<void()>& compute_grads,
                                const std::function<double()>& loss,
                                int64_t max_per_tensor, Rng* pick = nullptr,
                                double h = 1e-5);

}  // namespace acegan
