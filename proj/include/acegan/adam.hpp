#pragma once

#include <cstdint>
#include <vector>

#include "acegan/layers.hpp"

namespace acegan {

struct AdamConfig {
    double lr = 0.0002;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam with bias correction. Moment buffers are public so checkpoints can
// save and restore the full optimizer state.
class Adam {
public:
    Adam(std::vector<ParamRef> params, AdamConfig cfg);

    void zero_grad();
    void step();

    const std::vector<ParamRef>& params() const { return params_; }

    int64_t t = 0;
    std::vector<std::vector<double>> m, v;  // one buffer per parameter tensor

private:
    std::vector<ParamRef> params_;
    AdamConfig cfg_;
};

}  // namespace acegan
