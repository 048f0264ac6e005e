#include "acegan/adam.hpp"

#include <cmath>

namespace acegan {

Adam::Adam(std::vector<ParamRef> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
    m.reserve(params_.size());
    v.reserve(params_.size());
    for (const ParamRef& p : params_) {
        p.t->zero_grad();
        m.emplace_back(p.t->data.size(), 0.0);
        v.emplace_back(p.t->data.size(), 0.0);
    }
}

void Adam::zero_grad() {
    for (const ParamRef& p : params_) p.t->zero_grad();
}

void Adam::step() {
    ++t;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t));
    for (size_t pi = 0; pi < params_.size(); ++pi) {
        Tensor& w = *params_[pi].t;
        std::vector<double>& mp = m[pi];
        std::vector<double>& vp = v[pi];
        for (size_t i = 0; i < w.data.size(); ++i) {
            const double g = w.grad[i];
            mp[i] = cfg_.beta1 * mp[i] + (1.0 - cfg_.beta1) * g;
            vp[i] = cfg_.beta2 * vp[i] + (1.0 - cfg_.beta2) * g * g;
            const double mhat = mp[i] / bc1;
            const double vhat = vp[i] / bc2;
            w.data[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

}  // namespace acegan
