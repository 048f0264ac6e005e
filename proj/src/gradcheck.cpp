#include "acegan/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "acegan/errors.hpp"

namespace acegan {

GradCheckReport check_gradients(const std::vector<ParamRef>& params,
                                const std::function<void()>& compute_grads,
                                const std::function<double()>& loss,
                                int64_t max_per_tensor, Rng* pick, double h) {
    compute_grads();
    // Snapshot the analytic gradients before the probing passes run any more
    // forwards.
    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (const ParamRef& p : params) {
        if (p.t->grad.size() != p.t->data.size())
            throw NoForwardCache("gradient check: no gradient for " + p.name);
        analytic.push_back(p.t->grad);
    }

    GradCheckReport rep;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& w = *params[pi].t;
        const int64_t n = w.numel();
        std::vector<int64_t> idx;
        if (n <= max_per_tensor) {
            idx.resize(static_cast<size_t>(n));
            for (int64_t i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
        } else {
            if (!pick)
                throw DegenerateInput("gradient check: " + params[pi].name +
                                      " needs subsampling but no picker given");
            idx.resize(static_cast<size_t>(max_per_tensor));
            for (int64_t& v : idx)
                v = static_cast<int64_t>(pick->below(static_cast<uint64_t>(n)));
        }
        for (int64_t i : idx) {
            const double saved = w.data[static_cast<size_t>(i)];
            w.data[static_cast<size_t>(i)] = saved + h;
            const double fp = loss();
            w.data[static_cast<size_t>(i)] = saved - h;
            const double fm = loss();
            w.data[static_cast<size_t>(i)] = saved;
            const double numeric = (fp - fm) / (2.0 * h);
            const double a = analytic[pi][static_cast<size_t>(i)];
            const double rel = std::abs(a - numeric) /
                               std::max({1.0, std::abs(a), std::abs(numeric)});
            ++rep.checked;
            if (rel > rep.max_rel_err) {
                rep.max_rel_err = rel;
                rep.worst = params[pi].name + "[" + std::to_string(i) + "]";
            }
        }
    }
    return rep;
}

}  // namespace acegan
