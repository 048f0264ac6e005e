#include "acegan/losses.hpp"

#include <cmath>

namespace acegan {

double mse_loss(const Tensor& pred, const Tensor& target, Tensor* dpred) {
    if (!pred.same_shape(target))
        throw ShapeMismatch("mse: " + shape_str(pred.shape) + " vs " +
                            shape_str(target.shape));
    const double n = static_cast<double>(pred.numel());
    double loss = 0.0;
    if (dpred) *dpred = Tensor(pred.shape);
    for (size_t i = 0; i < pred.data.size(); ++i) {
        const double d = pred.data[i] - target.data[i];
        loss += d * d;
        if (dpred) dpred->data[i] = 2.0 * d / n;
    }
    return loss / n;
}

double cross_entropy_loss(const Tensor& probs,
                          const std::vector<int64_t>& labels, Tensor* dprobs) {
    if (probs.rank() != 2)
        throw ShapeMismatch("cross entropy: probs must be [B,K], got " +
                            shape_str(probs.shape));
    const int64_t B = probs.dim(0), K = probs.dim(1);
    if (static_cast<int64_t>(labels.size()) != B)
        throw ShapeMismatch("cross entropy: " + std::to_string(labels.size()) +
                            " labels for batch " + std::to_string(B));
    constexpr double kClip = 1e-12;
    if (dprobs) *dprobs = Tensor(probs.shape);
    double loss = 0.0;
    for (int64_t i = 0; i < B; ++i) {
        const int64_t l = labels[static_cast<size_t>(i)];
        if (l < 0 || l >= K)
            throw ShapeMismatch("cross entropy: label " + std::to_string(l) +
                                " out of range [0," + std::to_string(K) + ")");
        const double p = probs.data[i * K + l];
        if (p < kClip) {
            loss -= std::log(kClip);
            // Clip active: treat the loss as locally constant.
        } else {
            loss -= std::log(p);
            if (dprobs)
                dprobs->data[i * K + l] = -1.0 / (p * static_cast<double>(B));
        }
    }
    return loss / static_cast<double>(B);
}

int64_t argmax_row(const Tensor& t, int64_t row) {
    const int64_t n = t.dim(1);
    const double* p = t.data.data() + row * n;
    int64_t best = 0;
    for (int64_t i = 1; i < n; ++i)
        if (p[i] > p[best]) best = i;
    return best;
}

}  // namespace acegan
