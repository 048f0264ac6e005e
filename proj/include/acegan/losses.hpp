#pragma once

#include <cstdint>
#include <vector>

#include "acegan/tensor.hpp"

namespace acegan {

// Mean squared error over every element of pred (mean over batch*features).
// If dpred is non-null it receives the gradient, overwriting its contents.
double mse_loss(const Tensor& pred, const Tensor& target, Tensor* dpred);

// -mean_b log(probs[b, labels[b]]), with probabilities clipped below at
// 1e-12 before the log. If dprobs is non-null it receives the gradient with
// respect to the probabilities (zero where the clip was active).
double cross_entropy_loss(const Tensor& probs,
                          const std::vector<int64_t>& labels, Tensor* dprobs);

// Index of the largest entry in row `row` of a [B,n] tensor; ties resolve to
// the lowest index.
int64_t argmax_row(const Tensor& t, int64_t row);

}  // namespace acegan
