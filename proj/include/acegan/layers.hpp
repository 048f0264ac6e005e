#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "acegan/rng.hpp"
#include "acegan/tensor.hpp"

namespace acegan {

// Named handle to a learnable tensor. Optimizers and the gradient checker
// walk these; the tensors themselves live inside the layers.
struct ParamRef {
    std::string name;
    Tensor* t;
};

enum class Act { linear, relu, softmax };

// Fully connected layer: y = act(x W^T + b), x is [B,in], y is [B,out].
struct Dense {
    int64_t in_dim, out_dim;
    Act act;
    Tensor w;  // [out,in]
    Tensor b;  // [out]

    Dense(int64_t in, int64_t out, Act a);
    void init(Rng& rng, double stddev);
    Tensor forward(const Tensor& x);
    // dy is the gradient at the layer output (post-activation). Returns the
    // gradient at the input; accumulates into w.grad/b.grad unless
    // param_grads is false.
    Tensor backward(const Tensor& dy, bool param_grads = true);
    std::vector<ParamRef> params(const std::string& prefix);

private:
    Tensor x_cache_, y_cache_;
};

// Lookup table: x is [B] of integer-valued labels, y is [B,dim] rows of w.
struct Embedding {
    int64_t num, dim;
    Tensor w;  // [num,dim]

    Embedding(int64_t num_embeddings, int64_t d);
    void init(Rng& rng, double stddev);
    Tensor forward(const Tensor& labels);
    // No gradient flows to the labels; only w.grad is filled.
    void backward(const Tensor& dy, bool param_grads = true);
    std::vector<ParamRef> params(const std::string& prefix);

private:
    std::vector<int64_t> labels_cache_;
};

// y = a * b elementwise; both inputs cached for the backward pass.
struct Multiply {
    Tensor forward(const Tensor& a, const Tensor& b);
    void backward(const Tensor& dy, Tensor& da, Tensor& db);

private:
    Tensor a_cache_, b_cache_;
};

// Batch normalization over the batch dimension of [B,n]. Running statistics
// follow running = momentum*running + (1-momentum)*batch; batch variance is
// the biased (1/B) estimate. Training mode normalizes with batch statistics,
// inference mode with the running ones.
struct BatchNorm1d {
    int64_t n;
    double momentum;
    double eps = 1e-5;
    Tensor gamma, beta;          // [n]
    Tensor run_mean, run_var;    // [n]

    explicit BatchNorm1d(int64_t features, double mom = 0.8);
    Tensor forward(const Tensor& x, bool training);
    Tensor backward(const Tensor& dy, bool param_grads = true);
    std::vector<ParamRef> params(const std::string& prefix);

private:
    Tensor xhat_cache_;
    std::vector<double> invstd_cache_;
    int64_t batch_cache_ = 0;
};

// Valid 2d convolution, stride 1: x [B,IC,H,W] -> y [B,OC,H-KH+1,W-KW+1],
// with an optional fused ReLU. Implemented with im2col one image at a time.
struct Conv2d {
    int64_t in_ch, out_ch, k;
    Act act;  // linear or relu
    Tensor w;  // [OC, IC*k*k]
    Tensor b;  // [OC]

    Conv2d(int64_t ic, int64_t oc, int64_t kernel, Act a);
    void init(Rng& rng, double stddev);
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& dy, bool param_grads = true);
    std::vector<ParamRef> params(const std::string& prefix);

private:
    Tensor x_cache_, y_cache_;
    std::vector<double> cols_;  // im2col scratch, one image
};

// Non-overlapping max pooling with k x k windows; out = floor(in/k). Ties go
// to the first maximum in row-major window order.
struct MaxPool2d {
    int64_t k;
    explicit MaxPool2d(int64_t kernel) : k(kernel) {}
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& dy);

private:
    std::vector<int64_t> in_shape_;
    std::vector<int64_t> argmax_;  // flat input index per output element
};

// Non-overlapping average pooling with k x k windows; out = floor(in/k).
struct AvgPool2d {
    int64_t k;
    explicit AvgPool2d(int64_t kernel) : k(kernel) {}
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& dy);

private:
    std::vector<int64_t> in_shape_;
};

// Inverted dropout: training keeps each element with probability 1-rate and
// scales by 1/(1-rate); inference is the identity. Mask draws come from the
// supplied generator, one uniform per element in row-major order.
struct Dropout {
    double rate;
    Rng* rng;
    Dropout(double r, Rng& g) : rate(r), rng(&g) {}
    Tensor forward(const Tensor& x, bool training);
    Tensor backward(const Tensor& dy);

private:
    std::vector<double> mask_;  // scale factors from the last training pass
};

// [B,...] -> [B,prod(rest)]. Row-major, so only the shape changes.
struct Flatten {
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& dy);

private:
    std::vector<int64_t> in_shape_;
};

// Per-sample outer product: u [B,n], v [B,m] -> y [B,n,m], y = u v^T.
struct OuterProduct {
    Tensor forward(const Tensor& u, const Tensor& v);
    void backward(const Tensor& dy, Tensor& du, Tensor& dv);

private:
    Tensor u_cache_, v_cache_;
};

}  // namespace acegan
