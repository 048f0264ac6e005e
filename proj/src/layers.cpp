#include "acegan/layers.hpp"

#include <algorithm>
#include <cmath>

#include "acegan/matmul.hpp"

namespace acegan {

namespace {

void apply_act_rows(Tensor& y, Act act, int64_t rows, int64_t cols) {
    if (act == Act::linear) return;
    if (act == Act::relu) {
        for (double& v : y.data) v = v > 0.0 ? v : 0.0;
        return;
    }
    // Row-wise softmax with max subtraction for stability.
    for (int64_t r = 0; r < rows; ++r) {
        double* p = y.data.data() + r * cols;
        double mx = p[0];
        for (int64_t c = 1; c < cols; ++c) mx = std::max(mx, p[c]);
        double sum = 0.0;
        for (int64_t c = 0; c < cols; ++c) {
            p[c] = std::exp(p[c] - mx);
            sum += p[c];
        }
        for (int64_t c = 0; c < cols; ++c) p[c] /= sum;
    }
}

// Gradient at the pre-activation given the gradient at the output and the
// cached post-activation values.
Tensor act_backward(const Tensor& dy, const Tensor& y, Act act, int64_t rows,
                    int64_t cols) {
    Tensor dz(dy.shape);
    if (act == Act::linear) {
        dz.data = dy.data;
    } else if (act == Act::relu) {
        for (size_t i = 0; i < dy.data.size(); ++i)
            dz.data[i] = y.data[i] > 0.0 ? dy.data[i] : 0.0;
    } else {
        // softmax Jacobian: dz_i = p_i (g_i - sum_j g_j p_j)
        for (int64_t r = 0; r < rows; ++r) {
            const double* p = y.data.data() + r * cols;
            const double* g = dy.data.data() + r * cols;
            double gp = 0.0;
            for (int64_t c = 0; c < cols; ++c) gp += g[c] * p[c];
            double* d = dz.data.data() + r * cols;
            for (int64_t c = 0; c < cols; ++c) d[c] = p[c] * (g[c] - gp);
        }
    }
    return dz;
}

}  // namespace

// ---------------------------------------------------------------- Dense

Dense::Dense(int64_t in, int64_t out, Act a)
    : in_dim(in), out_dim(out), act(a), w({out, in}), b({out}) {
    w.alloc_grad();
    b.alloc_grad();
}

void Dense::init(Rng& rng, double stddev) {
    for (double& v : w.data) v = rng.normal(0.0, stddev);
    std::fill(b.data.begin(), b.data.end(), 0.0);
}

Tensor Dense::forward(const Tensor& x) {
    if (x.rank() != 2 || x.dim(1) != in_dim)
        throw ShapeMismatch("dense: input " + shape_str(x.shape) + ", want [B," +
                            std::to_string(in_dim) + "]");
    const int64_t B = x.dim(0);
    Tensor y({B, out_dim});
    for (int64_t i = 0; i < B; ++i)
        std::copy(b.data.begin(), b.data.end(), y.data.begin() + i * out_dim);
    mm_nt_acc(y.data.data(), x.data.data(), w.data.data(), B, out_dim, in_dim);
    apply_act_rows(y, act, B, out_dim);
    x_cache_ = x;
    y_cache_ = y;
    return y;
}

Tensor Dense::backward(const Tensor& dy, bool param_grads) {
    if (x_cache_.data.empty()) throw NoForwardCache("dense backward");
    const int64_t B = x_cache_.dim(0);
    require_shape(dy, {B, out_dim}, "dense backward");
    Tensor dz = act_backward(dy, y_cache_, act, B, out_dim);
    if (param_grads) {
        mm_tn_acc(w.grad.data(), dz.data.data(), x_cache_.data.data(), B,
                  out_dim, in_dim);
        for (int64_t i = 0; i < B; ++i)
            for (int64_t o = 0; o < out_dim; ++o)
                b.grad[o] += dz.data[i * out_dim + o];
    }
    Tensor dx({B, in_dim});
    mm_nn_acc(dx.data.data(), dz.data.data(), w.data.data(), B, out_dim,
              in_dim);
    return dx;
}

std::vector<ParamRef> Dense::params(const std::string& prefix) {
    return {{prefix + ".w", &w}, {prefix + ".b", &b}};
}

// ------------------------------------------------------------ Embedding

Embedding::Embedding(int64_t num_embeddings, int64_t d)
    : num(num_embeddings), dim(d), w({num, d}) {
    w.alloc_grad();
}

void Embedding::init(Rng& rng, double stddev) {
    for (double& v : w.data) v = rng.normal(0.0, stddev);
}

Tensor Embedding::forward(const Tensor& labels) {
    if (labels.rank() != 1)
        throw ShapeMismatch("embedding: labels must be rank 1, got " +
                            shape_str(labels.shape));
    const int64_t B = labels.dim(0);
    Tensor y({B, dim});
    labels_cache_.resize(B);
    for (int64_t i = 0; i < B; ++i) {
        const int64_t l = static_cast<int64_t>(labels.data[i]);
        if (l < 0 || l >= num)
            throw ShapeMismatch("embedding: label " + std::to_string(l) +
                                " out of range [0," + std::to_string(num) + ")");
        labels_cache_[i] = l;
        std::copy(w.data.begin() + l * dim, w.data.begin() + (l + 1) * dim,
                  y.data.begin() + i * dim);
    }
    return y;
}

void Embedding::backward(const Tensor& dy, bool param_grads) {
    if (labels_cache_.empty() && dy.dim(0) != 0)
        throw NoForwardCache("embedding backward");
    if (!param_grads) return;
    const int64_t B = static_cast<int64_t>(labels_cache_.size());
    require_shape(dy, {B, dim}, "embedding backward");
    for (int64_t i = 0; i < B; ++i) {
        const int64_t l = labels_cache_[i];
        for (int64_t d = 0; d < dim; ++d)
            w.grad[l * dim + d] += dy.data[i * dim + d];
    }
}

std::vector<ParamRef> Embedding::params(const std::string& prefix) {
    return {{prefix + ".w", &w}};
}

// ------------------------------------------------------------- Multiply

Tensor Multiply::forward(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b))
        throw ShapeMismatch("multiply: " + shape_str(a.shape) + " vs " +
                            shape_str(b.shape));
    a_cache_ = a;
    b_cache_ = b;
    Tensor y(a.shape);
    for (size_t i = 0; i < a.data.size(); ++i)
        y.data[i] = a.data[i] * b.data[i];
    return y;
}

void Multiply::backward(const Tensor& dy, Tensor& da, Tensor& db) {
    if (a_cache_.data.empty()) throw NoForwardCache("multiply backward");
    require_shape(dy, a_cache_.shape, "multiply backward");
    da = Tensor(a_cache_.shape);
    db = Tensor(b_cache_.shape);
    for (size_t i = 0; i < dy.data.size(); ++i) {
        da.data[i] = dy.data[i] * b_cache_.data[i];
        db.data[i] = dy.data[i] * a_cache_.data[i];
    }
}

// ---------------------------------------------------------- BatchNorm1d

BatchNorm1d::BatchNorm1d(int64_t features, double mom)
    : n(features), momentum(mom), gamma({features}, 1.0), beta({features}),
      run_mean({features}), run_var({features}, 1.0) {
    gamma.alloc_grad();
    beta.alloc_grad();
}

Tensor BatchNorm1d::forward(const Tensor& x, bool training) {
    if (x.rank() != 2 || x.dim(1) != n)
        throw ShapeMismatch("batchnorm: input " + shape_str(x.shape) +
                            ", want [B," + std::to_string(n) + "]");
    const int64_t B = x.dim(0);
    Tensor y({B, n});
    if (!training) {
        for (int64_t i = 0; i < B; ++i)
            for (int64_t c = 0; c < n; ++c) {
                const double xhat = (x.data[i * n + c] - run_mean.data[c]) /
                                    std::sqrt(run_var.data[c] + eps);
                y.data[i * n + c] = gamma.data[c] * xhat + beta.data[c];
            }
        return y;
    }
    xhat_cache_ = Tensor({B, n});
    invstd_cache_.assign(n, 0.0);
    batch_cache_ = B;
    for (int64_t c = 0; c < n; ++c) {
        double mean = 0.0;
        for (int64_t i = 0; i < B; ++i) mean += x.data[i * n + c];
        mean /= static_cast<double>(B);
        double var = 0.0;
        for (int64_t i = 0; i < B; ++i) {
            const double d = x.data[i * n + c] - mean;
            var += d * d;
        }
        var /= static_cast<double>(B);
        const double invstd = 1.0 / std::sqrt(var + eps);
        invstd_cache_[c] = invstd;
        for (int64_t i = 0; i < B; ++i) {
            const double xhat = (x.data[i * n + c] - mean) * invstd;
            xhat_cache_.data[i * n + c] = xhat;
            y.data[i * n + c] = gamma.data[c] * xhat + beta.data[c];
        }
        run_mean.data[c] = momentum * run_mean.data[c] + (1.0 - momentum) * mean;
        run_var.data[c] = momentum * run_var.data[c] + (1.0 - momentum) * var;
    }
    return y;
}

Tensor BatchNorm1d::backward(const Tensor& dy, bool param_grads) {
    if (batch_cache_ == 0) throw NoForwardCache("batchnorm backward");
    const int64_t B = batch_cache_;
    require_shape(dy, {B, n}, "batchnorm backward");
    Tensor dx({B, n});
    for (int64_t c = 0; c < n; ++c) {
        double sum_g = 0.0, sum_gx = 0.0;
        for (int64_t i = 0; i < B; ++i) {
            sum_g += dy.data[i * n + c];
            sum_gx += dy.data[i * n + c] * xhat_cache_.data[i * n + c];
        }
        if (param_grads) {
            gamma.grad[c] += sum_gx;
            beta.grad[c] += sum_g;
        }
        const double scale = gamma.data[c] * invstd_cache_[c] /
                             static_cast<double>(B);
        for (int64_t i = 0; i < B; ++i) {
            const double g = dy.data[i * n + c];
            dx.data[i * n + c] =
                scale * (static_cast<double>(B) * g - sum_g -
                         xhat_cache_.data[i * n + c] * sum_gx);
        }
    }
    return dx;
}

std::vector<ParamRef> BatchNorm1d::params(const std::string& prefix) {
    return {{prefix + ".gamma", &gamma}, {prefix + ".beta", &beta}};
}

// --------------------------------------------------------------- Conv2d

Conv2d::Conv2d(int64_t ic, int64_t oc, int64_t kernel, Act a)
    : in_ch(ic), out_ch(oc), k(kernel), act(a), w({oc, ic * kernel * kernel}),
      b({oc}) {
    w.alloc_grad();
    b.alloc_grad();
}

void Conv2d::init(Rng& rng, double stddev) {
    for (double& v : w.data) v = rng.normal(0.0, stddev);
    std::fill(b.data.begin(), b.data.end(), 0.0);
}

Tensor Conv2d::forward(const Tensor& x) {
    if (x.rank() != 4 || x.dim(1) != in_ch || x.dim(2) < k || x.dim(3) < k)
        throw ShapeMismatch("conv: input " + shape_str(x.shape) + ", want [B," +
                            std::to_string(in_ch) + ",H>=k,W>=k]");
    const int64_t B = x.dim(0), H = x.dim(2), W = x.dim(3);
    const int64_t OH = H - k + 1, OW = W - k + 1;
    const int64_t ckk = in_ch * k * k, J = OH * OW;
    Tensor y({B, out_ch, OH, OW});
    cols_.assign(static_cast<size_t>(ckk * J), 0.0);
    for (int64_t img = 0; img < B; ++img) {
        const double* xi = x.data.data() + img * in_ch * H * W;
        // im2col: row (c,ki,kj) of cols holds the window values for every
        // output position.
        for (int64_t c = 0; c < in_ch; ++c)
            for (int64_t ki = 0; ki < k; ++ki)
                for (int64_t kj = 0; kj < k; ++kj) {
                    double* row = cols_.data() + ((c * k + ki) * k + kj) * J;
                    for (int64_t oi = 0; oi < OH; ++oi) {
                        const double* src = xi + c * H * W + (oi + ki) * W + kj;
                        double* dst = row + oi * OW;
                        for (int64_t oj = 0; oj < OW; ++oj) dst[oj] = src[oj];
                    }
                }
        double* yi = y.data.data() + img * out_ch * J;
        for (int64_t oc = 0; oc < out_ch; ++oc)
            std::fill(yi + oc * J, yi + (oc + 1) * J, b.data[oc]);
        mm_nn_acc(yi, w.data.data(), cols_.data(), out_ch, ckk, J);
    }
    apply_act_rows(y, act, B * out_ch, J);
    x_cache_ = x;
    y_cache_ = y;
    return y;
}

Tensor Conv2d::backward(const Tensor& dy, bool param_grads) {
    if (x_cache_.data.empty()) throw NoForwardCache("conv backward");
    const int64_t B = x_cache_.dim(0), H = x_cache_.dim(2),
                  W = x_cache_.dim(3);
    const int64_t OH = H - k + 1, OW = W - k + 1;
    const int64_t ckk = in_ch * k * k, J = OH * OW;
    require_shape(dy, {B, out_ch, OH, OW}, "conv backward");
    Tensor dz = act_backward(dy, y_cache_, act, B * out_ch, J);
    Tensor dx({B, in_ch, H, W});
    std::vector<double> dcols(static_cast<size_t>(ckk * J));
    for (int64_t img = 0; img < B; ++img) {
        const double* xi = x_cache_.data.data() + img * in_ch * H * W;
        for (int64_t c = 0; c < in_ch; ++c)
            for (int64_t ki = 0; ki < k; ++ki)
                for (int64_t kj = 0; kj < k; ++kj) {
                    double* row = cols_.data() + ((c * k + ki) * k + kj) * J;
                    for (int64_t oi = 0; oi < OH; ++oi) {
                        const double* src = xi + c * H * W + (oi + ki) * W + kj;
                        double* dst = row + oi * OW;
                        for (int64_t oj = 0; oj < OW; ++oj) dst[oj] = src[oj];
                    }
                }
        const double* dzi = dz.data.data() + img * out_ch * J;
        if (param_grads) {
            mm_nt_acc(w.grad.data(), dzi, cols_.data(), out_ch, ckk, J);
            for (int64_t oc = 0; oc < out_ch; ++oc) {
                double s = 0.0;
                for (int64_t j = 0; j < J; ++j) s += dzi[oc * J + j];
                b.grad[oc] += s;
            }
        }
        std::fill(dcols.begin(), dcols.end(), 0.0);
        mm_tn_acc(dcols.data(), w.data.data(), dzi, out_ch, ckk, J);
        double* dxi = dx.data.data() + img * in_ch * H * W;
        for (int64_t c = 0; c < in_ch; ++c)
            for (int64_t ki = 0; ki < k; ++ki)
                for (int64_t kj = 0; kj < k; ++kj) {
                    const double* row = dcols.data() + ((c * k + ki) * k + kj) * J;
                    for (int64_t oi = 0; oi < OH; ++oi) {
                        double* dst = dxi + c * H * W + (oi + ki) * W + kj;
                        const double* src = row + oi * OW;
                        for (int64_t oj = 0; oj < OW; ++oj) dst[oj] += src[oj];
                    }
                }
    }
    return dx;
}

std::vector<ParamRef> Conv2d::params(const std::string& prefix) {
    return {{prefix + ".w", &w}, {prefix + ".b", &b}};
}

// ------------------------------------------------------------ MaxPool2d

Tensor MaxPool2d::forward(const Tensor& x) {
    if (x.rank() != 4)
        throw ShapeMismatch("maxpool: input must be rank 4, got " +
                            shape_str(x.shape));
    const int64_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int64_t OH = H / k, OW = W / k;
    if (OH == 0 || OW == 0)
        throw ShapeMismatch("maxpool: input " + shape_str(x.shape) +
                            " smaller than window " + std::to_string(k));
    in_shape_ = x.shape;
    Tensor y({B, C, OH, OW});
    argmax_.assign(static_cast<size_t>(y.numel()), 0);
    int64_t o = 0;
    for (int64_t bc = 0; bc < B * C; ++bc) {
        const double* plane = x.data.data() + bc * H * W;
        for (int64_t oi = 0; oi < OH; ++oi)
            for (int64_t oj = 0; oj < OW; ++oj, ++o) {
                int64_t best = (oi * k) * W + (oj * k);
                double bv = plane[best];
                for (int64_t di = 0; di < k; ++di)
                    for (int64_t dj = 0; dj < k; ++dj) {
                        const int64_t idx = (oi * k + di) * W + (oj * k + dj);
                        if (plane[idx] > bv) {
                            bv = plane[idx];
                            best = idx;
                        }
                    }
                y.data[o] = bv;
                argmax_[o] = bc * H * W + best;
            }
    }
    return y;
}

Tensor MaxPool2d::backward(const Tensor& dy) {
    if (in_shape_.empty()) throw NoForwardCache("maxpool backward");
    if (dy.numel() != static_cast<int64_t>(argmax_.size()))
        throw ShapeMismatch("maxpool backward: " + shape_str(dy.shape));
    Tensor dx(in_shape_);
    for (size_t o = 0; o < argmax_.size(); ++o)
        dx.data[argmax_[o]] += dy.data[o];
    return dx;
}

// ------------------------------------------------------------ AvgPool2d

Tensor AvgPool2d::forward(const Tensor& x) {
    if (x.rank() != 4)
        throw ShapeMismatch("avgpool: input must be rank 4, got " +
                            shape_str(x.shape));
    const int64_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int64_t OH = H / k, OW = W / k;
    if (OH == 0 || OW == 0)
        throw ShapeMismatch("avgpool: input " + shape_str(x.shape) +
                            " smaller than window " + std::to_string(k));
    in_shape_ = x.shape;
    Tensor y({B, C, OH, OW});
    const double inv = 1.0 / static_cast<double>(k * k);
    int64_t o = 0;
    for (int64_t bc = 0; bc < B * C; ++bc) {
        const double* plane = x.data.data() + bc * H * W;
        for (int64_t oi = 0; oi < OH; ++oi)
            for (int64_t oj = 0; oj < OW; ++oj, ++o) {
                double s = 0.0;
                for (int64_t di = 0; di < k; ++di)
                    for (int64_t dj = 0; dj < k; ++dj)
                        s += plane[(oi * k + di) * W + (oj * k + dj)];
                y.data[o] = s * inv;
            }
    }
    return y;
}

Tensor AvgPool2d::backward(const Tensor& dy) {
    if (in_shape_.empty()) throw NoForwardCache("avgpool backward");
    const int64_t B = in_shape_[0], C = in_shape_[1], H = in_shape_[2],
                  W = in_shape_[3];
    const int64_t OH = H / k, OW = W / k;
    require_shape(dy, {B, C, OH, OW}, "avgpool backward");
    Tensor dx(in_shape_);
    const double inv = 1.0 / static_cast<double>(k * k);
    int64_t o = 0;
    for (int64_t bc = 0; bc < B * C; ++bc) {
        double* plane = dx.data.data() + bc * H * W;
        for (int64_t oi = 0; oi < OH; ++oi)
            for (int64_t oj = 0; oj < OW; ++oj, ++o) {
                const double g = dy.data[o] * inv;
                for (int64_t di = 0; di < k; ++di)
                    for (int64_t dj = 0; dj < k; ++dj)
                        plane[(oi * k + di) * W + (oj * k + dj)] += g;
            }
    }
    return dx;
}

// -------------------------------------------------------------- Dropout

Tensor Dropout::forward(const Tensor& x, bool training) {
    Tensor y(x.shape);
    if (!training || rate == 0.0) {
        y.data = x.data;
        mask_.assign(x.data.size(), 1.0);
        return y;
    }
    const double scale = 1.0 / (1.0 - rate);
    mask_.resize(x.data.size());
    for (size_t i = 0; i < x.data.size(); ++i) {
        mask_[i] = rng->uniform() >= rate ? scale : 0.0;
        y.data[i] = x.data[i] * mask_[i];
    }
    return y;
}

Tensor Dropout::backward(const Tensor& dy) {
    if (mask_.size() != dy.data.size()) throw NoForwardCache("dropout backward");
    Tensor dx(dy.shape);
    for (size_t i = 0; i < dy.data.size(); ++i)
        dx.data[i] = dy.data[i] * mask_[i];
    return dx;
}

// -------------------------------------------------------------- Flatten

Tensor Flatten::forward(const Tensor& x) {
    if (x.rank() < 2)
        throw ShapeMismatch("flatten: input must have a batch dimension");
    in_shape_ = x.shape;
    Tensor y({x.dim(0), x.numel() / x.dim(0)});
    y.data = x.data;
    return y;
}

Tensor Flatten::backward(const Tensor& dy) {
    if (in_shape_.empty()) throw NoForwardCache("flatten backward");
    Tensor dx(in_shape_);
    if (dy.numel() != dx.numel())
        throw ShapeMismatch("flatten backward: " + shape_str(dy.shape));
    dx.data = dy.data;
    return dx;
}

// --------------------------------------------------------- OuterProduct

Tensor OuterProduct::forward(const Tensor& u, const Tensor& v) {
    if (u.rank() != 2 || v.rank() != 2 || u.dim(0) != v.dim(0))
        throw ShapeMismatch("outer: " + shape_str(u.shape) + " vs " +
                            shape_str(v.shape));
    const int64_t B = u.dim(0), n = u.dim(1), m = v.dim(1);
    u_cache_ = u;
    v_cache_ = v;
    Tensor y({B, n, m});
    for (int64_t bi = 0; bi < B; ++bi) {
        const double* ub = u.data.data() + bi * n;
        const double* vb = v.data.data() + bi * m;
        double* yb = y.data.data() + bi * n * m;
        for (int64_t i = 0; i < n; ++i)
            for (int64_t j = 0; j < m; ++j) yb[i * m + j] = ub[i] * vb[j];
    }
    return y;
}

void OuterProduct::backward(const Tensor& dy, Tensor& du, Tensor& dv) {
    if (u_cache_.data.empty()) throw NoForwardCache("outer backward");
    const int64_t B = u_cache_.dim(0), n = u_cache_.dim(1),
                  m = v_cache_.dim(1);
    require_shape(dy, {B, n, m}, "outer backward");
    du = Tensor({B, n});
    dv = Tensor({B, m});
    for (int64_t bi = 0; bi < B; ++bi) {
        const double* ub = u_cache_.data.data() + bi * n;
        const double* vb = v_cache_.data.data() + bi * m;
        const double* g = dy.data.data() + bi * n * m;
        double* dub = du.data.data() + bi * n;
        double* dvb = dv.data.data() + bi * m;
        for (int64_t i = 0; i < n; ++i)
            for (int64_t j = 0; j < m; ++j) {
                dub[i] += g[i * m + j] * vb[j];
                dvb[j] += g[i * m + j] * ub[i];
            }
    }
}

}  // namespace acegan
