#include "acegan/gan.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "acegan/evalkit.hpp"

namespace acegan {

namespace {

constexpr double kInitStddev = 0.01;
constexpr int64_t kTrunkWidth = 256;

Tensor label_tensor(const std::vector<int64_t>& labels, int64_t limit) {
    Tensor t({static_cast<int64_t>(labels.size())});
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= limit)
            throw DegenerateInput("conditioning label " +
                                  std::to_string(labels[i]) +
                                  " outside 0.." + std::to_string(limit - 1));
        t.data[i] = static_cast<double>(labels[i]);
    }
    return t;
}

void add_into(Tensor& a, const Tensor& b) {
    require_shape(b, a.shape, "gradient sum");
    for (size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

Tensor with_shape(Tensor t, std::vector<int64_t> shape) {
    Tensor out = std::move(t);
    out.shape = std::move(shape);
    if (out.numel() != static_cast<int64_t>(out.data.size()))
        throw ShapeMismatch("reshape changes element count");
    return out;
}

}  // namespace

Generator::Generator(Rng& rng)
    : embed(kCondClasses, kNoiseDim),
      trunk(kNoiseDim, kTrunkWidth, Act::relu),
      bn(kTrunkWidth, 0.8),
      branch_u(kTrunkWidth, kTrunkWidth, Act::relu),
      branch_v(kTrunkWidth, kTrunkWidth, Act::relu),
      head_u(kTrunkWidth, kCmSide, Act::linear),
      head_v(kTrunkWidth, kCmSide, Act::linear) {
    embed.init(rng, kInitStddev);
    trunk.init(rng, kInitStddev);
    branch_u.init(rng, kInitStddev);
    branch_v.init(rng, kInitStddev);
    head_u.init(rng, kInitStddev);
    head_v.init(rng, kInitStddev);
}

Tensor Generator::forward(const Tensor& z, const std::vector<int64_t>& labels,
                          bool training) {
    const int64_t b = static_cast<int64_t>(labels.size());
    require_shape(z, {b, kNoiseDim}, "generator noise");
    const Tensor e = embed.forward(label_tensor(labels, kCondClasses));
    const Tensor m = merge.forward(e, z);
    const Tensor t = trunk.forward(m);
    const Tensor n = bn.forward(t, training);
    const Tensor bu = branch_u.forward(n);
    const Tensor bv = branch_v.forward(n);
    factor_u = head_u.forward(bu);
    factor_v = head_v.forward(bv);
    return outer.forward(factor_u, factor_v);
}

void Generator::backward(const Tensor& dy, bool param_grads) {
    Tensor du, dv;
    outer.backward(dy, du, dv);
    const Tensor dbu = head_u.backward(du, param_grads);
    const Tensor dbv = head_v.backward(dv, param_grads);
    Tensor dn = branch_u.backward(dbu, param_grads);
    add_into(dn, branch_v.backward(dbv, param_grads));
    const Tensor dt = bn.backward(dn, param_grads);
    const Tensor dm = trunk.backward(dt, param_grads);
    Tensor de, dz;
    merge.backward(dm, de, dz);
    embed.backward(de, param_grads);
}

std::vector<ParamRef> Generator::params() {
    std::vector<ParamRef> out;
    for (auto& p : embed.params("g.embed")) out.push_back(p);
    for (auto& p : trunk.params("g.trunk")) out.push_back(p);
    for (auto& p : bn.params("g.bn")) out.push_back(p);
    for (auto& p : branch_u.params("g.branch_u")) out.push_back(p);
    for (auto& p : branch_v.params("g.branch_v")) out.push_back(p);
    for (auto& p : head_u.params("g.head_u")) out.push_back(p);
    for (auto& p : head_v.params("g.head_v")) out.push_back(p);
    return out;
}

Discriminator::Discriminator(Rng& rng, int64_t classes)
    : c1(1, 6, 8, Act::relu),
      p1(2),
      c2(6, 16, 10, Act::relu),
      p2(3),
      c3(16, 120, 5, Act::relu),
      drop1(0.5, drop_rng_),
      drop2(0.5, drop_rng_),
      fc(120 * 4 * 4, kFeatureDim, Act::relu),
      class_head(kFeatureDim, classes, Act::softmax),
      validity_head(kFeatureDim, 1, Act::linear),
      drop_rng_(rng.fork(0xd0)) {
    c1.init(rng, kInitStddev);
    c2.init(rng, kInitStddev);
    c3.init(rng, kInitStddev);
    fc.init(rng, kInitStddev);
    class_head.init(rng, kInitStddev);
    validity_head.init(rng, kInitStddev);
}

Discriminator::Output Discriminator::forward(const Tensor& x, bool training) {
    const Tensor a1 = c1.forward(x);
    const Tensor q1 = p1.forward(a1);
    const Tensor a2 = c2.forward(q1);
    const Tensor q2 = p2.forward(a2);
    const Tensor a3 = c3.forward(q2);
    const Tensor f = flat.forward(a3);
    const Tensor f1 = drop1.forward(f, training);
    const Tensor h = fc.forward(f1);
    const Tensor h1 = drop2.forward(h, training);
    Output out;
    out.probs = class_head.forward(h1);
    out.validity = validity_head.forward(h1);
    out.features = h;
    return out;
}

void Discriminator::backward(const Tensor& dprobs, const Tensor& dvalidity,
                             bool param_grads, Tensor* dx) {
    Tensor dh1 = class_head.backward(dprobs, param_grads);
    add_into(dh1, validity_head.backward(dvalidity, param_grads));
    const Tensor dh = drop2.backward(dh1);
    const Tensor df1 = fc.backward(dh, param_grads);
    const Tensor df = drop1.backward(df1);
    const Tensor da3 = flat.backward(df);
    const Tensor dq2 = c3.backward(da3, param_grads);
    const Tensor da2 = p2.backward(dq2);
    const Tensor dq1 = c2.backward(da2, param_grads);
    const Tensor da1 = p1.backward(dq1);
    Tensor dxl = c1.backward(da1, param_grads);
    if (dx) *dx = std::move(dxl);
}

std::vector<ParamRef> Discriminator::params() {
    std::vector<ParamRef> out;
    for (auto& p : c1.params("d.c1")) out.push_back(p);
    for (auto& p : c2.params("d.c2")) out.push_back(p);
    for (auto& p : c3.params("d.c3")) out.push_back(p);
    for (auto& p : fc.params("d.fc")) out.push_back(p);
    for (auto& p : class_head.params("d.class_head")) out.push_back(p);
    for (auto& p : validity_head.params("d.validity_head")) out.push_back(p);
    return out;
}

Tensor materialize_batch(const std::vector<CouplingFactors>& pool,
                         const std::vector<int64_t>& idx) {
    const int64_t b = static_cast<int64_t>(idx.size());
    Tensor x({b, 1, kCmSide, kCmSide});
    for (int64_t i = 0; i < b; ++i) {
        const CouplingFactors& cf = pool[static_cast<size_t>(idx[i])];
        if (static_cast<int64_t>(cf.u.size()) != kCmSide ||
            static_cast<int64_t>(cf.v.size()) != kCmSide)
            throw ShapeMismatch("coupling factors are not length " +
                                std::to_string(kCmSide));
        double* row = x.data.data() + i * kCmSide * kCmSide;
        for (int64_t r = 0; r < kCmSide; ++r)
            for (int64_t c = 0; c < kCmSide; ++c)
                row[r * kCmSide + c] = cf.u[static_cast<size_t>(r)] *
                                       cf.v[static_cast<size_t>(c)];
    }
    return x;
}

double d_real_loss(Discriminator& d, const Tensor& x,
                   const std::vector<int64_t>& labels, bool training,
                   bool with_grads) {
    const int64_t b = x.dim(0);
    Discriminator::Output out = d.forward(x, training);
    const Tensor ones({b, 1}, 1.0);
    Tensor dprobs, dval;
    const double ce = cross_entropy_loss(out.probs, labels,
                                         with_grads ? &dprobs : nullptr);
    const double mse =
        mse_loss(out.validity, ones, with_grads ? &dval : nullptr);
    if (with_grads) d.backward(dprobs, dval);
    return ce + mse;
}

double d_fake_loss(Discriminator& d, const Tensor& x, bool training,
                   bool with_grads) {
    const int64_t b = x.dim(0);
    Discriminator::Output out = d.forward(x, training);
    const Tensor zeros({b, 1}, 0.0);
    const std::vector<int64_t> fake_labels(static_cast<size_t>(b), kFakeClass);
    Tensor dprobs, dval;
    const double ce = cross_entropy_loss(out.probs, fake_labels,
                                         with_grads ? &dprobs : nullptr);
    const double mse =
        mse_loss(out.validity, zeros, with_grads ? &dval : nullptr);
    if (with_grads) d.backward(dprobs, dval);
    return ce + mse;
}

double d_loss(Discriminator& d, const Tensor& real,
              const std::vector<int64_t>& real_labels, const Tensor& fake,
              bool training, bool with_grads) {
    // each half backpropagates right after its own forward so the caches
    // line up; parameter gradients accumulate across the two halves
    const double lr = d_real_loss(d, real, real_labels, training, with_grads);
    const double lf = d_fake_loss(d, fake, training, with_grads);
    return lr + lf;
}

double g_loss(Generator& g, Discriminator& d, const Tensor& z,
              const std::vector<int64_t>& labels, bool training,
              bool with_grads) {
    const int64_t b = z.dim(0);
    const Tensor y = g.forward(z, labels, training);
    const Tensor x = with_shape(y, {b, 1, kCmSide, kCmSide});
    Discriminator::Output out = d.forward(x, training);
    const Tensor ones({b, 1}, 1.0);
    Tensor dprobs, dval;
    const double ce = cross_entropy_loss(out.probs, labels,
                                         with_grads ? &dprobs : nullptr);
    const double mse =
        mse_loss(out.validity, ones, with_grads ? &dval : nullptr);
    if (with_grads) {
        Tensor dx;
        d.backward(dprobs, dval, /*param_grads=*/false, &dx);
        g.backward(with_shape(std::move(dx), {b, kCmSide, kCmSide}));
    }
    return ce + mse;
}

namespace {

// feature rows of D (inference mode) over materialized inputs, chunked
std::vector<std::vector<double>> feature_rows(
    Discriminator& d, const std::vector<CouplingFactors>& pool,
    const std::vector<int64_t>& idx, std::vector<int64_t>* predictions) {
    std::vector<std::vector<double>> rows;
    rows.reserve(idx.size());
    const int64_t chunk = 64;
    for (int64_t at = 0; at < static_cast<int64_t>(idx.size()); at += chunk) {
        const int64_t n =
            std::min(chunk, static_cast<int64_t>(idx.size()) - at);
        const std::vector<int64_t> part(idx.begin() + at,
                                        idx.begin() + at + n);
        const Tensor x = materialize_batch(pool, part);
        Discriminator::Output out = d.forward(x, false);
        for (int64_t i = 0; i < n; ++i) {
            rows.emplace_back(
                out.features.data.begin() + i * kFeatureDim,
                out.features.data.begin() + (i + 1) * kFeatureDim);
            if (predictions)
                predictions->push_back(argmax_row(out.probs, i));
        }
    }
    return rows;
}

}  // namespace

std::string GanTelemetry::csv() const {
    std::string out = "iteration,g_loss,d_loss,fd,acc_N,acc_S,acc_V,acc_F\n";
    char buf[256];
    for (const TelemetryRow& r : rows) {
        std::snprintf(buf, sizeof(buf),
                      "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      static_cast<long long>(r.iteration), r.g_loss, r.d_loss,
                      r.fd, r.acc[0], r.acc[1], r.acc[2], r.acc[3]);
        out += buf;
    }
    return out;
}

GanTelemetry train_gan(Generator& g, Discriminator& d,
                       const std::vector<CouplingFactors>& pool,
                       const GanTrainConfig& cfg) {
    if (cfg.batch <= 0 || cfg.batch % kCondClasses != 0)
        throw ConfigError("gan batch must be a positive multiple of 4, got " +
                          std::to_string(cfg.batch));

    std::vector<std::vector<int64_t>> by_class(kCondClasses);
    for (size_t i = 0; i < pool.size(); ++i) {
        const int64_t c = static_cast<int64_t>(pool[i].label);
        if (c < 0 || c >= kCondClasses)
            throw DegenerateInput("training pool carries class " +
                                  std::to_string(c));
        by_class[static_cast<size_t>(c)].push_back(static_cast<int64_t>(i));
    }
    const char* names = "NSVF";
    for (int64_t c = 0; c < kCondClasses; ++c)
        if (by_class[static_cast<size_t>(c)].empty())
            throw MissingClass(std::string("no ") + names[c] +
                               " beats in the training pool");

    Rng master(cfg.seed);
    Rng batch_rng = master.fork(1);
    Rng noise_rng = master.fork(2);
    Rng telem_rng = master.fork(3);

    Adam opt_d(d.params(), {});
    Adam opt_g(g.params(), {});

    const int64_t per_class = cfg.batch / kCondClasses;

    // fixed real reference for the distance and accuracy telemetry
    std::vector<int64_t> ref_idx;
    std::vector<int64_t> ref_labels;
    for (int64_t c = 0; c < kCondClasses; ++c) {
        const auto& cls = by_class[static_cast<size_t>(c)];
        for (int64_t k = 0; k < cfg.fd_samples_per_class; ++k) {
            ref_idx.push_back(
                cls[static_cast<size_t>(telem_rng.below(cls.size()))]);
            ref_labels.push_back(c);
        }
    }

    const auto sample_balanced = [&](std::vector<int64_t>& idx,
                                     std::vector<int64_t>& labels) {
        idx.clear();
        labels.clear();
        for (int64_t c = 0; c < kCondClasses; ++c) {
            const auto& cls = by_class[static_cast<size_t>(c)];
            for (int64_t k = 0; k < per_class; ++k) {
                idx.push_back(
                    cls[static_cast<size_t>(batch_rng.below(cls.size()))]);
                labels.push_back(c);
            }
        }
    };

    GanTelemetry telemetry;
    std::vector<int64_t> idx, labels, cond;
    for (int64_t it = 1; it <= cfg.iterations; ++it) {
        // discriminator, real half
        sample_balanced(idx, labels);
        const Tensor real = materialize_batch(pool, idx);
        opt_d.zero_grad();
        const double loss_real = d_real_loss(d, real, labels, true, true);
        opt_d.step();

        // discriminator, generated half; samples drawn without tracking
        Tensor z({cfg.batch, kNoiseDim});
        for (double& v : z.data) v = noise_rng.normal();
        cond.clear();
        for (int64_t c = 0; c < kCondClasses; ++c)
            cond.insert(cond.end(), static_cast<size_t>(per_class), c);
        const Tensor fake = with_shape(g.forward(z, cond, false),
                                       {cfg.batch, 1, kCmSide, kCmSide});
        opt_d.zero_grad();
        const double loss_fake = d_fake_loss(d, fake, true, true);
        opt_d.step();

        // generator twice on the same noise and labels
        double loss_g = 0.0;
        for (int step = 0; step < 2; ++step) {
            opt_g.zero_grad();
            loss_g = g_loss(g, d, z, cond, true, true);
            opt_g.step();
        }

        if (cfg.telemetry_every > 0 && it % cfg.telemetry_every == 0) {
            TelemetryRow row;
            row.iteration = it;
            row.g_loss = loss_g;
            row.d_loss = loss_real + loss_fake;

            std::vector<int64_t> preds;
            const auto real_rows = feature_rows(d, pool, ref_idx, &preds);
            int64_t hit[4] = {0, 0, 0, 0};
            for (size_t i = 0; i < preds.size(); ++i)
                if (preds[i] == ref_labels[i])
                    ++hit[static_cast<size_t>(ref_labels[i])];
            for (int64_t c = 0; c < 4; ++c)
                row.acc[c] = cfg.fd_samples_per_class == 0
                                 ? 0.0
                                 : static_cast<double>(hit[c]) /
                                       static_cast<double>(
                                           cfg.fd_samples_per_class);

            std::vector<CouplingFactors> fakes;
            Rng gen_rng = telem_rng.fork(static_cast<uint64_t>(it));
            for (int64_t c = 0; c < kCondClasses; ++c) {
                auto part = generate(g, c, cfg.fd_samples_per_class, gen_rng);
                fakes.insert(fakes.end(),
                             std::make_move_iterator(part.begin()),
                             std::make_move_iterator(part.end()));
            }
            std::vector<int64_t> fake_idx(fakes.size());
            for (size_t i = 0; i < fakes.size(); ++i)
                fake_idx[i] = static_cast<int64_t>(i);
            const auto fake_rows = feature_rows(d, fakes, fake_idx, nullptr);
            row.fd = frechet_distance(real_rows, fake_rows);

            telemetry.rows.push_back(row);
        }
    }
    return telemetry;
}

std::vector<CouplingFactors> generate(Generator& g, int64_t cls, int64_t count,
                                      Rng& rng) {
    if (cls < 0 || cls >= kCondClasses)
        throw DegenerateInput("generate conditioned on class " +
                              std::to_string(cls));
    std::vector<CouplingFactors> out;
    out.reserve(static_cast<size_t>(count));
    const int64_t chunk = 256;
    for (int64_t at = 0; at < count; at += chunk) {
        const int64_t n = std::min(chunk, count - at);
        Tensor z({n, kNoiseDim});
        for (double& v : z.data) v = rng.normal();
        const std::vector<int64_t> cond(static_cast<size_t>(n), cls);
        g.forward(z, cond, false);
        for (int64_t i = 0; i < n; ++i) {
            CouplingFactors cf;
            cf.u.assign(g.factor_u.data.begin() + i * kCmSide,
                        g.factor_u.data.begin() + (i + 1) * kCmSide);
            cf.v.assign(g.factor_v.data.begin() + i * kCmSide,
                        g.factor_v.data.begin() + (i + 1) * kCmSide);
            cf.label = static_cast<AamiClass>(cls);
            out.push_back(std::move(cf));
        }
    }
    return out;
}

FinetuneStats finetune(Discriminator& d,
                       const std::vector<CouplingFactors>& set,
                       const FinetuneConfig& cfg) {
    if (set.empty()) throw EmptyDataset("fine-tune set is empty");
    const int64_t n = static_cast<int64_t>(set.size());

    Rng rng(cfg.seed);
    Adam opt(d.params(), {});

    std::vector<int64_t> order(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;

    FinetuneStats stats;
    for (int64_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        rng.shuffle(order);
        for (int64_t at = 0; at < n; at += cfg.batch) {
            const int64_t b = std::min(cfg.batch, n - at);
            const std::vector<int64_t> idx(order.begin() + at,
                                           order.begin() + at + b);
            const Tensor x = materialize_batch(set, idx);
            std::vector<int64_t> labels(static_cast<size_t>(b));
            for (int64_t i = 0; i < b; ++i)
                labels[static_cast<size_t>(i)] = static_cast<int64_t>(
                    set[static_cast<size_t>(idx[static_cast<size_t>(i)])]
                        .label);
            opt.zero_grad();
            d_real_loss(d, x, labels, true, true);
            opt.step();
        }

        // epoch accuracy over the fine-tune set itself
        std::vector<int64_t> all(static_cast<size_t>(n));
        for (int64_t i = 0; i < n; ++i) all[static_cast<size_t>(i)] = i;
        std::vector<int64_t> preds;
        feature_rows(d, set, all, &preds);
        int64_t hits = 0;
        for (int64_t i = 0; i < n; ++i)
            if (preds[static_cast<size_t>(i)] ==
                static_cast<int64_t>(set[static_cast<size_t>(i)].label))
                ++hits;
        const double acc = static_cast<double>(hits) / static_cast<double>(n);
        stats.epoch_acc.push_back(acc);
        stats.final_acc = acc;
        stats.epochs = epoch + 1;

        if (acc >= cfg.target_acc) break;
        if (static_cast<int64_t>(stats.epoch_acc.size()) >= cfg.window) {
            double lo = 1.0, hi = 0.0;
            for (size_t i = stats.epoch_acc.size() -
                            static_cast<size_t>(cfg.window);
                 i < stats.epoch_acc.size(); ++i) {
                lo = std::min(lo, stats.epoch_acc[i]);
                hi = std::max(hi, stats.epoch_acc[i]);
            }
            if (hi - lo < cfg.plateau) break;
        }
    }
    return stats;
}

std::vector<Classification> classify(Discriminator& d, const Tensor& x) {
    const int64_t b = x.dim(0);
    const int64_t per = x.numel() / std::max<int64_t>(b, 1);
    std::vector<Classification> result(static_cast<size_t>(b));
    const int64_t chunk = 64;
    for (int64_t at = 0; at < b; at += chunk) {
        const int64_t n = std::min(chunk, b - at);
        Tensor part({n, 1, kCmSide, kCmSide});
        std::copy(x.data.begin() + at * per, x.data.begin() + (at + n) * per,
                  part.data.begin());
        Discriminator::Output out = d.forward(part, false);
        for (int64_t i = 0; i < n; ++i) {
            result[static_cast<size_t>(at + i)].label = argmax_row(out.probs, i);
            result[static_cast<size_t>(at + i)].features.assign(
                out.features.data.begin() + i * kFeatureDim,
                out.features.data.begin() + (i + 1) * kFeatureDim);
        }
    }
    return result;
}

}  // namespace acegan
