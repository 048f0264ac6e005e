#include "acegan/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "acegan/matmul.hpp"

namespace acegan {

int64_t ConfusionMatrix::total() const {
    int64_t t = 0;
    for (const auto& row : counts)
        for (int64_t c : row) t += c;
    return t;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) {
    for (int64_t i = 0; i < kEvalClasses; ++i)
        for (int64_t j = 0; j < kEvalClasses; ++j)
            counts[static_cast<size_t>(i)][static_cast<size_t>(j)] +=
                o.counts[static_cast<size_t>(i)][static_cast<size_t>(j)];
    return *this;
}

ConfusionMatrix confusion(const std::vector<int64_t>& truth,
                          const std::vector<int64_t>& predicted) {
    if (truth.size() != predicted.size())
        throw LengthMismatch("confusion over " + std::to_string(truth.size()) +
                             " labels vs " + std::to_string(predicted.size()) +
                             " predictions");
    ConfusionMatrix cm;
    for (size_t i = 0; i < truth.size(); ++i) {
        const int64_t t = truth[i], p = predicted[i];
        if (t < 0 || t >= kEvalClasses || p < 0 || p >= kEvalClasses)
            throw DegenerateInput("label outside the 6-class space at beat " +
                                  std::to_string(i));
        ++cm.counts[static_cast<size_t>(t)][static_cast<size_t>(p)];
    }
    return cm;
}

BinaryCounts one_vs_rest(const ConfusionMatrix& cm, int64_t positive) {
    BinaryCounts b;
    const size_t p = static_cast<size_t>(positive);
    for (size_t i = 0; i < kEvalClasses; ++i)
        for (size_t j = 0; j < kEvalClasses; ++j) {
            const int64_t c = cm.counts[i][j];
            if (i == p && j == p)
                b.tp += c;
            else if (i == p)
                b.fn += c;
            else if (j == p)
                b.fp += c;
            else
                b.tn += c;
        }
    return b;
}

namespace {

std::optional<double> ratio(int64_t num, int64_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

MetricSet metrics(const BinaryCounts& c) {
    MetricSet m;
    m.acc = ratio(c.tp + c.tn, c.tp + c.tn + c.fp + c.fn);
    m.sen = ratio(c.tp, c.tp + c.fn);
    m.spe = ratio(c.tn, c.tn + c.fp);
    m.ppr = ratio(c.tp, c.tp + c.fp);
    m.f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
    return m;
}

std::string format_metric(const std::optional<double>& m) {
    if (!m) return "-";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", *m);
    return buf;
}

void symmetric_eigen(std::vector<double> a, int64_t n,
                     std::vector<double>& values,
                     std::vector<double>& vectors) {
    vectors.assign(static_cast<size_t>(n * n), 0.0);
    for (int64_t i = 0; i < n; ++i) vectors[static_cast<size_t>(i * n + i)] = 1.0;

    double frob2 = 0.0;
    for (double v : a) frob2 += v * v;
    const double stop = 1e-28 * std::max(frob2, 1e-300);

    for (int sweep = 0; sweep < 64; ++sweep) {
        double off2 = 0.0;
        for (int64_t i = 0; i < n; ++i)
            for (int64_t j = i + 1; j < n; ++j) {
                const double v = a[static_cast<size_t>(i * n + j)];
                off2 += 2.0 * v * v;
            }
        if (off2 <= stop) break;

        for (int64_t p = 0; p < n - 1; ++p)
            for (int64_t q = p + 1; q < n; ++q) {
                const double apq = a[static_cast<size_t>(p * n + q)];
                if (apq == 0.0) continue;
                const double app = a[static_cast<size_t>(p * n + p)];
                const double aqq = a[static_cast<size_t>(q * n + q)];
                const double theta = (aqq - app) / (2.0 * apq);
                const double t =
                    (theta >= 0.0 ? 1.0 : -1.0) /
                    (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                // right-multiply columns p, q by the rotation
                for (int64_t k = 0; k < n; ++k) {
                    const double akp = a[static_cast<size_t>(k * n + p)];
                    const double akq = a[static_cast<size_t>(k * n + q)];
                    a[static_cast<size_t>(k * n + p)] = c * akp - s * akq;
                    a[static_cast<size_t>(k * n + q)] = s * akp + c * akq;
                }
                // left-multiply rows p, q
                for (int64_t k = 0; k < n; ++k) {
                    const double apk = a[static_cast<size_t>(p * n + k)];
                    const double aqk = a[static_cast<size_t>(q * n + k)];
                    a[static_cast<size_t>(p * n + k)] = c * apk - s * aqk;
                    a[static_cast<size_t>(q * n + k)] = s * apk + c * aqk;
                }
                a[static_cast<size_t>(p * n + q)] = 0.0;
                a[static_cast<size_t>(q * n + p)] = 0.0;
                for (int64_t k = 0; k < n; ++k) {
                    const double vkp = vectors[static_cast<size_t>(k * n + p)];
                    const double vkq = vectors[static_cast<size_t>(k * n + q)];
                    vectors[static_cast<size_t>(k * n + p)] = c * vkp - s * vkq;
                    vectors[static_cast<size_t>(k * n + q)] = s * vkp + c * vkq;
                }
            }
    }
    values.resize(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i)
        values[static_cast<size_t>(i)] = a[static_cast<size_t>(i * n + i)];
}

namespace {

// mean row and population covariance of a sample-per-row cloud
void mean_and_cov(const std::vector<std::vector<double>>& x, int64_t d,
                  std::vector<double>& mean, std::vector<double>& cov) {
    const int64_t b = static_cast<int64_t>(x.size());
    mean.assign(static_cast<size_t>(d), 0.0);
    for (const auto& row : x)
        for (int64_t j = 0; j < d; ++j)
            mean[static_cast<size_t>(j)] += row[static_cast<size_t>(j)];
    for (double& v : mean) v /= static_cast<double>(b);

    std::vector<double> centered(static_cast<size_t>(b * d));
    for (int64_t i = 0; i < b; ++i)
        for (int64_t j = 0; j < d; ++j)
            centered[static_cast<size_t>(i * d + j)] =
                x[static_cast<size_t>(i)][static_cast<size_t>(j)] -
                mean[static_cast<size_t>(j)];
    cov.assign(static_cast<size_t>(d * d), 0.0);
    mm_tn_acc(cov.data(), centered.data(), centered.data(), b, d, d);
    for (double& v : cov) v /= static_cast<double>(b);
}

// V diag(f(values)) V^T for f = sqrt with clipping
std::vector<double> rebuild_sqrt(const std::vector<double>& values,
                                 const std::vector<double>& vectors,
                                 int64_t n) {
    std::vector<double> scaled(static_cast<size_t>(n * n));
    for (int64_t j = 0; j < n; ++j) {
        const double lam = values[static_cast<size_t>(j)];
        const double root = lam < 1e-10 ? 0.0 : std::sqrt(lam);
        for (int64_t i = 0; i < n; ++i)
            scaled[static_cast<size_t>(i * n + j)] =
                vectors[static_cast<size_t>(i * n + j)] * root;
    }
    std::vector<double> out(static_cast<size_t>(n * n), 0.0);
    mm_nt_acc(out.data(), scaled.data(), vectors.data(), n, n, n);
    return out;
}

void check_cloud(const std::vector<std::vector<double>>& x, int64_t d,
                 const char* side) {
    if (static_cast<int64_t>(x.size()) < 2)
        throw InsufficientSamples(std::string(side) + " feature set has " +
                                  std::to_string(x.size()) +
                                  " samples; need at least 2");
    for (const auto& row : x)
        if (static_cast<int64_t>(row.size()) != d)
            throw LengthMismatch("feature rows of unequal dimension");
}

}  // namespace

double frechet_distance(const std::vector<std::vector<double>>& real_set,
                        const std::vector<std::vector<double>>& generated_set) {
    if (real_set.empty() || real_set[0].empty())
        throw InsufficientSamples("empty real feature set");
    const int64_t d = static_cast<int64_t>(real_set[0].size());
    check_cloud(real_set, d, "real");
    check_cloud(generated_set, d, "generated");

    std::vector<double> mu_r, cov_r, mu_g, cov_g;
    mean_and_cov(real_set, d, mu_r, cov_r);
    mean_and_cov(generated_set, d, mu_g, cov_g);

    double dist2 = 0.0, tr_r = 0.0, tr_g = 0.0;
    for (int64_t j = 0; j < d; ++j) {
        const double dm = mu_r[static_cast<size_t>(j)] - mu_g[static_cast<size_t>(j)];
        dist2 += dm * dm;
        tr_r += cov_r[static_cast<size_t>(j * d + j)];
        tr_g += cov_g[static_cast<size_t>(j * d + j)];
    }

    std::vector<double> values, vectors;
    symmetric_eigen(cov_r, d, values, vectors);
    const std::vector<double> root_r = rebuild_sqrt(values, vectors, d);

    // sandwich = root_r * cov_g * root_r, symmetrized against roundoff
    std::vector<double> tmp(static_cast<size_t>(d * d), 0.0);
    mm_nn_acc(tmp.data(), root_r.data(), cov_g.data(), d, d, d);
    std::vector<double> sandwich(static_cast<size_t>(d * d), 0.0);
    mm_nn_acc(sandwich.data(), tmp.data(), root_r.data(), d, d, d);
    for (int64_t i = 0; i < d; ++i)
        for (int64_t j = i + 1; j < d; ++j) {
            const double avg = 0.5 * (sandwich[static_cast<size_t>(i * d + j)] +
                                      sandwich[static_cast<size_t>(j * d + i)]);
            sandwich[static_cast<size_t>(i * d + j)] = avg;
            sandwich[static_cast<size_t>(j * d + i)] = avg;
        }

    symmetric_eigen(sandwich, d, values, vectors);
    double tr_root = 0.0;
    for (double lam : values)
        if (lam >= 1e-10) tr_root += std::sqrt(lam);

    return std::max(dist2 + tr_r + tr_g - 2.0 * tr_root, 0.0);
}

PcaProjection pca2(const std::vector<std::vector<double>>& features) {
    if (static_cast<int64_t>(features.size()) < 3)
        throw InsufficientSamples("PCA needs at least 3 samples, got " +
                                  std::to_string(features.size()));
    const int64_t d = static_cast<int64_t>(features[0].size());
    if (d < 2) throw DegenerateInput("PCA projection needs at least 2 features");
    for (const auto& row : features)
        if (static_cast<int64_t>(row.size()) != d)
            throw LengthMismatch("feature rows of unequal dimension");

    std::vector<double> mean, cov;
    mean_and_cov(features, d, mean, cov);

    std::vector<double> values, vectors;
    symmetric_eigen(cov, d, values, vectors);

    std::vector<int64_t> order(static_cast<size_t>(d));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
        return values[static_cast<size_t>(a)] > values[static_cast<size_t>(b)];
    });

    PcaProjection p;
    p.explained = {values[static_cast<size_t>(order[0])],
                   values[static_cast<size_t>(order[1])]};
    for (int64_t j = 0; j < d; ++j)
        p.total_variance += cov[static_cast<size_t>(j * d + j)];

    p.points.resize(features.size());
    for (size_t i = 0; i < features.size(); ++i)
        for (int comp = 0; comp < 2; ++comp) {
            const int64_t col = order[static_cast<size_t>(comp)];
            double acc = 0.0;
            for (int64_t j = 0; j < d; ++j)
                acc += (features[i][static_cast<size_t>(j)] -
                        mean[static_cast<size_t>(j)]) *
                       vectors[static_cast<size_t>(j * d + col)];
            p.points[i][static_cast<size_t>(comp)] = acc;
        }
    return p;
}

std::string pca_csv(const PcaProjection& p, const std::vector<int64_t>& labels) {
    if (labels.size() != p.points.size())
        throw LengthMismatch("PCA labels vs projected points");
    std::string out = "pc1,pc2,label\n";
    char buf[96];
    for (size_t i = 0; i < p.points.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%lld\n", p.points[i][0],
                      p.points[i][1], static_cast<long long>(labels[i]));
        out += buf;
    }
    return out;
}

namespace {

RecordReport reduce_record(std::string id, ConfusionMatrix cm) {
    RecordReport r;
    r.record_id = std::move(id);
    r.cm = cm;
    int64_t correct = 0;
    for (size_t i = 0; i < kEvalClasses; ++i) correct += cm.counts[i][i];
    r.accuracy = ratio(correct, cm.total());
    r.n = metrics(one_vs_rest(cm, 0));
    r.s = metrics(one_vs_rest(cm, 1));
    r.v = metrics(one_vs_rest(cm, 2));
    return r;
}

void append_row(std::string& out, const RecordReport& r, bool csv) {
    const std::string cells[7] = {
        format_metric(r.n.sen), format_metric(r.n.ppr), format_metric(r.s.sen),
        format_metric(r.s.ppr), format_metric(r.v.sen), format_metric(r.v.ppr),
        format_metric(r.accuracy)};
    if (csv) {
        out += r.record_id;
        for (const auto& c : cells) out += "," + c;
        out += "\n";
        return;
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "%-8s %9s %9s %9s %9s %9s %9s %9s\n", r.record_id.c_str(),
                  cells[0].c_str(), cells[1].c_str(), cells[2].c_str(),
                  cells[3].c_str(), cells[4].c_str(), cells[5].c_str(),
                  cells[6].c_str());
    out += buf;
}

}  // namespace

EvalReport evaluate_records(const std::vector<RecordOutcome>& outcomes) {
    EvalReport rep;
    ConfusionMatrix pooled;
    for (const RecordOutcome& o : outcomes) {
        const ConfusionMatrix cm = confusion(o.truth, o.predicted);
        pooled += cm;
        rep.records.push_back(reduce_record(o.record_id, cm));
    }
    rep.pooled = reduce_record("total", pooled);
    return rep;
}

std::string report_table(const EvalReport& r) {
    std::string out;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-8s %9s %9s %9s %9s %9s %9s %9s\n",
                  "record", "N_sen", "N_ppr", "S_sen", "S_ppr", "V_sen",
                  "V_ppr", "acc");
    out += buf;
    for (const RecordReport& rec : r.records) append_row(out, rec, false);
    append_row(out, r.pooled, false);
    return out;
}

std::string report_csv(const EvalReport& r) {
    std::string out = "record,n_sen,n_ppr,s_sen,s_ppr,v_sen,v_ppr,acc\n";
    for (const RecordReport& rec : r.records) append_row(out, rec, true);
    append_row(out, r.pooled, true);
    return out;
}

}  // namespace acegan
