#include <cmath>
#include <cstdint>
#include <vector>

#include "acegan/evalkit.hpp"
#include "acegan/rng.hpp"
#include "doctest.h"

using namespace acegan;

namespace {

// brute-force tally used as the counting oracle
ConfusionMatrix tally(const std::vector<int64_t>& t,
                      const std::vector<int64_t>& p) {
    ConfusionMatrix cm;
    for (size_t i = 0; i < t.size(); ++i)
        ++cm.counts[static_cast<size_t>(t[i])][static_cast<size_t>(p[i])];
    return cm;
}

std::vector<std::vector<double>> random_cloud(Rng& rng, int64_t n, int64_t d,
                                              double spread) {
    std::vector<std::vector<double>> x(static_cast<size_t>(n));
    for (auto& row : x) {
        row.resize(static_cast<size_t>(d));
        for (double& v : row) v = spread * rng.normal();
    }
    return x;
}

// power iteration + deflation eigensolver, independent of the module's
// Jacobi path; good enough for well-separated spectra
void power_eigen(std::vector<double> a, int64_t n, int64_t k,
                 std::vector<double>& values,
                 std::vector<std::vector<double>>& vecs) {
    values.clear();
    vecs.clear();
    Rng rng(99);
    for (int64_t comp = 0; comp < k; ++comp) {
        std::vector<double> v(static_cast<size_t>(n));
        for (double& x : v) x = rng.normal();
        double lam = 0.0;
        for (int iter = 0; iter < 3000; ++iter) {
            std::vector<double> w(static_cast<size_t>(n), 0.0);
            for (int64_t i = 0; i < n; ++i)
                for (int64_t j = 0; j < n; ++j)
                    w[static_cast<size_t>(i)] +=
                        a[static_cast<size_t>(i * n + j)] *
                        v[static_cast<size_t>(j)];
            double norm = 0.0;
            for (double x : w) norm += x * x;
            norm = std::sqrt(norm);
            REQUIRE(norm > 0.0);
            for (int64_t i = 0; i < n; ++i)
                v[static_cast<size_t>(i)] = w[static_cast<size_t>(i)] / norm;
            lam = norm;
        }
        values.push_back(lam);
        vecs.push_back(v);
        for (int64_t i = 0; i < n; ++i)
            for (int64_t j = 0; j < n; ++j)
                a[static_cast<size_t>(i * n + j)] -=
                    lam * v[static_cast<size_t>(i)] * v[static_cast<size_t>(j)];
    }
}

}  // namespace

TEST_CASE("confusion matrix basics") {
    CHECK(confusion({}, {}).total() == 0);

    const std::vector<int64_t> everything = {0, 1, 2, 3, 4, 5};
    const ConfusionMatrix diag = confusion(everything, everything);
    for (size_t i = 0; i < kEvalClasses; ++i)
        for (size_t j = 0; j < kEvalClasses; ++j)
            CHECK(diag.counts[i][j] == (i == j ? 1 : 0));

    const std::vector<int64_t> t = {0, 0, 1, 1, 2, 2, 3, 4, 0, 1};
    const std::vector<int64_t> p = {0, 5, 1, 0, 2, 2, 2, 4, 0, 1};
    const ConfusionMatrix cm = confusion(t, p);
    const ConfusionMatrix oracle = tally(t, p);
    for (size_t i = 0; i < kEvalClasses; ++i)
        for (size_t j = 0; j < kEvalClasses; ++j)
            CHECK(cm.counts[i][j] == oracle.counts[i][j]);
    CHECK(cm.total() == 10);

    CHECK_THROWS_AS(confusion({0, 1}, {0}), LengthMismatch);
    CHECK_THROWS_AS(confusion({6}, {0}), DegenerateInput);
}

TEST_CASE("row sums survive relabeling of predictions") {
    Rng rng(31);
    std::vector<int64_t> t(200), p1(200), p2(200);
    for (size_t i = 0; i < t.size(); ++i) {
        t[i] = static_cast<int64_t>(rng.below(5));
        p1[i] = static_cast<int64_t>(rng.below(6));
        p2[i] = static_cast<int64_t>(rng.below(6));
    }
    const ConfusionMatrix a = confusion(t, p1);
    const ConfusionMatrix b = confusion(t, p2);
    for (size_t i = 0; i < kEvalClasses; ++i) {
        int64_t ra = 0, rb = 0;
        for (size_t j = 0; j < kEvalClasses; ++j) {
            ra += a.counts[i][j];
            rb += b.counts[i][j];
        }
        CHECK(ra == rb);
    }
}

TEST_CASE("metrics reproduce the worked example to six decimals") {
    const MetricSet m = metrics({5, 90, 3, 2});
    REQUIRE(m.acc);
    REQUIRE(m.sen);
    REQUIRE(m.spe);
    REQUIRE(m.ppr);
    REQUIRE(m.f1);
    CHECK(*m.acc == doctest::Approx(0.95).epsilon(1e-9));
    CHECK(format_metric(m.acc) == "0.950000");
    CHECK(format_metric(m.sen) == "0.714286");
    CHECK(format_metric(m.spe) == "0.967742");
    CHECK(format_metric(m.ppr) == "0.625000");
    CHECK(format_metric(m.f1) == "0.666667");

    const MetricSet perfect = metrics({10, 40, 0, 0});
    CHECK(*perfect.acc == 1.0);
    CHECK(*perfect.sen == 1.0);
    CHECK(*perfect.spe == 1.0);
    CHECK(*perfect.ppr == 1.0);
    CHECK(*perfect.f1 == 1.0);
}

TEST_CASE("zero-denominator metrics render as dashes") {
    // no positives in ground truth, none predicted
    const MetricSet m = metrics({0, 50, 0, 0});
    CHECK(!m.sen);
    CHECK(!m.ppr);
    CHECK(!m.f1);
    CHECK(format_metric(m.sen) == "-");
    CHECK(format_metric(m.ppr) == "-");
    CHECK(format_metric(m.f1) == "-");
    REQUIRE(m.acc);
    REQUIRE(m.spe);
    CHECK(*m.acc == 1.0);
    CHECK(*m.spe == 1.0);
}

TEST_CASE("metrics identities on random counts") {
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const BinaryCounts c = {static_cast<int64_t>(rng.below(20)),
                                static_cast<int64_t>(rng.below(20)),
                                static_cast<int64_t>(rng.below(20)),
                                static_cast<int64_t>(rng.below(20))};
        const int64_t total = c.tp + c.tn + c.fp + c.fn;
        if (total == 0) continue;
        const MetricSet m = metrics(c);
        REQUIRE(m.acc);
        CHECK(*m.acc ==
              doctest::Approx(static_cast<double>(c.tp + c.tn) /
                              static_cast<double>(total))
                  .epsilon(1e-12));
        if (m.sen && m.ppr && (*m.sen + *m.ppr) > 0.0) {
            REQUIRE(m.f1);
            CHECK(*m.f1 == doctest::Approx(2.0 * *m.sen * *m.ppr /
                                           (*m.sen + *m.ppr))
                               .epsilon(1e-9));
        }
        for (const auto& v : {m.acc, m.sen, m.spe, m.ppr, m.f1})
            if (v) {
                CHECK(*v >= 0.0);
                CHECK(*v <= 1.0);
            }
    }
}

TEST_CASE("one-vs-rest reduction partitions the confusion matrix") {
    Rng rng(13);
    std::vector<int64_t> t(300), p(300);
    for (size_t i = 0; i < t.size(); ++i) {
        t[i] = static_cast<int64_t>(rng.below(5));
        p[i] = static_cast<int64_t>(rng.below(6));
    }
    const ConfusionMatrix cm = confusion(t, p);
    for (int64_t cls = 0; cls < kEvalClasses; ++cls) {
        const BinaryCounts b = one_vs_rest(cm, cls);
        CHECK(b.tp + b.tn + b.fp + b.fn == cm.total());
        CHECK(b.tp ==
              cm.counts[static_cast<size_t>(cls)][static_cast<size_t>(cls)]);
    }
    // "generated" verdicts on real beats count against the positive class
    const ConfusionMatrix gen = confusion({1, 1}, {1, 5});
    const BinaryCounts b = one_vs_rest(gen, 1);
    CHECK(b.tp == 1);
    CHECK(b.fn == 1);
    CHECK(b.fp == 0);
}

TEST_CASE("symmetric eigendecomposition") {
    std::vector<double> values, vectors;
    symmetric_eigen({2, 1, 1, 2}, 2, values, vectors);
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sorted[1] == doctest::Approx(3.0).epsilon(1e-12));

    Rng rng(5);
    const int64_t n = 8;
    std::vector<double> a(n * n);
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = i; j < n; ++j) {
            const double v = rng.normal();
            a[static_cast<size_t>(i * n + j)] = v;
            a[static_cast<size_t>(j * n + i)] = v;
        }
    symmetric_eigen(a, n, values, vectors);

    // V diag V^T reconstructs, and V is orthonormal
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < n; ++j) {
            double rec = 0.0, dot = 0.0;
            for (int64_t k = 0; k < n; ++k) {
                rec += vectors[static_cast<size_t>(i * n + k)] *
                       values[static_cast<size_t>(k)] *
                       vectors[static_cast<size_t>(j * n + k)];
                dot += vectors[static_cast<size_t>(k * n + i)] *
                       vectors[static_cast<size_t>(k * n + j)];
            }
            CHECK(rec == doctest::Approx(a[static_cast<size_t>(i * n + j)])
                             .epsilon(1e-9));
            CHECK(dot == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-9));
        }
}

TEST_CASE("frechet distance closed forms") {
    Rng rng(11);
    const auto cloud = random_cloud(rng, 20, 5, 2.0);
    CHECK(frechet_distance(cloud, cloud) <= 1e-8);

    // univariate, means 0, variances 1 vs 4
    const std::vector<std::vector<double>> r = {{-1.0}, {1.0}};
    const std::vector<std::vector<double>> g = {{-2.0}, {2.0}};
    CHECK(frechet_distance(r, g) == doctest::Approx(1.0).epsilon(1e-6));

    // means 0 vs 1, both variances zero
    const std::vector<std::vector<double>> z0 = {{0.0}, {0.0}};
    const std::vector<std::vector<double>> z1 = {{1.0}, {1.0}};
    CHECK(frechet_distance(z0, z1) == doctest::Approx(1.0).epsilon(1e-6));

    // 2-dim diagonal case: trace form gives 5 + 10 - 2*(3 + 2) = 5
    const std::vector<std::vector<double>> dr = {{-1.0, -2.0}, {1.0, 2.0}};
    const std::vector<std::vector<double>> dg = {{-3.0, -1.0}, {3.0, 1.0}};
    CHECK(frechet_distance(dr, dg) == doctest::Approx(5.0).epsilon(1e-9));

    CHECK_THROWS_AS(frechet_distance({{1.0}}, z0), InsufficientSamples);
    CHECK_THROWS_AS(frechet_distance(z0, {{1.0}}), InsufficientSamples);
}

TEST_CASE("frechet distance symmetry and non-negativity") {
    Rng rng(17);
    for (int trial = 0; trial < 5; ++trial) {
        const auto a = random_cloud(rng, 12, 4, 1.0 + trial);
        const auto b = random_cloud(rng, 15, 4, 2.0);
        const double ab = frechet_distance(a, b);
        const double ba = frechet_distance(b, a);
        CHECK(ab >= 0.0);
        CHECK(std::abs(ab - ba) <= 1e-8 * std::max(1.0, ab));
    }
}

TEST_CASE("pca projection") {
    // axis-aligned anisotropic cloud: components recover the axes
    std::vector<std::vector<double>> axis;
    for (int i = -3; i <= 3; ++i)
        for (int j = -1; j <= 1; ++j)
            axis.push_back({3.0 * i, 0.5 * j});
    const PcaProjection p = pca2(axis);
    CHECK(p.explained[0] >= p.explained[1]);
    CHECK(p.explained[0] + p.explained[1] ==
          doctest::Approx(p.total_variance).epsilon(1e-9));
    for (size_t i = 0; i < axis.size(); ++i) {
        CHECK(std::abs(p.points[i][0]) ==
              doctest::Approx(std::abs(axis[i][0])).epsilon(1e-9));
        CHECK(std::abs(p.points[i][1]) ==
              doctest::Approx(std::abs(axis[i][1])).epsilon(1e-9));
    }

    // rank-1 cloud: second component carries nothing
    std::vector<std::vector<double>> line;
    for (int i = 0; i < 9; ++i)
        line.push_back({1.0 * i, 2.0 * i, -1.0 * i});
    const PcaProjection lp = pca2(line);
    CHECK(lp.explained[1] == doctest::Approx(0.0).epsilon(1e-9));

    CHECK_THROWS_AS(pca2({{1.0, 2.0}, {3.0, 4.0}}), InsufficientSamples);
}

TEST_CASE("pca agrees with a power-iteration oracle") {
    Rng rng(23);
    const int64_t n = 40, d = 6;
    // anisotropic: scale feature j by (j+1) so the spectrum separates
    auto x = random_cloud(rng, n, d, 1.0);
    for (auto& row : x)
        for (int64_t j = 0; j < d; ++j)
            row[static_cast<size_t>(j)] *= static_cast<double>(j + 1);

    const PcaProjection p = pca2(x);

    std::vector<double> mean(d, 0.0);
    for (const auto& row : x)
        for (int64_t j = 0; j < d; ++j)
            mean[static_cast<size_t>(j)] += row[static_cast<size_t>(j)];
    for (double& v : mean) v /= static_cast<double>(n);
    std::vector<double> cov(d * d, 0.0);
    for (const auto& row : x)
        for (int64_t i = 0; i < d; ++i)
            for (int64_t j = 0; j < d; ++j)
                cov[static_cast<size_t>(i * d + j)] +=
                    (row[static_cast<size_t>(i)] - mean[static_cast<size_t>(i)]) *
                    (row[static_cast<size_t>(j)] - mean[static_cast<size_t>(j)]) /
                    static_cast<double>(n);

    std::vector<double> oracle_values;
    std::vector<std::vector<double>> oracle_vecs;
    power_eigen(cov, d, 2, oracle_values, oracle_vecs);

    CHECK(p.explained[0] ==
          doctest::Approx(oracle_values[0]).epsilon(1e-8));
    CHECK(p.explained[1] ==
          doctest::Approx(oracle_values[1]).epsilon(1e-8));

    // projections match up to a per-component sign flip
    for (int comp = 0; comp < 2; ++comp) {
        double same = 0.0, flipped = 0.0;
        for (size_t i = 0; i < x.size(); ++i) {
            double oracle_proj = 0.0;
            for (int64_t j = 0; j < d; ++j)
                oracle_proj +=
                    (x[i][static_cast<size_t>(j)] - mean[static_cast<size_t>(j)]) *
                    oracle_vecs[static_cast<size_t>(comp)][static_cast<size_t>(j)];
            same = std::max(same,
                            std::abs(p.points[i][static_cast<size_t>(comp)] -
                                     oracle_proj));
            flipped = std::max(flipped,
                               std::abs(p.points[i][static_cast<size_t>(comp)] +
                                        oracle_proj));
        }
        CHECK(std::min(same, flipped) <= 1e-6);
    }

    const std::vector<int64_t> labels(x.size(), 2);
    const std::string csv = pca_csv(p, labels);
    CHECK(csv.rfind("pc1,pc2,label\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + static_cast<int64_t>(x.size()));
}

TEST_CASE("per-record evaluation pools counts, not record metrics") {
    // perfect oracle classifier
    const EvalReport perfect = evaluate_records(
        {{"800", {0, 1, 2, 0}, {0, 1, 2, 0}}, {"801", {2, 2, 3}, {2, 2, 3}}});
    CHECK(*perfect.pooled.accuracy == 1.0);
    CHECK(*perfect.pooled.n.sen == 1.0);
    CHECK(*perfect.pooled.v.ppr == 1.0);

    // two records engineered so pooled sensitivity differs from the mean of
    // the per-record sensitivities: record A 1/2 S caught, record B 6/8
    std::vector<int64_t> ta = {1, 1}, pa = {1, 0};
    std::vector<int64_t> tb(8, 1), pb(8, 1);
    pb[0] = 0;
    pb[1] = 0;
    const EvalReport rep = evaluate_records({{"A", ta, pa}, {"B", tb, pb}});
    REQUIRE(rep.records.size() == 2);
    CHECK(*rep.records[0].s.sen == doctest::Approx(0.5));
    CHECK(*rep.records[1].s.sen == doctest::Approx(0.75));
    CHECK(*rep.pooled.s.sen == doctest::Approx(7.0 / 10.0));  // not 0.625

    // a record with no V beats renders dashes in its row
    const EvalReport dash =
        evaluate_records({{"103", {0, 0, 1}, {0, 0, 1}}});
    CHECK(!dash.records[0].v.sen);
    const std::string table = report_table(dash);
    CHECK(table.find('-') != std::string::npos);
    const std::string csv = report_csv(dash);
    CHECK(csv.rfind("record,", 0) == 0);
    CHECK(csv.find("103,") != std::string::npos);
    CHECK(csv.find(",-,") != std::string::npos);
}
