#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "acegan/errors.hpp"

namespace acegan {

// Six-way label space used by the evaluator: the five AAMI classes plus the
// "generated" class predicted by the adversarially trained classifier.
inline constexpr int64_t kEvalClasses = 6;
inline constexpr int64_t kGeneratedLabel = 5;

struct ConfusionMatrix {
    // counts[truth][predicted]
    std::array<std::array<int64_t, kEvalClasses>, kEvalClasses> counts{};

    int64_t total() const;
    ConfusionMatrix& operator+=(const ConfusionMatrix& o);
};

ConfusionMatrix confusion(const std::vector<int64_t>& truth,
                          const std::vector<int64_t>& predicted);

struct BinaryCounts {
    int64_t tp = 0, tn = 0, fp = 0, fn = 0;
};

// One-vs-rest reduction of the confusion matrix for the given positive
// class. "generated" predictions fall on the negative side like any other
// non-positive column.
BinaryCounts one_vs_rest(const ConfusionMatrix& cm, int64_t positive);

// Absent values are ratios with a zero denominator; rendered as "-".
struct MetricSet {
    std::optional<double> acc, sen, spe, ppr, f1;
};

MetricSet metrics(const BinaryCounts& c);

std::string format_metric(const std::optional<double>& m);

// Eigendecomposition of a symmetric n x n matrix (row major) by cyclic
// Jacobi rotations. Eigenvector j lives in column j of `vectors`
// (vectors[i * n + j] is its i-th component). Unsorted.
void symmetric_eigen(std::vector<double> a, int64_t n,
                     std::vector<double>& values, std::vector<double>& vectors);

// Frechet distance between two feature clouds (rows are samples). Uses
// population covariances and the symmetric square-root form; eigenvalues
// below 1e-10 are clipped to zero.
double frechet_distance(const std::vector<std::vector<double>>& real_set,
                        const std::vector<std::vector<double>>& generated_set);

struct PcaProjection {
    std::vector<std::array<double, 2>> points;   // one row per sample
    std::array<double, 2> explained{};           // top-2 eigenvalues
    double total_variance = 0.0;                 // trace of the covariance
};

PcaProjection pca2(const std::vector<std::vector<double>>& features);

// CSV with one "pc1,pc2,label" row per sample; header included.
std::string pca_csv(const PcaProjection& p, const std::vector<int64_t>& labels);

struct RecordOutcome {
    std::string record_id;
    std::vector<int64_t> truth, predicted;
};

struct RecordReport {
    std::string record_id;
    ConfusionMatrix cm;
    std::optional<double> accuracy;  // fraction of beats classified correctly
    MetricSet n, s, v;               // one-vs-rest metrics per class
};

struct EvalReport {
    std::vector<RecordReport> records;
    RecordReport pooled;  // counts summed over records, then reduced
};

EvalReport evaluate_records(const std::vector<RecordOutcome>& outcomes);

// Plain-text table: one row per record plus a pooled total row, columns
// Sen/Ppr for N, S, V and overall accuracy.
std::string report_table(const EvalReport& r);
std::string report_csv(const EvalReport& r);

}  // namespace acegan
