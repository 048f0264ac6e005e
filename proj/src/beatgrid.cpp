#include "acegan/beatgrid.hpp"

#include <cmath>

namespace acegan {

SegmentationPlan plan_segmentation(const EcgRecord& rec) {
    if (rec.annotations.size() < 3)
        throw TooFewBeats("record " + rec.header.record_name + " has " +
                          std::to_string(rec.annotations.size()) +
                          " beats; need at least 3");
    SegmentationPlan plan;
    plan.record_id = rec.header.record_name;
    plan.centers.reserve(rec.annotations.size());
    plan.classes.reserve(rec.annotations.size());
    for (const Annotation& a : rec.annotations) {
        plan.centers.push_back(a.sample_index);
        plan.classes.push_back(a.beat_class);
    }
    double mean_rr = 0.0;
    for (size_t i = 1; i < plan.centers.size(); ++i)
        mean_rr += static_cast<double>(plan.centers[i] - plan.centers[i - 1]);
    mean_rr /= static_cast<double>(plan.centers.size() - 1);
    plan.L = std::llround(mean_rr);
    if (plan.L < 2)
        throw DegenerateInput("record " + rec.header.record_name +
                              ": mean R-R interval below 2 samples");
    return plan;
}

std::vector<double> extract_segment(const std::vector<double>& signal,
                                    int64_t L, int64_t center) {
    if (signal.empty()) throw DegenerateInput("empty signal");
    const int64_t n = static_cast<int64_t>(signal.size());
    const int64_t start = center - L / 2;
    std::vector<double> seg(static_cast<size_t>(L));
    for (int64_t k = 0; k < L; ++k) {
        int64_t idx = start + k;
        if (idx < 0) idx = 0;
        if (idx >= n) idx = n - 1;
        seg[static_cast<size_t>(k)] = signal[static_cast<size_t>(idx)];
    }
    return seg;
}

std::vector<double> dual_beat(const std::vector<double>& signal,
                              const SegmentationPlan& plan, int64_t a,
                              int64_t b) {
    const int64_t n = static_cast<int64_t>(plan.centers.size());
    const auto clamp_beat = [n](int64_t i) {
        if (i < 0) return static_cast<int64_t>(0);
        if (i >= n) return n - 1;
        return i;
    };
    std::vector<double> out =
        extract_segment(signal, plan.L, plan.centers[static_cast<size_t>(clamp_beat(a))]);
    const std::vector<double> second =
        extract_segment(signal, plan.L, plan.centers[static_cast<size_t>(clamp_beat(b))]);
    out.insert(out.end(), second.begin(), second.end());
    return out;
}

std::vector<double> scale_dual_beat(const std::vector<double>& v, int64_t m) {
    const int64_t n = static_cast<int64_t>(v.size());
    if (n < 2) throw DegenerateInput("dual beat shorter than 2 samples");
    if (m < 1) throw DegenerateInput("output length must be at least 1");
    // Virtual upsampled sequence of n*m points: point j sits at fractional
    // input position j*(n-1)/(n*m-1), so both endpoints survive. Block means
    // over runs of n points give the m outputs without materializing the
    // upsampled array.
    const int64_t total = n * m;
    const double step = static_cast<double>(n - 1) /
                        static_cast<double>(total - 1);
    std::vector<double> out(static_cast<size_t>(m));
    int64_t j = 0;
    for (int64_t block = 0; block < m; ++block) {
        double sum = 0.0;
        for (int64_t e = 0; e < n; ++e, ++j) {
            const double t = static_cast<double>(j) * step;
            int64_t lo = static_cast<int64_t>(t);
            if (lo >= n - 1) lo = n - 2;
            const double frac = t - static_cast<double>(lo);
            sum += v[static_cast<size_t>(lo)] +
                   frac * (v[static_cast<size_t>(lo + 1)] -
                           v[static_cast<size_t>(lo)]);
        }
        out[static_cast<size_t>(block)] = sum / static_cast<double>(n);
    }
    return out;
}

CouplingFactors coupling_factors(const std::vector<double>& mv_signal,
                                 const SegmentationPlan& plan, int64_t i,
                                 int64_t m) {
    if (i < 0 || i >= static_cast<int64_t>(plan.centers.size()))
        throw DegenerateInput("beat index " + std::to_string(i) +
                              " out of range");
    CouplingFactors cf;
    cf.u = scale_dual_beat(dual_beat(mv_signal, plan, i - 1, i), m);
    cf.v = scale_dual_beat(dual_beat(mv_signal, plan, i, i + 1), m);
    cf.label = plan.classes[static_cast<size_t>(i)];
    return cf;
}

Tensor materialize(const CouplingFactors& cf) {
    const int64_t m = static_cast<int64_t>(cf.u.size());
    Tensor t({m, static_cast<int64_t>(cf.v.size())});
    for (int64_t r = 0; r < m; ++r)
        for (int64_t c = 0; c < static_cast<int64_t>(cf.v.size()); ++c)
            t.data[static_cast<size_t>(r * static_cast<int64_t>(cf.v.size()) + c)] =
                cf.u[static_cast<size_t>(r)] * cf.v[static_cast<size_t>(c)];
    return t;
}

}  // namespace acegan
