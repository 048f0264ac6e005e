#include "acegan/normpool.hpp"

#include <array>
#include <cmath>

#include "acegan/matmul.hpp"

namespace acegan {

namespace {

constexpr int64_t kWindow = 64;
constexpr int64_t kBins = 32;
constexpr int64_t kFftLen = 1024;

struct TrigTables {
    std::array<std::array<double, kWindow>, kBins> cos_t, sin_t;
    TrigTables() {
        for (int64_t k = 0; k < kBins; ++k)
            for (int64_t t = 0; t < kWindow; ++t) {
                const double ang = 2.0 * M_PI * static_cast<double>(k) *
                                   static_cast<double>(t) /
                                   static_cast<double>(kFftLen);
                cos_t[k][t] = std::cos(ang);
                sin_t[k][t] = std::sin(ang);
            }
    }
};

const TrigTables& tables() {
    static const TrigTables t;
    return t;
}

// (x - mean) / sqrt(sum of squared deviations); dot of two such vectors is
// the Pearson coefficient. Returns false when the variance is zero.
bool normalize(const std::vector<double>& x, std::vector<double>& out) {
    const int64_t n = static_cast<int64_t>(x.size());
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    out.resize(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        out[i] = x[i] - mean;
        ss += out[i] * out[i];
    }
    if (ss == 0.0) return false;
    const double inv = 1.0 / std::sqrt(ss);
    for (double& v : out) v *= inv;
    return true;
}

}  // namespace

std::vector<double> spectrogram(const std::vector<double>& segment) {
    const int64_t len = static_cast<int64_t>(segment.size());
    if (len < kWindow)
        throw SegmentTooShort("segment of " + std::to_string(len) +
                              " samples; window needs " +
                              std::to_string(kWindow));
    const TrigTables& tt = tables();
    const int64_t frames = len - kWindow + 1;
    std::vector<double> out(static_cast<size_t>(frames * kBins));
    for (int64_t f = 0; f < frames; ++f) {
        const double* x = segment.data() + f;
        double* row = out.data() + f * kBins;
        for (int64_t k = 0; k < kBins; ++k) {
            const double re = dot_fixed(x, tt.cos_t[static_cast<size_t>(k)].data(), kWindow);
            const double im = dot_fixed(x, tt.sin_t[static_cast<size_t>(k)].data(), kWindow);
            row[k] = std::sqrt(re * re + im * im);
        }
    }
    return out;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw LengthMismatch("correlation over " + std::to_string(a.size()) +
                             " vs " + std::to_string(b.size()) + " points");
    if (a.empty()) throw DegenerateInput("correlation of empty vectors");
    std::vector<double> na, nb;
    if (!normalize(a, na) || !normalize(b, nb))
        throw DegenerateInput("correlation of a zero-variance vector");
    return dot_fixed(na.data(), nb.data(), static_cast<int64_t>(na.size()));
}

NormalPool estimate_normals(const std::vector<double>& mv_signal,
                            const std::vector<int64_t>& centers, int64_t L,
                            const EstimatorConfig& cfg) {
    NormalPool pool;
    const int64_t n = static_cast<int64_t>(centers.size());
    if (n == 0 || cfg.max_pool <= 0) return pool;

    SegmentationPlan plan;
    plan.L = L;
    plan.centers = centers;

    struct Member {
        std::vector<double> n1, n2;  // normalized spectrogram pair
    };
    std::vector<Member> members;

    // One beat's normalized spectrograms; ok == false marks a flat-line
    // beat (constant segment or zero-variance spectrogram), which is never
    // admitted: its correlation counts as 0.
    struct Candidate {
        std::vector<double> n1, n2;
        bool ok = false;
    };
    const auto is_constant = [](const std::vector<double>& v) {
        for (double x : v)
            if (x != v[0]) return false;
        return true;
    };
    const auto make_candidate = [&](int64_t i) {
        Candidate c;
        const std::vector<double> d1 = dual_beat(mv_signal, plan, i - 1, i);
        const std::vector<double> d2 = dual_beat(mv_signal, plan, i, i + 1);
        if (is_constant(d1) || is_constant(d2)) return c;
        const std::vector<double> s1 = spectrogram(d1);
        const std::vector<double> s2 = spectrogram(d2);
        const bool ok1 = normalize(s1, c.n1);
        const bool ok2 = normalize(s2, c.n2);
        c.ok = ok1 && ok2;
        return c;
    };

    std::vector<bool> admitted(static_cast<size_t>(n), false);
    std::vector<double> r_self(static_cast<size_t>(n), 0.0);
    std::vector<bool> r_self_known(static_cast<size_t>(n), false);

    for (int64_t epoch = 0;; ++epoch) {
        const double threshold = cfg.pool_threshold(epoch);
        if (threshold >= 1.0) break;  // no correlation can exceed it
        int64_t added = 0;
        for (int64_t i = 0; i < n; ++i) {
            if (admitted[static_cast<size_t>(i)]) continue;
            if (static_cast<int64_t>(pool.entries.size()) >= cfg.max_pool) break;
            const Candidate cand = make_candidate(i);
            if (!r_self_known[static_cast<size_t>(i)]) {
                r_self[static_cast<size_t>(i)] =
                    cand.ok ? dot_fixed(cand.n1.data(), cand.n2.data(),
                                        static_cast<int64_t>(cand.n1.size()))
                            : 0.0;
                r_self_known[static_cast<size_t>(i)] = true;
            }
            bool admit = r_self[static_cast<size_t>(i)] > cfg.base_threshold;
            if (!admit && cand.ok) {
                for (const Member& m : members) {
                    const double r1 = dot_fixed(
                        cand.n1.data(), m.n1.data(),
                        static_cast<int64_t>(cand.n1.size()));
                    if (r1 > threshold) {
                        admit = true;
                        break;
                    }
                    const double r2 = dot_fixed(
                        cand.n2.data(), m.n2.data(),
                        static_cast<int64_t>(cand.n2.size()));
                    if (r2 > threshold) {
                        admit = true;
                        break;
                    }
                }
            }
            if (admit) {
                admitted[static_cast<size_t>(i)] = true;
                pool.entries.push_back({i, epoch});
                members.push_back({cand.n1, cand.n2});
                ++added;
            }
        }
        if (added == 0) break;
        if (static_cast<int64_t>(pool.entries.size()) >= cfg.max_pool) break;
    }
    return pool;
}

}  // namespace acegan
