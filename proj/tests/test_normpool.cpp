#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "acegan/normpool.hpp"
#include "doctest.h"

using namespace acegan;

namespace {

void add_bump(std::vector<double>& sig, int64_t center, double amp,
              double width) {
    const int64_t lo = std::max<int64_t>(0, center - 4 * static_cast<int64_t>(width));
    const int64_t hi = std::min<int64_t>(static_cast<int64_t>(sig.size()) - 1,
                                         center + 4 * static_cast<int64_t>(width));
    for (int64_t i = lo; i <= hi; ++i) {
        const double d = static_cast<double>(i - center) / width;
        sig[static_cast<size_t>(i)] += amp * std::exp(-0.5 * d * d);
    }
}

// Periodic train of template beats; `ectopics` marks beats rendered with a
// much wider, taller bump (a spectrally distinct morphology).
std::vector<double> beat_train(const std::vector<int64_t>& centers,
                               const std::set<int64_t>& ectopics,
                               int64_t num_samples) {
    std::vector<double> sig(static_cast<size_t>(num_samples), 0.0);
    for (size_t i = 0; i < centers.size(); ++i) {
        if (ectopics.count(static_cast<int64_t>(i))) {
            add_bump(sig, centers[i], 1.8, 14.0);
        } else {
            add_bump(sig, centers[i], 1.0, 3.5);
            add_bump(sig, centers[i] - 30, 0.2, 6.0);  // P-ish bump
            add_bump(sig, centers[i] + 40, 0.35, 9.0);  // T-ish bump
        }
    }
    return sig;
}

std::vector<int64_t> periodic_centers(int64_t count, int64_t period,
                                      int64_t start) {
    std::vector<int64_t> centers(static_cast<size_t>(count));
    for (int64_t i = 0; i < count; ++i)
        centers[static_cast<size_t>(i)] = start + i * period;
    return centers;
}

}  // namespace

TEST_CASE("spectrogram shape, zeros, and tone localization") {
    const std::vector<double> zeros(200, 0.0);
    const auto z = spectrogram(zeros);
    CHECK(z.size() == 32 * (200 - 63));
    for (double v : z) CHECK(v == 0.0);

    // 5.625 Hz at 360 Hz sampling lands on bin 16 of a 1024-point transform
    std::vector<double> tone(150);
    for (size_t i = 0; i < tone.size(); ++i)
        tone[i] = std::sin(2.0 * M_PI * 16.0 * static_cast<double>(i) / 1024.0);
    const auto s = spectrogram(tone);
    const int64_t frames = 150 - 63;
    // the 64-sample window smears a pure tone over neighboring bins, so
    // locate the peak of the frame-averaged spectrum
    std::vector<double> mean_bin(32, 0.0);
    for (int64_t f = 0; f < frames; ++f)
        for (int64_t k = 0; k < 32; ++k)
            mean_bin[static_cast<size_t>(k)] += s[static_cast<size_t>(f * 32 + k)];
    CHECK(std::max_element(mean_bin.begin(), mean_bin.end()) -
              mean_bin.begin() ==
          16);

    CHECK_THROWS_AS(spectrogram(std::vector<double>(63, 1.0)),
                    SegmentTooShort);
}

TEST_CASE("correlation reference values") {
    const std::vector<double> a = {1, 2, 3, 4};
    const std::vector<double> b = {2, 1, 4, 3};
    CHECK(correlation(a, b) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(correlation(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    std::vector<double> neg(a.size());
    for (size_t i = 0; i < a.size(); ++i) neg[i] = -a[i];
    CHECK(correlation(a, neg) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK_THROWS_AS(correlation(a, {1, 1, 1, 1}), DegenerateInput);
    CHECK_THROWS_AS(correlation(a, {1, 2}), LengthMismatch);
}

TEST_CASE("identical beats are all admitted on the first pass") {
    const auto centers = periodic_centers(30, 130, 200);
    const auto sig = beat_train(centers, {}, 4400);
    const NormalPool pool = estimate_normals(sig, centers, 130, {});
    CHECK(pool.entries.size() == 30);
    for (const PoolEntry& e : pool.entries) CHECK(e.admitted_epoch == 0);

    EstimatorConfig capped;
    capped.max_pool = 5;
    CHECK(estimate_normals(sig, centers, 130, capped).entries.size() == 5);
}

TEST_CASE("flat-line records yield an empty pool") {
    const auto centers = periodic_centers(10, 130, 200);
    const std::vector<double> flat(2000, 0.7);
    CHECK(estimate_normals(flat, centers, 130, {}).entries.empty());
}

TEST_CASE("morphologically distinct ectopics stay out of the pool") {
    const auto centers = periodic_centers(40, 130, 200);
    const std::set<int64_t> ect = {10, 25};
    const auto sig = beat_train(centers, ect, 5700);
    const NormalPool pool = estimate_normals(sig, centers, 130, {});

    std::set<int64_t> got;
    for (const PoolEntry& e : pool.entries) {
        CHECK(e.beat_index >= 0);
        CHECK(e.beat_index < 40);
        CHECK(got.insert(e.beat_index).second);  // no duplicates
    }
    for (int64_t e : ect) CHECK(got.count(e) == 0);
    CHECK(got.size() >= 36);  // all plain beats make it in

    // determinism
    const NormalPool again = estimate_normals(sig, centers, 130, {});
    REQUIRE(again.entries.size() == pool.entries.size());
    for (size_t i = 0; i < pool.entries.size(); ++i) {
        CHECK(again.entries[i].beat_index == pool.entries[i].beat_index);
        CHECK(again.entries[i].admitted_epoch == pool.entries[i].admitted_epoch);
    }
}
