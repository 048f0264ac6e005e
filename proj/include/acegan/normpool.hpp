#pragma once

#include <cstdint>
#include <vector>

#include "acegan/beatgrid.hpp"

namespace acegan {

// Unrolled magnitude spectrogram of one dual-beat segment: sliding windows
// of 64 samples, step 1, each zero-padded to a 1024-point transform of which
// the lowest 32 bins are kept (up to about 11.25 Hz at 360 Hz sampling).
// Length = 32 * (len - 63), flattened frame-major.
std::vector<double> spectrogram(const std::vector<double>& segment);

// Pearson correlation coefficient. Throws DegenerateInput when either side
// has zero variance; pool admission treats that case as r = 0.
double correlation(const std::vector<double>& a, const std::vector<double>& b);

struct EstimatorConfig {
    double base_threshold = 0.9;   // self-correlation gate
    int64_t max_pool = 400;
    // Pool comparison threshold for a pass: 0.95 + epoch/100.
    double pool_threshold(int64_t epoch) const {
        return 0.95 + static_cast<double>(epoch) / 100.0;
    }
};

struct PoolEntry {
    int64_t beat_index = 0;
    int64_t admitted_epoch = 0;
};

struct NormalPool {
    std::vector<PoolEntry> entries;
};

// Unsupervised pass over beats in temporal order. A beat whose two dual-beat
// spectrograms correlate above base_threshold is admitted directly; otherwise
// it is compared member by member against the pool (aligned spectrogram
// pairs; first r above pool_threshold(epoch) admits). Full passes repeat with
// epoch incremented until a pass adds nothing, the pool is full, or the
// threshold reaches 1. Labels are deliberately not an input.
NormalPool estimate_normals(const std::vector<double>& mv_signal,
                            const std::vector<int64_t>& centers, int64_t L,
                            const EstimatorConfig& cfg);

}  // namespace acegan
