#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "acegan/tensor.hpp"
#include "acegan/wfdb.hpp"

namespace acegan {

struct SegmentationPlan {
    std::string record_id;
    int64_t L = 0;  // per-record mean R-R interval, nearest integer
    std::vector<int64_t> centers;  // R-peak sample indices, in order
    std::vector<AamiClass> classes;
};

// L = round(mean of consecutive R-R differences over the whole record).
// Needs at least 3 beats (one center with both neighbors).
SegmentationPlan plan_segmentation(const EcgRecord& rec);

// L samples centered on `center`: floor(L/2) before, the rest after.
// Out-of-range indices replicate the nearest edge sample.
std::vector<double> extract_segment(const std::vector<double>& signal,
                                    int64_t L, int64_t center);

// Concatenation of the segments of beats a and b (in that order). Beat
// indices outside [0, n) replicate the nearest existing beat, which covers
// the missing neighbor of the first and last beat.
std::vector<double> dual_beat(const std::vector<double>& signal,
                              const SegmentationPlan& plan, int64_t a,
                              int64_t b);

// Linear interpolation upsamples the length-n input to n*M points
// (endpoints preserved), then M block means over runs of n points.
std::vector<double> scale_dual_beat(const std::vector<double>& v, int64_t m);

// Coupling matrix in factored form: CM = u v^T with u from the
// (previous, current) pair and v from the (current, next) pair, both scaled
// to length m. The label is the center beat's class.
struct CouplingFactors {
    std::vector<double> u, v;
    AamiClass label = AamiClass::N;
};

CouplingFactors coupling_factors(const std::vector<double>& mv_signal,
                                 const SegmentationPlan& plan, int64_t i,
                                 int64_t m);

// Dense [m,m] matrix from the factors; CM[r][c] = u[r]*v[c].
Tensor materialize(const CouplingFactors& cf);

}  // namespace acegan
