#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "acegan/beatgrid.hpp"
#include "acegan/gan.hpp"
#include "acegan/wfdb.hpp"

namespace acegan {

// Conventional inter-patient split of the 48 MIT-BIH records: 22 train (DS1),
// 22 test (DS2), 4 paced records excluded.
const std::vector<std::string>& ds1_records();
const std::vector<std::string>& ds2_records();
const std::vector<std::string>& excluded_records();

enum class Split { ds1, ds2, other };
Split record_split(const std::string& record_id);
const char* split_name(Split s);

enum class Provenance { real, generated, estimated };
const char* provenance_name(Provenance p);

// Coupling matrix plus where it came from; the provenance tags make the
// no-test-data-in-training property checkable after the fact.
struct PoolCm {
    CouplingFactors cm;
    std::string record_id;
    int64_t beat_index = -1;
    Split split = Split::other;
    Provenance provenance = Provenance::real;
};

struct SegmentedRecord {
    std::string record_id;
    std::vector<double> mv;
    SegmentationPlan plan;
};

SegmentedRecord segment_record(const EcgRecord& rec, int channel = 0);

struct CommonPool {
    std::vector<PoolCm> beats;
    std::vector<std::string> warnings;  // e.g. an empty class stratum
    std::array<int64_t, 4> class_counts() const;  // N,S,V,F
};

// Every N, V and F beat of the given records plus the caller-selected S
// beats. Q beats never enter. Records outside DS1 are rejected.
CommonPool build_common_pool(const std::vector<SegmentedRecord>& ds1,
                             const std::vector<PoolCm>& selected_s);

struct SelectionConfig {
    int64_t repetitions = 200;
    int64_t train_per_class = 75;  // N and S draws per repetition
    int64_t test_n = 100;          // N beats from the S-free records
    int64_t epochs = 30;           // binary classifier training length
    int64_t batch = 50;
    int64_t top = 400;
    uint64_t seed = 3;
};

// Repeatedly trains a binary N-vs-S classifier (discriminator topology with
// a 2-way head) on draws from the S-bearing records, tests N accuracy on the
// remaining records, credits that accuracy to the drawn S beats and returns
// the `top` S beats by mean credited accuracy. S beats never drawn fill any
// remaining slots at a neutral score.
std::vector<PoolCm> select_representative_s(
    const std::vector<SegmentedRecord>& ds1, const SelectionConfig& cfg);

struct FinetuneAssemblyConfig {
    int64_t per_class_real = 400;       // S/V/F strata caps from the pool
    int64_t generated_per_class = 400;  // 0 = ablation without generation
    int64_t estimated_cap = 400;
    uint64_t seed = 5;
};

struct FinetuneSet {
    std::vector<CouplingFactors> samples;
    int64_t real_count = 0, generated_count = 0, estimated_count = 0;
};

// Part i: S/V/F strata from the pool (V and F drawn at random). Part ii:
// generated beats, conditioned label as class. Part iii: the estimated
// patient normals, labeled N. All samples train with validity target 1.
FinetuneSet assemble_finetune(const CommonPool& pool, Generator* g,
                              const std::vector<CouplingFactors>& estimated_n,
                              const FinetuneAssemblyConfig& cfg);

// Synthetic ECG cohort: template P-QRS-T beats with per-class morphology, a
// deterministic function of the config.
struct SynthRecordSpec {
    std::string name;
    int64_t beats = 500;
    std::array<double, 5> mix = {1.0, 0.0, 0.0, 0.0, 0.0};  // N,S,V,F,Q
};

struct SynthConfig {
    std::vector<SynthRecordSpec> records;
    int64_t period = 130;  // nominal R-R interval in samples
    double noise = 0.01;   // additive noise; 0 gives exactly repeated beats
    uint64_t seed = 4;
};

std::vector<EcgRecord> synth_cohort(const SynthConfig& cfg);

// record_id,beat_index,class,split,stratum,provenance
std::string manifest_csv(const std::vector<PoolCm>& beats);

}  // namespace acegan
