#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "acegan/datasets.hpp"
#include "doctest.h"

using namespace acegan;

namespace {

CouplingFactors fixed_factors(Rng& rng, AamiClass label) {
    CouplingFactors cf;
    cf.u.resize(kCmSide);
    cf.v.resize(kCmSide);
    for (double& x : cf.u) x = rng.normal();
    for (double& x : cf.v) x = rng.normal();
    cf.label = label;
    return cf;
}

PoolCm pool_entry(Rng& rng, AamiClass label, const std::string& rec,
                  int64_t beat) {
    PoolCm b;
    b.cm = fixed_factors(rng, label);
    b.record_id = rec;
    b.beat_index = beat;
    b.split = record_split(rec);
    return b;
}

// hand-built record for the selection tests: beats every L samples, N beats
// carry one waveform, S beats either the same one or a clearly distinct one
SegmentedRecord handmade_record(const std::string& id,
                                const std::vector<AamiClass>& classes,
                                bool s_distinct, int64_t L = 90) {
    SegmentedRecord rec;
    rec.record_id = id;
    rec.plan.record_id = id;
    rec.plan.L = L;
    const int64_t n = static_cast<int64_t>(classes.size());
    rec.mv.assign(static_cast<size_t>((n + 2) * L), 0.0);
    for (int64_t i = 0; i < n; ++i) {
        const int64_t c = (i + 1) * L;
        rec.plan.centers.push_back(c);
        rec.plan.classes.push_back(classes[static_cast<size_t>(i)]);
        const bool spiky =
            classes[static_cast<size_t>(i)] == AamiClass::S && s_distinct;
        for (int64_t d = -L / 2; d < L / 2; ++d) {
            const double phase =
                2.0 * 3.14159265358979323846 * static_cast<double>(d) /
                static_cast<double>(L);
            rec.mv[static_cast<size_t>(c + d)] =
                spiky ? 0.9 * std::sin(8.0 * phase) : 0.8 * std::sin(phase);
        }
    }
    return rec;
}

std::vector<AamiClass> mixed_classes(int64_t n_count, int64_t s_count) {
    std::vector<AamiClass> v(static_cast<size_t>(n_count), AamiClass::N);
    v.insert(v.end(), static_cast<size_t>(s_count), AamiClass::S);
    return v;
}

bool same_records(const EcgRecord& a, const EcgRecord& b) {
    if (a.samples != b.samples) return false;
    if (a.annotations.size() != b.annotations.size()) return false;
    for (size_t i = 0; i < a.annotations.size(); ++i) {
        const Annotation &x = a.annotations[i], &y = b.annotations[i];
        if (x.sample_index != y.sample_index || x.beat_class != y.beat_class ||
            x.raw_code != y.raw_code)
            return false;
    }
    return true;
}

}  // namespace

TEST_CASE("record split matches the conventional roster") {
    const auto& d1 = ds1_records();
    const auto& d2 = ds2_records();
    const auto& ex = excluded_records();
    CHECK(d1.size() == 22);
    CHECK(d2.size() == 22);
    CHECK(ex.size() == 4);

    std::set<std::string> all;
    all.insert(d1.begin(), d1.end());
    all.insert(d2.begin(), d2.end());
    all.insert(ex.begin(), ex.end());
    CHECK(all.size() == 48);  // disjoint rosters

    for (const auto& r : d1) CHECK(record_split(r) == Split::ds1);
    for (const auto& r : d2) CHECK(record_split(r) == Split::ds2);
    for (const auto& r : ex) CHECK(record_split(r) == Split::other);
    CHECK(record_split("999") == Split::other);

    CHECK(std::string(split_name(Split::ds1)) == "DS1");
    CHECK(std::string(split_name(Split::ds2)) == "DS2");
    CHECK(std::string(split_name(Split::other)) == "other");
    CHECK(std::string(provenance_name(Provenance::real)) == "real");
    CHECK(std::string(provenance_name(Provenance::generated)) == "generated");
    CHECK(std::string(provenance_name(Provenance::estimated)) == "estimated");
}

TEST_CASE("common pool keeps N/V/F, takes S only through selection, drops Q") {
    SynthConfig cfg;
    cfg.noise = 0.01;
    cfg.seed = 11;
    cfg.records.push_back({"101", 60, {0.55, 0.15, 0.15, 0.10, 0.05}});
    cfg.records.push_back({"106", 40, {0.70, 0.30, 0.0, 0.0, 0.0}});
    auto recs = synth_cohort(cfg);

    std::vector<SegmentedRecord> segd;
    std::array<int64_t, 5> truth = {0, 0, 0, 0, 0};
    for (const auto& r : recs) {
        segd.push_back(segment_record(r));
        for (const auto& a : r.annotations)
            ++truth[static_cast<size_t>(a.beat_class)];
    }
    REQUIRE(truth[1] > 0);  // S present in the source
    REQUIRE(truth[4] > 0);  // Q present in the source

    Rng rng(7);
    std::vector<PoolCm> selected = {pool_entry(rng, AamiClass::S, "106", 3),
                                    pool_entry(rng, AamiClass::S, "106", 5)};
    CommonPool pool = build_common_pool(segd, selected);

    const auto counts = pool.class_counts();
    CHECK(counts[0] == truth[0]);
    CHECK(counts[1] == 2);  // exactly the selected beats
    CHECK(counts[2] == truth[2]);
    CHECK(counts[3] == truth[3]);
    CHECK(static_cast<int64_t>(pool.beats.size()) ==
          truth[0] + truth[2] + truth[3] + 2);  // Q never enters
    CHECK(pool.warnings.empty());

    for (const auto& b : pool.beats) {
        CHECK(b.split == Split::ds1);
        CHECK(b.provenance == Provenance::real);
    }

    // per-record totals survive into the pool
    std::map<std::string, int64_t> per_rec;
    for (const auto& b : pool.beats)
        if (b.cm.label != AamiClass::S) ++per_rec[b.record_id];
    int64_t first_nvf = 0;
    for (const auto& a : recs[0].annotations)
        if (a.beat_class == AamiClass::N || a.beat_class == AamiClass::V ||
            a.beat_class == AamiClass::F)
            ++first_nvf;
    CHECK(per_rec["101"] == first_nvf);
}

TEST_CASE("common pool flags empty strata and rejects test records") {
    SynthConfig cfg;
    cfg.noise = 0.0;
    cfg.records.push_back({"101", 20, {1.0, 0.0, 0.0, 0.0, 0.0}});
    auto recs = synth_cohort(cfg);
    std::vector<SegmentedRecord> segd = {segment_record(recs[0])};

    CommonPool pool = build_common_pool(segd, {});
    REQUIRE(pool.warnings.size() == 3);
    CHECK(pool.warnings[0] == "empty S stratum");
    CHECK(pool.warnings[1] == "empty V stratum");
    CHECK(pool.warnings[2] == "empty F stratum");

    // a DS2 record must never reach the training pool
    cfg.records[0].name = "100";
    auto ds2_rec = synth_cohort(cfg);
    std::vector<SegmentedRecord> bad = {segment_record(ds2_rec[0])};
    CHECK_THROWS_AS(build_common_pool(bad, {}), ConfigError);

    Rng rng(3);
    std::vector<PoolCm> wrong = {pool_entry(rng, AamiClass::V, "101", 0)};
    CHECK_THROWS_AS(build_common_pool(segd, wrong), DegenerateInput);
    std::vector<PoolCm> leaked = {pool_entry(rng, AamiClass::S, "100", 0)};
    CHECK_THROWS_AS(build_common_pool(segd, leaked), ConfigError);
}

TEST_CASE("selection needs sixteen S-bearing records and a clean N test pool") {
    std::vector<SegmentedRecord> cohort;
    for (int i = 0; i < 15; ++i)
        cohort.push_back(handmade_record("r" + std::to_string(i),
                                         mixed_classes(4, 2), true));
    cohort.push_back(handmade_record("pure", mixed_classes(6, 0), true));
    SelectionConfig cfg;
    cfg.repetitions = 1;
    CHECK_THROWS_AS(select_representative_s(cohort, cfg),
                    InsufficientSBearingRecords);

    // sixteen S-bearing records but nothing left to test on
    cohort[15] = handmade_record("r15", mixed_classes(4, 2), true);
    CHECK_THROWS_AS(select_representative_s(cohort, cfg), EmptyDataset);
}

TEST_CASE("selection is deterministic and fills unseen beats in stable order") {
    std::vector<SegmentedRecord> cohort;
    for (int i = 0; i < 16; ++i)
        cohort.push_back(handmade_record("r" + std::to_string(i),
                                         mixed_classes(3, 2), i % 2 == 0));
    cohort.push_back(handmade_record("pure0", mixed_classes(5, 0), true));
    cohort.push_back(handmade_record("pure1", mixed_classes(5, 0), true));

    SelectionConfig cfg;
    cfg.repetitions = 2;
    cfg.train_per_class = 3;
    cfg.test_n = 4;
    cfg.epochs = 1;
    cfg.batch = 6;
    cfg.top = 32;  // every S beat fits
    cfg.seed = 21;

    auto a = select_representative_s(cohort, cfg);
    auto b = select_representative_s(cohort, cfg);
    REQUIRE(a.size() == 32);
    REQUIRE(b.size() == 32);
    std::set<std::pair<std::string, int64_t>> seen;
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].record_id == b[i].record_id);
        CHECK(a[i].beat_index == b[i].beat_index);
        CHECK(a[i].cm.u == b[i].cm.u);
        CHECK(a[i].cm.label == AamiClass::S);
        CHECK(a[i].provenance == Provenance::real);
        seen.insert({a[i].record_id, a[i].beat_index});
    }
    CHECK(seen.size() == 32);  // each S beat exactly once when top covers all

    cfg.top = 5;
    auto c = select_representative_s(cohort, cfg);
    CHECK(c.size() == 5);
    for (size_t i = 0; i < c.size(); ++i) {
        CHECK(c[i].record_id == a[i].record_id);
        CHECK(c[i].beat_index == a[i].beat_index);
    }
}

TEST_CASE("fine-tune assembly composes real, generated and estimated parts") {
    Rng rng(31);
    CommonPool pool;
    for (int64_t i = 0; i < 2; ++i)
        pool.beats.push_back(pool_entry(rng, AamiClass::S, "118", i));
    for (int64_t i = 0; i < 5; ++i)
        pool.beats.push_back(pool_entry(rng, AamiClass::V, "119", i));
    for (int64_t i = 0; i < 4; ++i)
        pool.beats.push_back(pool_entry(rng, AamiClass::F, "124", i));
    for (int64_t i = 0; i < 3; ++i)
        pool.beats.push_back(pool_entry(rng, AamiClass::N, "101", i));

    std::vector<CouplingFactors> estimated;
    for (int64_t i = 0; i < 5; ++i)
        estimated.push_back(fixed_factors(rng, AamiClass::V));  // mislabeled

    Rng grng(41);
    Generator g(grng);

    FinetuneAssemblyConfig cfg;
    cfg.per_class_real = 3;
    cfg.generated_per_class = 2;
    cfg.estimated_cap = 4;
    cfg.seed = 5;

    FinetuneSet set = assemble_finetune(pool, &g, estimated, cfg);
    CHECK(set.real_count == 2 + 3 + 3);  // S capped by supply, V/F by config
    CHECK(set.generated_count == 8);
    CHECK(set.estimated_count == 4);
    CHECK(set.samples.size() == 8 + 8 + 4);

    // layout: S block, V block, F block, generated by class, estimated
    CHECK(set.samples[0].label == AamiClass::S);
    CHECK(set.samples[1].label == AamiClass::S);
    for (int i = 2; i < 5; ++i) CHECK(set.samples[i].label == AamiClass::V);
    for (int i = 5; i < 8; ++i) CHECK(set.samples[i].label == AamiClass::F);
    for (int i = 0; i < 8; ++i)
        CHECK(set.samples[8 + i].label == static_cast<AamiClass>(i / 2));
    for (int i = 16; i < 20; ++i)
        CHECK(set.samples[i].label == AamiClass::N);  // estimated forced to N

    // deterministic under the seed
    FinetuneSet again = assemble_finetune(pool, &g, estimated, cfg);
    REQUIRE(again.samples.size() == set.samples.size());
    for (size_t i = 0; i < set.samples.size(); ++i) {
        CHECK(set.samples[i].u == again.samples[i].u);
        CHECK(set.samples[i].v == again.samples[i].v);
    }
}

TEST_CASE("fine-tune assembly handles ablation and missing pieces") {
    Rng rng(33);
    CommonPool pool;
    pool.beats.push_back(pool_entry(rng, AamiClass::S, "118", 0));
    pool.beats.push_back(pool_entry(rng, AamiClass::V, "119", 0));
    pool.beats.push_back(pool_entry(rng, AamiClass::F, "124", 0));

    FinetuneAssemblyConfig cfg;
    cfg.generated_per_class = 0;  // ablation: no generator involved
    FinetuneSet set = assemble_finetune(pool, nullptr, {}, cfg);
    CHECK(set.real_count == 3);
    CHECK(set.generated_count == 0);
    CHECK(set.estimated_count == 0);  // an empty normal pool is legal
    CHECK(set.samples.size() == 3);

    cfg.generated_per_class = 2;
    CHECK_THROWS_AS(assemble_finetune(pool, nullptr, {}, cfg), MissingArtifact);
}

TEST_CASE("synthetic cohort is deterministic and honors the class mix") {
    SynthConfig cfg;
    cfg.seed = 13;
    cfg.noise = 0.02;
    cfg.records.push_back({"x90", 2000, {0.9, 0.0, 0.1, 0.0, 0.0}});
    auto a = synth_cohort(cfg);
    auto b = synth_cohort(cfg);
    REQUIRE(a.size() == 1);
    CHECK(same_records(a[0], b[0]));

    int64_t n = 0, v = 0, other = 0;
    for (const auto& ann : a[0].annotations) {
        if (ann.beat_class == AamiClass::N) ++n;
        else if (ann.beat_class == AamiClass::V) ++v;
        else ++other;
    }
    CHECK(other == 0);
    CHECK(n + v == 2000);
    CHECK(std::abs(v - 200) < 60);  // ~5 sigma for a 10% draw

    // annotations strictly increasing, samples inside the 12-bit range
    for (size_t i = 1; i < a[0].annotations.size(); ++i)
        CHECK(a[0].annotations[i].sample_index >
              a[0].annotations[i - 1].sample_index);
    for (int s : a[0].samples[0]) {
        CHECK(s >= -2048);
        CHECK(s <= 2047);
    }
}

TEST_CASE("zero-noise single-class cohort repeats the beat exactly") {
    SynthConfig cfg;
    cfg.seed = 19;
    cfg.noise = 0.0;
    cfg.period = 150;
    cfg.records.push_back({"flat", 40, {1.0, 0.0, 0.0, 0.0, 0.0}});
    auto recs = synth_cohort(cfg);
    const auto& rec = recs[0];
    REQUIRE(rec.annotations.size() == 40);

    // every beat-centered window is bit-identical to the first
    const int64_t c0 = rec.annotations[0].sample_index;
    for (size_t i = 1; i < rec.annotations.size(); ++i) {
        const int64_t ci = rec.annotations[i].sample_index;
        CHECK(ci - rec.annotations[i - 1].sample_index == 150);
        for (int64_t d = -60; d <= 60; ++d)
            CHECK(rec.samples[0][static_cast<size_t>(ci + d)] ==
                  rec.samples[0][static_cast<size_t>(c0 + d)]);
    }
}

TEST_CASE("premature S beats shorten the preceding interval") {
    SynthConfig cfg;
    cfg.seed = 23;
    cfg.noise = 0.0;
    cfg.period = 150;
    cfg.records.push_back({"sv", 30, {0.0, 1.0, 0.0, 0.0, 0.0}});
    auto recs = synth_cohort(cfg);
    const auto& anns = recs[0].annotations;
    for (size_t i = 1; i < anns.size(); ++i)
        CHECK(anns[i].sample_index - anns[i - 1].sample_index == 120);
}

TEST_CASE("synthetic records survive a disk round trip and segmentation") {
    SynthConfig cfg;
    cfg.seed = 29;
    cfg.noise = 0.01;
    cfg.records.push_back({"rt1", 50, {0.6, 0.1, 0.2, 0.1, 0.0}});
    auto recs = synth_cohort(cfg);

    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "acegan_synth_rt";
    fs::create_directories(dir);
    write_record(recs[0], dir.string(), nullptr);
    EcgRecord back = read_record(dir.string(), "rt1");
    CHECK(same_records(recs[0], back));
    CHECK(back.header.num_samples == recs[0].header.num_samples);

    SegmentedRecord segd = segment_record(back);
    REQUIRE(segd.plan.centers.size() == recs[0].annotations.size());
    for (size_t i = 0; i < segd.plan.centers.size(); ++i) {
        CHECK(segd.plan.centers[i] == recs[0].annotations[i].sample_index);
        CHECK(segd.plan.classes[i] == recs[0].annotations[i].beat_class);
    }
    fs::remove_all(dir);
}

TEST_CASE("manifest lists one row per beat with provenance") {
    Rng rng(37);
    std::vector<PoolCm> beats = {pool_entry(rng, AamiClass::N, "101", 7),
                                 pool_entry(rng, AamiClass::S, "118", 2)};
    beats[1].provenance = Provenance::generated;
    beats[1].beat_index = -1;

    const std::string csv = manifest_csv(beats);
    CHECK(csv ==
          "record_id,beat_index,class,split,stratum,provenance\n"
          "101,7,N,DS1,N,real\n"
          "118,-1,S,DS1,generated,generated\n");
}
