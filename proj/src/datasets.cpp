#include "acegan/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "acegan/losses.hpp"

namespace acegan {

const std::vector<std::string>& ds1_records() {
    static const std::vector<std::string> v = {
        "101", "106", "108", "109", "112", "114", "115", "116",
        "118", "119", "122", "124", "201", "203", "205", "207",
        "208", "209", "215", "220", "223", "230"};
    return v;
}

const std::vector<std::string>& ds2_records() {
    static const std::vector<std::string> v = {
        "100", "103", "105", "111", "113", "117", "121", "123",
        "200", "202", "210", "212", "213", "214", "219", "221",
        "222", "228", "231", "232", "233", "234"};
    return v;
}

const std::vector<std::string>& excluded_records() {
    static const std::vector<std::string> v = {"102", "104", "107", "217"};
    return v;
}

Split record_split(const std::string& record_id) {
    const auto& d1 = ds1_records();
    if (std::find(d1.begin(), d1.end(), record_id) != d1.end())
        return Split::ds1;
    const auto& d2 = ds2_records();
    if (std::find(d2.begin(), d2.end(), record_id) != d2.end())
        return Split::ds2;
    return Split::other;
}

const char* split_name(Split s) {
    switch (s) {
        case Split::ds1: return "DS1";
        case Split::ds2: return "DS2";
        default: return "other";
    }
}

const char* provenance_name(Provenance p) {
    switch (p) {
        case Provenance::real: return "real";
        case Provenance::generated: return "generated";
        default: return "estimated";
    }
}

SegmentedRecord segment_record(const EcgRecord& rec, int channel) {
    SegmentedRecord out;
    out.record_id = rec.header.record_name;
    out.mv = rec.channel_mv(channel);
    out.plan = plan_segmentation(rec);
    return out;
}

std::array<int64_t, 4> CommonPool::class_counts() const {
    std::array<int64_t, 4> counts = {0, 0, 0, 0};
    for (const PoolCm& b : beats) {
        const int64_t c = static_cast<int64_t>(b.cm.label);
        if (c >= 0 && c < 4) ++counts[static_cast<size_t>(c)];
    }
    return counts;
}

CommonPool build_common_pool(const std::vector<SegmentedRecord>& ds1,
                             const std::vector<PoolCm>& selected_s) {
    CommonPool pool;
    for (const SegmentedRecord& rec : ds1) {
        if (record_split(rec.record_id) == Split::ds2)
            throw ConfigError("test record " + rec.record_id +
                              " offered to the training pool");
        const int64_t n = static_cast<int64_t>(rec.plan.centers.size());
        for (int64_t i = 0; i < n; ++i) {
            const AamiClass c = rec.plan.classes[static_cast<size_t>(i)];
            if (c != AamiClass::N && c != AamiClass::V && c != AamiClass::F)
                continue;  // S enters only through selection; Q never does
            PoolCm b;
            b.cm = coupling_factors(rec.mv, rec.plan, i, kCmSide);
            b.record_id = rec.record_id;
            b.beat_index = i;
            b.split = record_split(rec.record_id);
            pool.beats.push_back(std::move(b));
        }
    }
    for (const PoolCm& s : selected_s) {
        if (s.cm.label != AamiClass::S)
            throw DegenerateInput("selected-S pool carries a non-S beat");
        if (record_split(s.record_id) == Split::ds2)
            throw ConfigError("test record " + s.record_id +
                              " offered to the training pool");
        pool.beats.push_back(s);
    }
    const auto counts = pool.class_counts();
    const char* names = "NSVF";
    for (size_t c = 0; c < 4; ++c)
        if (counts[c] == 0)
            pool.warnings.push_back(std::string("empty ") + names[c] +
                                    " stratum");
    return pool;
}

namespace {

struct BeatRef {
    int64_t rec = 0, beat = 0;
    bool operator<(const BeatRef& o) const {
        return rec != o.rec ? rec < o.rec : beat < o.beat;
    }
};

// k distinct draws (all of them when the pool is smaller), by partial
// Fisher-Yates over a scratch copy
std::vector<BeatRef> draw_k(const std::vector<BeatRef>& pool, int64_t k,
                            Rng& rng) {
    std::vector<BeatRef> scratch = pool;
    const int64_t n = static_cast<int64_t>(scratch.size());
    const int64_t take = std::min(k, n);
    for (int64_t i = 0; i < take; ++i) {
        const int64_t j =
            i + static_cast<int64_t>(rng.below(static_cast<uint64_t>(n - i)));
        std::swap(scratch[static_cast<size_t>(i)],
                  scratch[static_cast<size_t>(j)]);
    }
    scratch.resize(static_cast<size_t>(take));
    return scratch;
}

Tensor materialize_refs(const std::vector<SegmentedRecord>& recs,
                        const std::vector<BeatRef>& refs) {
    std::vector<CouplingFactors> cms;
    cms.reserve(refs.size());
    std::vector<int64_t> idx;
    for (const BeatRef& r : refs) {
        const SegmentedRecord& rec = recs[static_cast<size_t>(r.rec)];
        cms.push_back(coupling_factors(rec.mv, rec.plan, r.beat, kCmSide));
        idx.push_back(static_cast<int64_t>(idx.size()));
    }
    return materialize_batch(cms, idx);
}

// class-head-only training step (the validity head idles)
void class_only_step(Discriminator& d, Adam& opt, const Tensor& x,
                     const std::vector<int64_t>& labels) {
    opt.zero_grad();
    Discriminator::Output out = d.forward(x, true);
    Tensor dprobs;
    cross_entropy_loss(out.probs, labels, &dprobs);
    const Tensor dval(out.validity.shape, 0.0);
    d.backward(dprobs, dval);
    opt.step();
}

}  // namespace

std::vector<PoolCm> select_representative_s(
    const std::vector<SegmentedRecord>& ds1, const SelectionConfig& cfg) {
    std::vector<std::vector<BeatRef>> s_by_rec(ds1.size()), n_by_rec(ds1.size());
    for (size_t r = 0; r < ds1.size(); ++r) {
        const auto& classes = ds1[r].plan.classes;
        for (size_t i = 0; i < classes.size(); ++i) {
            const BeatRef ref = {static_cast<int64_t>(r),
                                 static_cast<int64_t>(i)};
            if (classes[i] == AamiClass::S) s_by_rec[r].push_back(ref);
            else if (classes[i] == AamiClass::N) n_by_rec[r].push_back(ref);
        }
    }

    std::vector<BeatRef> s_pool, train_n_pool, test_n_pool;
    int64_t s_bearing = 0;
    for (size_t r = 0; r < ds1.size(); ++r) {
        if (!s_by_rec[r].empty()) {
            ++s_bearing;
            s_pool.insert(s_pool.end(), s_by_rec[r].begin(), s_by_rec[r].end());
            train_n_pool.insert(train_n_pool.end(), n_by_rec[r].begin(),
                                n_by_rec[r].end());
        } else {
            test_n_pool.insert(test_n_pool.end(), n_by_rec[r].begin(),
                               n_by_rec[r].end());
        }
    }
    if (s_bearing < 16)
        throw InsufficientSBearingRecords(
            std::to_string(s_bearing) +
            " records carry S beats; the selection scheme needs 16");
    if (test_n_pool.empty())
        throw EmptyDataset("no N beats outside the S-bearing records");

    Rng master(cfg.seed);
    std::map<BeatRef, std::pair<double, int64_t>> credit;  // sum, count

    for (int64_t rep = 0; rep < cfg.repetitions; ++rep) {
        Rng rng = master.fork(static_cast<uint64_t>(rep));

        const auto train_n = draw_k(train_n_pool, cfg.train_per_class, rng);
        const auto train_s = draw_k(s_pool, cfg.train_per_class, rng);
        const auto test_n = draw_k(test_n_pool, cfg.test_n, rng);

        std::vector<BeatRef> train = train_n;
        train.insert(train.end(), train_s.begin(), train_s.end());
        std::vector<int64_t> labels(train_n.size(), 0);
        labels.insert(labels.end(), train_s.size(), 1);

        Discriminator bin(rng, 2);
        Adam opt(bin.params(), {});

        std::vector<int64_t> order(train.size());
        for (size_t i = 0; i < order.size(); ++i)
            order[i] = static_cast<int64_t>(i);
        for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
            rng.shuffle(order);
            for (size_t at = 0; at < order.size();
                 at += static_cast<size_t>(cfg.batch)) {
                const size_t end = std::min(
                    order.size(), at + static_cast<size_t>(cfg.batch));
                std::vector<BeatRef> refs;
                std::vector<int64_t> batch_labels;
                for (size_t i = at; i < end; ++i) {
                    refs.push_back(train[static_cast<size_t>(order[i])]);
                    batch_labels.push_back(labels[static_cast<size_t>(order[i])]);
                }
                class_only_step(bin, opt, materialize_refs(ds1, refs),
                                batch_labels);
            }
        }

        int64_t hits = 0;
        for (size_t at = 0; at < test_n.size(); at += 64) {
            const size_t end = std::min(test_n.size(), at + 64);
            const std::vector<BeatRef> chunk(test_n.begin() + at,
                                             test_n.begin() + end);
            Discriminator::Output out =
                bin.forward(materialize_refs(ds1, chunk), false);
            for (size_t i = 0; i < chunk.size(); ++i)
                if (argmax_row(out.probs, static_cast<int64_t>(i)) == 0)
                    ++hits;
        }
        const double acc = static_cast<double>(hits) /
                           static_cast<double>(test_n.size());
        for (const BeatRef& s : train_s) {
            auto& entry = credit[s];
            entry.first += acc;
            entry.second += 1;
        }
    }

    struct Ranked {
        double score;
        BeatRef ref;
    };
    std::vector<Ranked> ranked;
    for (const auto& [ref, sc] : credit)
        ranked.push_back({sc.first / static_cast<double>(sc.second), ref});
    std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.ref < b.ref;
    });
    // never-drawn S beats fill leftover slots at a neutral score
    if (static_cast<int64_t>(ranked.size()) < cfg.top)
        for (const BeatRef& ref : s_pool)
            if (!credit.count(ref)) {
                ranked.push_back({0.5, ref});
                if (static_cast<int64_t>(ranked.size()) >= cfg.top) break;
            }
    if (static_cast<int64_t>(ranked.size()) > cfg.top)
        ranked.resize(static_cast<size_t>(cfg.top));

    std::vector<PoolCm> out;
    for (const Ranked& r : ranked) {
        const SegmentedRecord& rec = ds1[static_cast<size_t>(r.ref.rec)];
        PoolCm b;
        b.cm = coupling_factors(rec.mv, rec.plan, r.ref.beat, kCmSide);
        b.record_id = rec.record_id;
        b.beat_index = r.ref.beat;
        b.split = record_split(rec.record_id);
        out.push_back(std::move(b));
    }
    return out;
}

FinetuneSet assemble_finetune(const CommonPool& pool, Generator* g,
                              const std::vector<CouplingFactors>& estimated_n,
                              const FinetuneAssemblyConfig& cfg) {
    Rng rng(cfg.seed);
    FinetuneSet set;

    // part i: the selected S stratum plus random V and F draws
    for (AamiClass cls : {AamiClass::S, AamiClass::V, AamiClass::F}) {
        std::vector<int64_t> idx;
        for (size_t i = 0; i < pool.beats.size(); ++i)
            if (pool.beats[i].cm.label == cls)
                idx.push_back(static_cast<int64_t>(i));
        if (static_cast<int64_t>(idx.size()) > cfg.per_class_real) {
            rng.shuffle(idx);
            idx.resize(static_cast<size_t>(cfg.per_class_real));
            std::sort(idx.begin(), idx.end());
        }
        for (int64_t i : idx)
            set.samples.push_back(pool.beats[static_cast<size_t>(i)].cm);
        set.real_count += static_cast<int64_t>(idx.size());
    }

    // part ii: generated beats, conditioned class as label
    if (cfg.generated_per_class > 0) {
        if (!g)
            throw MissingArtifact("generator required for a fine-tune set "
                                  "with generated samples");
        for (int64_t c = 0; c < kCondClasses; ++c) {
            auto fakes = generate(*g, c, cfg.generated_per_class, rng);
            set.generated_count += static_cast<int64_t>(fakes.size());
            set.samples.insert(set.samples.end(),
                               std::make_move_iterator(fakes.begin()),
                               std::make_move_iterator(fakes.end()));
        }
    }

    // part iii: estimated patient normals, trained as N
    std::vector<int64_t> est_idx(estimated_n.size());
    for (size_t i = 0; i < est_idx.size(); ++i)
        est_idx[i] = static_cast<int64_t>(i);
    if (static_cast<int64_t>(est_idx.size()) > cfg.estimated_cap) {
        rng.shuffle(est_idx);
        est_idx.resize(static_cast<size_t>(cfg.estimated_cap));
        std::sort(est_idx.begin(), est_idx.end());
    }
    for (int64_t i : est_idx) {
        CouplingFactors cf = estimated_n[static_cast<size_t>(i)];
        cf.label = AamiClass::N;
        set.samples.push_back(std::move(cf));
    }
    set.estimated_count = static_cast<int64_t>(est_idx.size());
    return set;
}

namespace {

void add_bump(std::vector<double>& sig, double center, double amp,
              double width) {
    const int64_t lo = std::max<int64_t>(
        0, static_cast<int64_t>(center - 4.0 * width));
    const int64_t hi = std::min<int64_t>(
        static_cast<int64_t>(sig.size()) - 1,
        static_cast<int64_t>(center + 4.0 * width) + 1);
    for (int64_t i = lo; i <= hi; ++i) {
        const double d = (static_cast<double>(i) - center) / width;
        sig[static_cast<size_t>(i)] += amp * std::exp(-0.5 * d * d);
    }
}

void render_beat(std::vector<double>& sig, int64_t c, AamiClass cls,
                 double scale) {
    const double fc = static_cast<double>(c);
    switch (cls) {
        case AamiClass::N:
            add_bump(sig, fc, 1.0 * scale, 3.5);
            add_bump(sig, fc - 30, 0.15 * scale, 5.0);
            add_bump(sig, fc + 40, 0.30 * scale, 9.0);
            break;
        case AamiClass::S:
            add_bump(sig, fc, 0.9 * scale, 3.0);
            add_bump(sig, fc - 20, -0.12 * scale, 4.0);
            add_bump(sig, fc + 38, 0.30 * scale, 9.0);
            break;
        case AamiClass::V:
            add_bump(sig, fc, -1.4 * scale, 9.0);
            add_bump(sig, fc + 45, 0.45 * scale, 10.0);
            break;
        case AamiClass::F:
            add_bump(sig, fc, -0.35 * scale, 6.5);
            add_bump(sig, fc - 28, 0.08 * scale, 5.0);
            add_bump(sig, fc + 42, 0.38 * scale, 9.0);
            break;
        case AamiClass::Q:
            add_bump(sig, fc, 0.5 * scale, 12.0);
            break;
    }
}

int raw_code(AamiClass cls) {
    switch (cls) {
        case AamiClass::N: return 1;
        case AamiClass::S: return 8;
        case AamiClass::V: return 5;
        case AamiClass::F: return 6;
        default: return 13;
    }
}

}  // namespace

std::vector<EcgRecord> synth_cohort(const SynthConfig& cfg) {
    std::vector<EcgRecord> out;
    Rng master(cfg.seed);
    for (size_t r = 0; r < cfg.records.size(); ++r) {
        const SynthRecordSpec& spec = cfg.records[static_cast<size_t>(r)];
        Rng rng = master.fork(static_cast<uint64_t>(r));

        std::vector<AamiClass> classes(static_cast<size_t>(spec.beats));
        for (auto& c : classes) {
            const double u = rng.uniform();
            double acc = 0.0;
            c = AamiClass::Q;
            for (int k = 0; k < 5; ++k) {
                acc += spec.mix[static_cast<size_t>(k)];
                if (u < acc) {
                    c = static_cast<AamiClass>(k);
                    break;
                }
            }
        }

        std::vector<int64_t> centers(classes.size());
        int64_t at = 200;
        for (size_t i = 0; i < classes.size(); ++i) {
            int64_t step = cfg.period;
            if (classes[i] == AamiClass::S) step -= cfg.period / 5;  // premature
            step += static_cast<int64_t>(
                std::llround(rng.normal() * cfg.noise * 20.0));
            if (i > 0) at = std::max(at + std::max<int64_t>(step, 30),
                                     centers[i - 1] + 30);
            centers[i] = at;
        }

        const int64_t num_samples = centers.back() + 200;
        std::vector<double> mv(static_cast<size_t>(num_samples), 0.0);
        for (size_t i = 0; i < classes.size(); ++i) {
            const double scale = 1.0 + 3.0 * cfg.noise * rng.normal();
            render_beat(mv, centers[i], classes[i], scale);
        }
        if (cfg.noise > 0.0)
            for (double& v : mv) v += cfg.noise * rng.normal();

        EcgRecord rec;
        rec.header.record_name = spec.name;
        rec.header.num_signals = 1;
        rec.header.sampling_rate_hz = 360.0;
        rec.header.num_samples = num_samples;
        SignalSpec sig;
        sig.filename = spec.name + ".dat";
        sig.description = "synthetic MLII";
        rec.header.signals.push_back(sig);

        rec.samples.resize(1);
        rec.samples[0].resize(static_cast<size_t>(num_samples));
        for (int64_t i = 0; i < num_samples; ++i) {
            const long v = std::lround(mv[static_cast<size_t>(i)] * sig.gain) +
                           sig.adc_zero;
            rec.samples[0][static_cast<size_t>(i)] = static_cast<int>(
                std::min<long>(2047, std::max<long>(-2048, v)));
        }
        rec.header.signals[0].initial_value = rec.samples[0][0];

        for (size_t i = 0; i < classes.size(); ++i) {
            Annotation a;
            a.sample_index = centers[i];
            a.beat_class = classes[i];
            a.raw_code = raw_code(classes[i]);
            rec.annotations.push_back(a);
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::string manifest_csv(const std::vector<PoolCm>& beats) {
    std::string out = "record_id,beat_index,class,split,stratum,provenance\n";
    for (const PoolCm& b : beats) {
        out += b.record_id + "," + std::to_string(b.beat_index) + "," +
               aami_name(b.cm.label) + "," + split_name(b.split) + "," +
               (b.provenance == Provenance::real ? aami_name(b.cm.label)
                                                 : provenance_name(b.provenance)) +
               "," + provenance_name(b.provenance) + "\n";
    }
    return out;
}

}  // namespace acegan
