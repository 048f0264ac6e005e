// Pipeline driver. Every stage reads hash-stamped artifacts from the stages
// before it and refuses anything produced under a different configuration,
// so a full run is a pure function of (input files, config, seed).
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "acegan/artifacts.hpp"
#include "acegan/beatgrid.hpp"
#include "acegan/config.hpp"
#include "acegan/datasets.hpp"
#include "acegan/errors.hpp"
#include "acegan/evalkit.hpp"
#include "acegan/gan.hpp"
#include "acegan/normpool.hpp"
#include "acegan/wfdb.hpp"

using namespace acegan;
namespace fs = std::filesystem;

namespace {

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64 "", v);
    return buf;
}

// One pipeline seed, one independent stream per named stage.
uint64_t stage_seed(const PipelineConfig& cfg, const std::string& tag) {
    return fnv1a64(tag) ^ (cfg.seed * 0x9e3779b97f4a7c15ull);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    size_t at = 0;
    while (true) {
        const size_t c = line.find(',', at);
        if (c == std::string::npos) {
            out.push_back(line.substr(at));
            return out;
        }
        out.push_back(line.substr(at, c - at));
        at = c + 1;
    }
}

int64_t field_i64(const std::string& s, const fs::path& from) {
    try {
        size_t used = 0;
        const int64_t v = std::stoll(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw MissingArtifact("malformed number '" + s + "' in " + from.string());
}

// Text artifacts carry the config hash on their first line.
void write_artifact(const fs::path& path, uint64_t hash,
                    const std::string& body) {
    fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw MissingArtifact("cannot write " + path.string());
    const std::string text = "# config_hash=" + hex64(hash) + "\n" + body;
    f.write(text.data(), std::streamsize(text.size()));
    if (!f) throw MissingArtifact("short write on " + path.string());
}

// Data lines of a text artifact; comment lines vanish, the hash must match.
std::vector<std::string> read_artifact(const fs::path& path, uint64_t hash) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw MissingArtifact("missing artifact " + path.string() +
                              "; run the producing stage first");
    std::string first;
    std::getline(f, first);
    if (!first.empty() && first.back() == '\r') first.pop_back();
    if (first != "# config_hash=" + hex64(hash))
        throw MissingArtifact("artifact " + path.string() +
                              " was produced under a different configuration");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        lines.push_back(line);
    }
    return lines;
}

AamiClass aami_from_name(const std::string& s, const fs::path& from) {
    for (int c = 0; c < 5; ++c)
        if (s == aami_name(static_cast<AamiClass>(c)))
            return static_cast<AamiClass>(c);
    throw MissingArtifact("unknown beat class '" + s + "' in " + from.string());
}

int64_t eval_label_from_name(const std::string& s, const fs::path& from) {
    if (s == "generated") return kGeneratedLabel;
    return static_cast<int64_t>(aami_from_name(s, from));
}

// ------------------------------------------------------------------ context

struct Stage {
    PipelineConfig cfg;
    uint64_t hash = 0;
    fs::path out;
    fs::path data;

    fs::path segments(const std::string& r) const {
        return out / "segments" / (r + ".csv");
    }
    fs::path normals(const std::string& r) const {
        return out / "normals" / (r + ".csv");
    }
    fs::path classifier(const std::string& r) const {
        return out / "classifiers" / (r + ".ckpt");
    }
    fs::path predictions(const std::string& r) const {
        return out / "predictions" / (r + ".csv");
    }
    fs::path features(const std::string& r) const {
        return out / "features" / (r + ".csv");
    }
    fs::path gan_ckpt() const { return out / "gan.ckpt"; }
    fs::path selected_s() const { return out / "selected_s.csv"; }
    fs::path pool_manifest() const { return out / "pool.csv"; }
};

std::vector<std::string> train_roster(const PipelineConfig& cfg) {
    return cfg.train_records.empty() ? ds1_records() : cfg.train_records;
}

std::vector<std::string> test_roster(const PipelineConfig& cfg) {
    return cfg.test_records.empty() ? ds2_records() : cfg.test_records;
}

std::vector<std::string> both_rosters(const PipelineConfig& cfg) {
    std::vector<std::string> all = train_roster(cfg);
    for (const std::string& r : test_roster(cfg)) all.push_back(r);
    return all;
}

EcgRecord load_record(const Stage& st, const std::string& name) {
    if (st.data.empty())
        throw ConfigError(
            "data_dir is not set (config key, or ACEGAN_DATA_DIR)");
    return read_record(st.data, name);
}

void write_segments_artifact(const Stage& st, const SegmentedRecord& sr) {
    std::string body = "record," + sr.record_id + "," +
                       std::to_string(sr.plan.L) + "\n";
    body += "beat_index,center,class\n";
    for (size_t i = 0; i < sr.plan.centers.size(); ++i)
        body += std::to_string(i) + "," + std::to_string(sr.plan.centers[i]) +
                "," + aami_name(sr.plan.classes[i]) + "\n";
    write_artifact(st.segments(sr.record_id), st.hash, body);
}

SegmentationPlan read_segments_artifact(const Stage& st,
                                        const std::string& rec) {
    const fs::path path = st.segments(rec);
    const std::vector<std::string> lines = read_artifact(path, st.hash);
    if (lines.size() < 2 || split_fields(lines[0]).size() != 3)
        throw MissingArtifact("malformed segmentation artifact " +
                              path.string());
    const std::vector<std::string> head = split_fields(lines[0]);
    SegmentationPlan plan;
    plan.record_id = head[1];
    plan.L = field_i64(head[2], path);
    for (size_t i = 2; i < lines.size(); ++i) {  // lines[1] is the header
        const std::vector<std::string> f = split_fields(lines[i]);
        if (f.size() != 3)
            throw MissingArtifact("malformed row in " + path.string());
        plan.centers.push_back(field_i64(f[1], path));
        plan.classes.push_back(aami_from_name(f[2], path));
    }
    return plan;
}

// Segmentation plan from the artifact, waveform from the source data.
SegmentedRecord segmented(const Stage& st, const std::string& name) {
    SegmentedRecord sr;
    sr.record_id = name;
    sr.plan = read_segments_artifact(st, name);
    sr.mv = load_record(st, name).channel_mv(st.cfg.channel_index);
    return sr;
}

// The common pool, rebuilt from its manifest (beats referenced by record and
// index; factors recomputed from the segmented data and cross-checked).
CommonPool materialize_pool(const Stage& st) {
    const fs::path path = st.pool_manifest();
    const std::vector<std::string> lines = read_artifact(path, st.hash);
    std::map<std::string, SegmentedRecord> cache;
    CommonPool pool;
    for (size_t i = 1; i < lines.size(); ++i) {  // lines[0] is the header
        const std::vector<std::string> f = split_fields(lines[i]);
        if (f.size() != 6)
            throw MissingArtifact("malformed row in " + path.string());
        PoolCm b;
        b.record_id = f[0];
        b.beat_index = field_i64(f[1], path);
        b.split = record_split(b.record_id);
        b.provenance = Provenance::real;
        if (f[5] != "real")
            throw MissingArtifact("pool manifest " + path.string() +
                                  " lists a non-real beat");
        auto it = cache.find(b.record_id);
        if (it == cache.end())
            it = cache.emplace(b.record_id, segmented(st, b.record_id)).first;
        b.cm = coupling_factors(it->second.mv, it->second.plan, b.beat_index,
                                kCmSide);
        if (aami_name(b.cm.label) != f[2])
            throw MissingArtifact("pool manifest " + path.string() +
                                  " disagrees with the segmented data at " +
                                  b.record_id + ":" + f[1]);
        pool.beats.push_back(std::move(b));
    }
    return pool;
}

std::string pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

// ------------------------------------------------------------------- stages

void cmd_ingest(const Stage& st) {
    std::string body = "record,split,signals,rate,samples,beats,n,s,v,f,q\n";
    int64_t total = 0;
    for (const std::string& name : both_rosters(st.cfg)) {
        const EcgRecord rec = load_record(st, name);
        int64_t counts[5] = {0, 0, 0, 0, 0};
        for (const Annotation& a : rec.annotations)
            ++counts[static_cast<int>(a.beat_class)];
        body += name + "," + split_name(record_split(name)) + "," +
                std::to_string(rec.header.num_signals) + "," +
                std::to_string(rec.header.sampling_rate_hz) + "," +
                std::to_string(rec.header.num_samples) + "," +
                std::to_string(rec.annotations.size());
        for (int64_t c : counts) body += "," + std::to_string(c);
        body += "\n";
        ++total;
    }
    write_artifact(st.out / "ingest.csv", st.hash, body);
    std::printf("ingested %lld records from %s\n",
                static_cast<long long>(total), st.data.string().c_str());
}

void cmd_segment(const Stage& st) {
    for (const std::string& name : both_rosters(st.cfg)) {
        const EcgRecord rec = load_record(st, name);
        const SegmentedRecord sr = segment_record(rec, st.cfg.channel_index);
        write_segments_artifact(st, sr);
        std::printf("segmented %s: %zu beats, L=%lld\n", name.c_str(),
                    sr.plan.centers.size(),
                    static_cast<long long>(sr.plan.L));
    }
}

void cmd_select_s(const Stage& st) {
    std::vector<SegmentedRecord> segs;
    for (const std::string& name : train_roster(st.cfg))
        segs.push_back(segmented(st, name));
    SelectionConfig sel;
    sel.repetitions = st.cfg.selection_repetitions;
    sel.train_per_class = st.cfg.selection_train_per_class;
    sel.test_n = st.cfg.selection_test_n;
    sel.epochs = st.cfg.selection_epochs;
    sel.batch = st.cfg.selection_batch;
    sel.top = st.cfg.selection_top;
    sel.seed = stage_seed(st.cfg, "select-s");
    const std::vector<PoolCm> picked = select_representative_s(segs, sel);
    std::string body = "record_id,beat_index\n";
    for (const PoolCm& b : picked)
        body += b.record_id + "," + std::to_string(b.beat_index) + "\n";
    write_artifact(st.selected_s(), st.hash, body);
    std::printf("selected %zu representative S beats\n", picked.size());
}

void cmd_build_pool(const Stage& st) {
    std::vector<SegmentedRecord> segs;
    std::map<std::string, const SegmentedRecord*> by_id;
    for (const std::string& name : train_roster(st.cfg))
        segs.push_back(segmented(st, name));
    for (const SegmentedRecord& sr : segs) by_id[sr.record_id] = &sr;

    const fs::path spath = st.selected_s();
    const std::vector<std::string> lines = read_artifact(spath, st.hash);
    std::vector<PoolCm> selected;
    for (size_t i = 1; i < lines.size(); ++i) {
        const std::vector<std::string> f = split_fields(lines[i]);
        if (f.size() != 2)
            throw MissingArtifact("malformed row in " + spath.string());
        auto it = by_id.find(f[0]);
        if (it == by_id.end())
            throw MissingArtifact("selected S beat from " + f[0] +
                                  " which is not in the training roster");
        PoolCm b;
        b.record_id = f[0];
        b.beat_index = field_i64(f[1], spath);
        b.cm = coupling_factors(it->second->mv, it->second->plan,
                                b.beat_index, kCmSide);
        b.split = record_split(b.record_id);
        b.provenance = Provenance::real;
        selected.push_back(std::move(b));
    }

    const CommonPool pool = build_common_pool(segs, selected);
    for (const std::string& w : pool.warnings)
        std::fprintf(stderr, "warning: %s\n", w.c_str());
    write_artifact(st.pool_manifest(), st.hash, manifest_csv(pool.beats));
    const auto counts = pool.class_counts();
    std::printf("pool: %lld N, %lld S, %lld V, %lld F\n",
                static_cast<long long>(counts[0]),
                static_cast<long long>(counts[1]),
                static_cast<long long>(counts[2]),
                static_cast<long long>(counts[3]));
}

void cmd_train_gan(const Stage& st) {
    const CommonPool pool = materialize_pool(st);
    std::vector<CouplingFactors> train;
    train.reserve(pool.beats.size());
    for (const PoolCm& b : pool.beats) train.push_back(b.cm);

    Rng init(stage_seed(st.cfg, "gan-init"));
    Generator g(init);
    Discriminator d(init);
    GanTrainConfig gcfg;
    gcfg.iterations = st.cfg.gan_iterations;
    gcfg.batch = st.cfg.gan_batch;
    gcfg.telemetry_every = st.cfg.telemetry_every;
    gcfg.fd_samples_per_class = st.cfg.fd_samples_per_class;
    gcfg.seed = stage_seed(st.cfg, "gan-train");
    const GanTelemetry telem = train_gan(g, d, train, gcfg);

    std::vector<NamedArray> arrays = generator_state(g);
    const std::vector<NamedArray> darrays = discriminator_state(d);
    arrays.insert(arrays.end(), darrays.begin(), darrays.end());
    write_checkpoint(st.gan_ckpt().string(), st.hash, arrays);
    write_artifact(st.out / "telemetry.csv", st.hash, telem.csv());

    if (!telem.rows.empty()) {
        const TelemetryRow& last = telem.rows.back();
        std::printf("trained %lld iterations: d_loss %.4f, g_loss %.4f, "
                    "fd %.4f\n",
                    static_cast<long long>(gcfg.iterations), last.d_loss,
                    last.g_loss, last.fd);
    } else {
        std::printf("trained %lld iterations\n",
                    static_cast<long long>(gcfg.iterations));
    }
}

void cmd_generate(const Stage& st, int64_t only_class, int64_t count) {
    const std::vector<NamedArray> arrays =
        read_checkpoint(st.gan_ckpt().string(), st.hash);
    Rng ctor(1);
    Generator g(ctor);
    load_generator(g, arrays);
    Rng rng(stage_seed(st.cfg, "generate"));

    std::string body = "class,sample,side";
    for (int64_t i = 0; i < kCmSide; ++i) body += ",f" + std::to_string(i);
    body += "\n";
    char num[32];
    int64_t emitted = 0;
    for (int64_t c = 0; c < kCondClasses; ++c) {
        if (only_class >= 0 && c != only_class) continue;
        const std::vector<CouplingFactors> batch = generate(g, c, count, rng);
        for (size_t i = 0; i < batch.size(); ++i) {
            for (const char* side : {"u", "v"}) {
                body += std::string(aami_name(static_cast<AamiClass>(c))) +
                        "," + std::to_string(i) + "," + side;
                const std::vector<double>& vec =
                    side[0] == 'u' ? batch[i].u : batch[i].v;
                for (double x : vec) {
                    std::snprintf(num, sizeof num, ",%.17g", x);
                    body += num;
                }
                body += "\n";
            }
            ++emitted;
        }
    }
    write_artifact(st.out / "generated.csv", st.hash, body);
    std::printf("generated %lld coupling matrices\n",
                static_cast<long long>(emitted));
}

void cmd_estimate_normals(const Stage& st,
                          const std::vector<std::string>& records) {
    EstimatorConfig ecfg;
    ecfg.base_threshold = st.cfg.estimator_base_threshold;
    ecfg.max_pool = st.cfg.estimator_max_pool;
    for (const std::string& name : records) {
        const SegmentedRecord sr = segmented(st, name);
        const NormalPool pool =
            estimate_normals(sr.mv, sr.plan.centers, sr.plan.L, ecfg);
        int64_t truth_n = 0;
        for (const PoolEntry& e : pool.entries)
            if (sr.plan.classes[static_cast<size_t>(e.beat_index)] ==
                AamiClass::N)
                ++truth_n;
        std::string body;
        if (!pool.entries.empty())
            body += "# pool=" + std::to_string(pool.entries.size()) +
                    " truth_n=" + std::to_string(truth_n) + " purity=" +
                    pct(static_cast<double>(truth_n) /
                        static_cast<double>(pool.entries.size())) +
                    "\n";
        body += "beat_index,admitted_epoch\n";
        for (const PoolEntry& e : pool.entries)
            body += std::to_string(e.beat_index) + "," +
                    std::to_string(e.admitted_epoch) + "\n";
        write_artifact(st.normals(name), st.hash, body);
        if (pool.entries.empty())
            std::printf("%s: no normal beats estimated\n", name.c_str());
        else
            std::printf("%s: estimated %zu normal beats, purity %s\n",
                        name.c_str(), pool.entries.size(),
                        pct(static_cast<double>(truth_n) /
                            static_cast<double>(pool.entries.size()))
                            .c_str());
    }
}

std::vector<CouplingFactors> estimated_factors(const Stage& st,
                                               const SegmentedRecord& sr) {
    const fs::path path = st.normals(sr.record_id);
    const std::vector<std::string> lines = read_artifact(path, st.hash);
    std::vector<CouplingFactors> out;
    for (size_t i = 1; i < lines.size(); ++i) {
        const std::vector<std::string> f = split_fields(lines[i]);
        if (f.size() != 2)
            throw MissingArtifact("malformed row in " + path.string());
        out.push_back(coupling_factors(sr.mv, sr.plan, field_i64(f[0], path),
                                       kCmSide));
    }
    return out;
}

void cmd_finetune(const Stage& st, const std::vector<std::string>& records) {
    const CommonPool pool = materialize_pool(st);
    const std::vector<NamedArray> gan =
        read_checkpoint(st.gan_ckpt().string(), st.hash);
    Rng gctor(1);
    Generator g(gctor);
    load_generator(g, gan);

    for (const std::string& name : records) {
        const SegmentedRecord sr = segmented(st, name);
        const std::vector<CouplingFactors> est = estimated_factors(st, sr);

        FinetuneAssemblyConfig acfg;
        acfg.per_class_real = st.cfg.per_class_real;
        acfg.generated_per_class = st.cfg.generated_per_class;
        acfg.estimated_cap = st.cfg.estimated_cap;
        acfg.seed = stage_seed(st.cfg, "assemble:" + name);
        const FinetuneSet set = assemble_finetune(pool, &g, est, acfg);

        Rng dctor(stage_seed(st.cfg, "finetune-init:" + name));
        Discriminator d(dctor);
        load_discriminator(d, gan);
        FinetuneConfig fcfg;
        fcfg.target_acc = st.cfg.finetune_target_acc;
        fcfg.plateau = st.cfg.finetune_plateau;
        fcfg.window = st.cfg.finetune_window;
        fcfg.max_epochs = st.cfg.finetune_max_epochs;
        fcfg.batch = st.cfg.finetune_batch;
        fcfg.seed = stage_seed(st.cfg, "finetune:" + name);
        const FinetuneStats stats = finetune(d, set.samples, fcfg);

        write_checkpoint(st.classifier(name).string(), st.hash,
                         discriminator_state(d));
        std::printf("%s: fine-tuned %lld epochs to %.4f on %lld real + "
                    "%lld generated + %lld estimated\n",
                    name.c_str(), static_cast<long long>(stats.epochs),
                    stats.final_acc, static_cast<long long>(set.real_count),
                    static_cast<long long>(set.generated_count),
                    static_cast<long long>(set.estimated_count));
    }
}

void cmd_classify(const Stage& st, const std::vector<std::string>& records,
                  bool with_features) {
    for (const std::string& name : records) {
        const std::vector<NamedArray> arrays =
            read_checkpoint(st.classifier(name).string(), st.hash);
        Rng ctor(1);
        Discriminator d(ctor);
        load_discriminator(d, arrays);

        const SegmentedRecord sr = segmented(st, name);
        const int64_t n = static_cast<int64_t>(sr.plan.centers.size());
        std::vector<CouplingFactors> beats;
        beats.reserve(static_cast<size_t>(n));
        for (int64_t i = 0; i < n; ++i)
            beats.push_back(coupling_factors(sr.mv, sr.plan, i, kCmSide));

        std::string body = "beat_index,truth,predicted\n";
        std::string feat;
        if (with_features) {
            feat = "beat_index,truth";
            for (int64_t i = 0; i < kFeatureDim; ++i)
                feat += ",f" + std::to_string(i);
            feat += "\n";
        }
        char num[32];
        int64_t hits = 0;
        const int64_t chunk = 64;
        for (int64_t at = 0; at < n; at += chunk) {
            std::vector<int64_t> idx;
            for (int64_t i = at; i < std::min(at + chunk, n); ++i)
                idx.push_back(i);
            const Tensor x = materialize_batch(beats, idx);
            const std::vector<Classification> preds = classify(d, x);
            for (size_t k = 0; k < idx.size(); ++k) {
                const int64_t i = idx[k];
                const AamiClass truth =
                    sr.plan.classes[static_cast<size_t>(i)];
                const int64_t label = preds[k].label;
                const std::string pred_name =
                    label == kFakeClass
                        ? "generated"
                        : aami_name(static_cast<AamiClass>(label));
                body += std::to_string(i) + "," + aami_name(truth) + "," +
                        pred_name + "\n";
                if (label == static_cast<int64_t>(truth)) ++hits;
                if (with_features) {
                    feat += std::to_string(i) + "," + aami_name(truth);
                    for (double v : preds[k].features) {
                        std::snprintf(num, sizeof num, ",%.17g", v);
                        feat += num;
                    }
                    feat += "\n";
                }
            }
        }
        write_artifact(st.predictions(name), st.hash, body);
        if (with_features) write_artifact(st.features(name), st.hash, feat);
        std::printf("%s: classified %lld beats, accuracy %s\n", name.c_str(),
                    static_cast<long long>(n),
                    n ? pct(static_cast<double>(hits) /
                            static_cast<double>(n))
                            .c_str()
                      : "-");
    }
}

void cmd_evaluate(const Stage& st) {
    std::vector<RecordOutcome> outcomes;
    for (const std::string& name : test_roster(st.cfg)) {
        const fs::path path = st.predictions(name);
        const std::vector<std::string> lines = read_artifact(path, st.hash);
        RecordOutcome oc;
        oc.record_id = name;
        for (size_t i = 1; i < lines.size(); ++i) {
            const std::vector<std::string> f = split_fields(lines[i]);
            if (f.size() != 3)
                throw MissingArtifact("malformed row in " + path.string());
            oc.truth.push_back(eval_label_from_name(f[1], path));
            oc.predicted.push_back(eval_label_from_name(f[2], path));
        }
        outcomes.push_back(std::move(oc));
    }
    const EvalReport rep = evaluate_records(outcomes);
    write_artifact(st.out / "report.csv", st.hash, report_csv(rep));
    write_artifact(st.out / "report.txt", st.hash, report_table(rep));

    // pooled features, when classify stashed them, feed the 2-pc projection
    std::vector<std::vector<double>> features;
    std::vector<int64_t> labels;
    for (const std::string& name : test_roster(st.cfg)) {
        const fs::path path = st.features(name);
        if (!fs::exists(path)) continue;
        for (size_t i = 1; const std::string& line : read_artifact(path, st.hash)) {
            if (i++ == 1) continue;  // header
            const std::vector<std::string> f = split_fields(line);
            if (f.size() != size_t(2 + kFeatureDim))
                throw MissingArtifact("malformed row in " + path.string());
            labels.push_back(eval_label_from_name(f[1], path));
            std::vector<double> row;
            for (size_t k = 2; k < f.size(); ++k)
                row.push_back(std::stod(f[k]));
            features.push_back(std::move(row));
        }
    }
    if (features.size() >= 3) {
        const PcaProjection p = pca2(features);
        write_artifact(st.out / "pca.csv", st.hash, pca_csv(p, labels));
    }

    std::fputs(report_table(rep).c_str(), stdout);
    if (rep.pooled.accuracy)
        std::printf("overall accuracy %s\n", pct(*rep.pooled.accuracy).c_str());
}

SynthConfig synth_plan(const Stage& st) {
    SynthConfig sc;
    sc.period = st.cfg.synth_period;
    sc.noise = st.cfg.synth_noise;
    sc.seed = stage_seed(st.cfg, "synth");
    char name[32];
    for (int64_t i = 0; i < st.cfg.synth_train_records; ++i) {
        std::snprintf(name, sizeof name, "t%02lld",
                      static_cast<long long>(i));
        SynthRecordSpec spec;
        spec.name = name;
        spec.beats = st.cfg.synth_beats;
        // every fifth training record is S-free so representative-S
        // selection has somewhere to draw its held-out N beats
        spec.mix = i % 5 == 0
                       ? std::array<double, 5>{0.88, 0.0, 0.07, 0.05, 0.0}
                       : std::array<double, 5>{0.79, 0.08, 0.07, 0.05, 0.01};
        sc.records.push_back(spec);
    }
    for (int64_t i = 0; i < st.cfg.synth_test_records; ++i) {
        std::snprintf(name, sizeof name, "e%02lld",
                      static_cast<long long>(i));
        SynthRecordSpec spec;
        spec.name = name;
        spec.beats = st.cfg.synth_beats;
        spec.mix = {0.85, 0.06, 0.05, 0.04, 0.0};
        sc.records.push_back(spec);
    }
    return sc;
}

void cmd_synth(const Stage& st) {
    if (st.data.empty())
        throw ConfigError("synth writes the cohort into data_dir; set it "
                          "(config key, or ACEGAN_DATA_DIR)");
    const SynthConfig sc = synth_plan(st);
    const std::vector<EcgRecord> cohort = synth_cohort(sc);
    fs::create_directories(st.data);
    std::string body = "record,beats,n,s,v,f,q\n";
    for (const EcgRecord& rec : cohort) {
        write_record(rec, st.data);
        int64_t counts[5] = {0, 0, 0, 0, 0};
        for (const Annotation& a : rec.annotations)
            ++counts[static_cast<int>(a.beat_class)];
        body += rec.header.record_name + "," +
                std::to_string(rec.annotations.size());
        for (int64_t c : counts) body += "," + std::to_string(c);
        body += "\n";
    }
    write_artifact(st.out / "synth_manifest.csv", st.hash, body);
    std::printf("wrote %zu synthetic records to %s\n", cohort.size(),
                st.data.string().c_str());
    std::string trains, tests;
    for (const EcgRecord& rec : cohort) {
        std::string& dst =
            rec.header.record_name[0] == 't' ? trains : tests;
        if (!dst.empty()) dst += ",";
        dst += rec.header.record_name;
    }
    std::printf("config rosters for this cohort:\n"
                "  train_records = %s\n  test_records = %s\n",
                trains.c_str(), tests.c_str());
}

void cmd_run_all(const Stage& st) {
    std::puts("== ingest ==");
    cmd_ingest(st);
    std::puts("== segment ==");
    cmd_segment(st);
    std::puts("== select-s ==");
    cmd_select_s(st);
    std::puts("== build-pool ==");
    cmd_build_pool(st);
    std::puts("== train-gan ==");
    cmd_train_gan(st);
    for (const std::string& name : test_roster(st.cfg)) {
        std::printf("== subject %s ==\n", name.c_str());
        cmd_estimate_normals(st, {name});
        cmd_finetune(st, {name});
        cmd_classify(st, {name}, false);
    }
    std::puts("== evaluate ==");
    cmd_evaluate(st);
}

const char* error_kind(const Error& e) {
    if (dynamic_cast<const MalformedHeader*>(&e)) return "MalformedHeader";
    if (dynamic_cast<const UnsupportedFormat*>(&e)) return "UnsupportedFormat";
    if (dynamic_cast<const TruncatedSignal*>(&e)) return "TruncatedSignal";
    if (dynamic_cast<const TruncatedAnnotations*>(&e))
        return "TruncatedAnnotations";
    if (dynamic_cast<const UnknownCode*>(&e)) return "UnknownCode";
    if (dynamic_cast<const NonBeatCode*>(&e)) return "NonBeatCode";
    if (dynamic_cast<const SampleOutOfRange*>(&e)) return "SampleOutOfRange";
    if (dynamic_cast<const MalformedRecord*>(&e)) return "MalformedRecord";
    if (dynamic_cast<const TooFewBeats*>(&e)) return "TooFewBeats";
    if (dynamic_cast<const SegmentTooShort*>(&e)) return "SegmentTooShort";
    if (dynamic_cast<const DegenerateInput*>(&e)) return "DegenerateInput";
    if (dynamic_cast<const ShapeMismatch*>(&e)) return "ShapeMismatch";
    if (dynamic_cast<const NoForwardCache*>(&e)) return "NoForwardCache";
    if (dynamic_cast<const MissingClass*>(&e)) return "MissingClass";
    if (dynamic_cast<const EmptyDataset*>(&e)) return "EmptyDataset";
    if (dynamic_cast<const InsufficientSBearingRecords*>(&e))
        return "InsufficientSBearingRecords";
    if (dynamic_cast<const LengthMismatch*>(&e)) return "LengthMismatch";
    if (dynamic_cast<const InsufficientSamples*>(&e))
        return "InsufficientSamples";
    if (dynamic_cast<const ConfigError*>(&e)) return "ConfigError";
    if (dynamic_cast<const MissingArtifact*>(&e)) return "MissingArtifact";
    return "Error";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ACE-GAN arrhythmia classification pipeline"};
    app.require_subcommand(1);

    std::string config_path, out_override, data_override;
    uint64_t seed_override = 0;
    bool seed_set = false;
    app.add_option("--config", config_path, "pipeline config file");
    app.add_option("--seed", seed_override, "override the pipeline seed")
        ->each([&](const std::string&) { seed_set = true; });
    app.add_option("--out", out_override, "override output_dir");
    app.add_option("--data", data_override, "override data_dir");

    std::vector<std::string> only_records;
    int64_t gen_class = -1, gen_count = -1;
    bool with_features = false;

    CLI::App* ingest = app.add_subcommand("ingest", "read and tally records");
    CLI::App* segment = app.add_subcommand("segment", "plan beat segments");
    CLI::App* estimate =
        app.add_subcommand("estimate-normals", "unsupervised N-beat pools");
    estimate->add_option("--record", only_records, "restrict to records");
    CLI::App* select =
        app.add_subcommand("select-s", "rank representative S beats");
    CLI::App* buildp =
        app.add_subcommand("build-pool", "assemble the training pool");
    CLI::App* traing =
        app.add_subcommand("train-gan", "adversarial training");
    CLI::App* gen = app.add_subcommand("generate", "sample coupling matrices");
    gen->add_option("--class", gen_class, "condition on one class (0..3)");
    gen->add_option("--count", gen_count, "samples per class");
    CLI::App* ftune =
        app.add_subcommand("finetune", "per-subject classifier training");
    ftune->add_option("--record", only_records, "restrict to records");
    CLI::App* cls = app.add_subcommand("classify", "label every beat");
    cls->add_option("--record", only_records, "restrict to records");
    cls->add_flag("--features", with_features, "stash 150-dim features");
    CLI::App* eval = app.add_subcommand("evaluate", "per-record metrics");
    CLI::App* synth =
        app.add_subcommand("synth", "write a synthetic cohort to data_dir");
    CLI::App* runall =
        app.add_subcommand("run-all", "the whole pipeline in order");

    CLI11_PARSE(app, argc, argv);

    try {
        Stage st;
        st.cfg = config_path.empty() ? PipelineConfig{}
                                     : load_config(config_path);
        if (seed_set) st.cfg.seed = seed_override;
        if (!out_override.empty()) st.cfg.output_dir = out_override;
        if (!data_override.empty()) st.cfg.data_dir = data_override;
        if (st.cfg.data_dir.empty())
            if (const char* env = std::getenv("ACEGAN_DATA_DIR"))
                st.cfg.data_dir = env;
        st.hash = config_hash(st.cfg);
        st.out = st.cfg.output_dir;
        st.data = st.cfg.data_dir;
        fs::create_directories(st.out);

        std::vector<std::string> records =
            only_records.empty() ? test_roster(st.cfg) : only_records;

        if (ingest->parsed()) cmd_ingest(st);
        if (segment->parsed()) cmd_segment(st);
        if (estimate->parsed()) cmd_estimate_normals(st, records);
        if (select->parsed()) cmd_select_s(st);
        if (buildp->parsed()) cmd_build_pool(st);
        if (traing->parsed()) cmd_train_gan(st);
        if (gen->parsed())
            cmd_generate(st, gen_class,
                         gen_count >= 0 ? gen_count
                                        : st.cfg.generated_per_class);
        if (ftune->parsed()) cmd_finetune(st, records);
        if (cls->parsed()) cmd_classify(st, records, with_features);
        if (eval->parsed()) cmd_evaluate(st);
        if (synth->parsed()) cmd_synth(st);
        if (runall->parsed()) cmd_run_all(st);
    } catch (const Error& e) {
        std::fprintf(stderr, "error[%s]: %s\n", error_kind(e), e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error[Internal]: %s\n", e.what());
        return 1;
    }
    return 0;
}
