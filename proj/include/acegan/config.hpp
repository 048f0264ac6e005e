#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace acegan {

// One flat key = value file drives every pipeline stage, so an entire run is
// reproducible from (data files, config, seed).
struct PipelineConfig {
    std::string data_dir;
    std::string output_dir = "out";
    uint64_t seed = 1;
    int channel_index = 0;
    int64_t m = 73;  // coupling-matrix side; the classifier input is fixed

    // adversarial training
    int64_t gan_iterations = 10000;
    int64_t gan_batch = 128;
    int64_t telemetry_every = 100;
    int64_t fd_samples_per_class = 400;

    // per-subject fine-tuning
    double finetune_target_acc = 0.99;
    double finetune_plateau = 0.01;
    int64_t finetune_window = 10;
    int64_t finetune_max_epochs = 500;
    int64_t finetune_batch = 128;

    // normal-beat estimator
    double estimator_base_threshold = 0.9;
    int64_t estimator_max_pool = 400;

    // representative-S selection
    int64_t selection_repetitions = 200;
    int64_t selection_train_per_class = 75;
    int64_t selection_test_n = 100;
    int64_t selection_epochs = 30;
    int64_t selection_batch = 50;
    int64_t selection_top = 400;

    // fine-tune set assembly
    int64_t per_class_real = 400;
    int64_t generated_per_class = 400;  // 0 disables generation (ablation)
    int64_t estimated_cap = 400;

    // record rosters; empty means the conventional MIT-BIH split
    std::vector<std::string> train_records;
    std::vector<std::string> test_records;

    // synthetic cohort
    int64_t synth_train_records = 20;
    int64_t synth_test_records = 4;
    int64_t synth_beats = 500;
    int64_t synth_period = 130;
    double synth_noise = 0.01;
};

// `key = value` lines; '#' starts a comment; unknown keys are an error.
PipelineConfig parse_config_text(const std::string& text);
PipelineConfig load_config(const std::string& path);

// canonical text: every key, fixed order, normalized values
std::string render_config(const PipelineConfig& cfg);
// FNV-1a of the canonical text minus the two path keys (where data lives
// does not change what a run computes); stamped into every artifact
uint64_t config_hash(const PipelineConfig& cfg);

}  // namespace acegan
