#include "acegan/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "acegan/artifacts.hpp"
#include "acegan/errors.hpp"

namespace acegan {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

int64_t parse_int(const std::string& key, const std::string& v) {
    size_t used = 0;
    int64_t out = 0;
    try {
        out = std::stoll(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size() || v.empty())
        throw ConfigError("key " + key + " needs an integer, got '" + v + "'");
    return out;
}

uint64_t parse_uint(const std::string& key, const std::string& v) {
    size_t used = 0;
    uint64_t out = 0;
    try {
        out = std::stoull(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size() || v.empty() || v[0] == '-')
        throw ConfigError("key " + key + " needs a non-negative integer, got '" +
                          v + "'");
    return out;
}

double parse_double(const std::string& key, const std::string& v) {
    size_t used = 0;
    double out = 0;
    try {
        out = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size() || v.empty())
        throw ConfigError("key " + key + " needs a number, got '" + v + "'");
    return out;
}

std::vector<std::string> parse_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string render_list(const std::vector<std::string>& v) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += v[i];
    }
    return out;
}

std::string render_double(double d) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", d);
    return buf;
}

using Setter = std::function<void(PipelineConfig&, const std::string&,
                                  const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"data_dir", [](PipelineConfig& c, const std::string&,
                        const std::string& v) { c.data_dir = v; }},
        {"output_dir", [](PipelineConfig& c, const std::string&,
                          const std::string& v) { c.output_dir = v; }},
        {"seed", [](PipelineConfig& c, const std::string& k,
                    const std::string& v) { c.seed = parse_uint(k, v); }},
        {"channel_index",
         [](PipelineConfig& c, const std::string& k, const std::string& v) {
             c.channel_index = int(parse_int(k, v));
         }},
        {"m", [](PipelineConfig& c, const std::string& k,
                 const std::string& v) { c.m = parse_int(k, v); }},
        {"gan_iterations",
         [](PipelineConfig& c, const std::string& k, const std::string& v) {
             c.gan_iterations = parse_int(k, v);
         }},
        {"gan_batch", [](PipelineConfig& c, const std::string& k,
                         const std::string& v) { c.gan_batch = parse_int(k, v); }},
        {"telemetry_every",
         [](PipelineConfig& c, const std::string& k, const std::string& v) {
             c.telemetry_every = parse_int(k, v);
         }},
        {"fd_samples_per_class",
         [](PipelineConfig& c, const std::string& k, const std::string& v) {
             c.fd_samples_per_class = parse_int(k, v);
         }},
        {"finetune_target_acc",
         [](PipelineConfig& c, const std::string& k, const std::string& v) {
             c.finetune_target_acc = parse_double(k, v);
         }},
        {"finetune_plateau",
         [](PipelineConfig& c, const std::string& k, const std::string& v) {
             c.finetune_plateau = parse_double(k, v);
         }},
        {"finetune_window",
         [](PipelineConfig& c, const std::string& k, const std::string& v) {
             c.finetune_window = parse_int(k, v);
         }},
        {"finetune_max_epochs",
         [](PipelineConfig& c, const std::string& k, const std::string& v) {
             c.finetune_max_epochs = parse_int(k, v);
         }},
        {"finetune_batch",
         [](PipelineConfig& c, const std::string& k, const std::string& v) {
             c.finetune_batch = parse_int(k, v);
         }},
        {"estimator_base_threshold",
         [](PipelineConfig& c, const std::string& k, const std::string& v) {
             c.estimator_base_threshold = parse_double(k, v);
         }},
        {"estimator_max_pool",
         [](PipelineConfig& c, const std::string& k, const std::string& v) {
             c.estimator_max_pool = parse_int(k, v);
         }},
        {"selection_repetitions",
         [](PipelineConfig& c, const std::string& k, const std::string& v) {
             c.selection_repetitions = parse_int(k, v);
         }},
        {"selection_train_per_class",
         [](PipelineConfig& c, const std::string& k, const std::string& v) {
             c.selection_train_per_class = parse_int(k, v);
         }},
        {"selection_test_n",
         [](PipelineConfig& c, const std::string& k, const std::string& v) {
             c.selection_test_n = parse_int(k, v);
         }},
        {"selection_epochs",
         [](PipelineConfig& c, const std::string& k, const std::string& v) {
             c.selection_epochs = parse_int(k, v);
         }},
        {"selection_batch",
         [](PipelineConfig& c, const std::string& k, const std::string& v) {
             c.selection_batch = parse_int(k, v);
         }},
        {"selection_top",
         [](PipelineConfig& c, const std::string& k, const std::string& v) {
             c.selection_top = parse_int(k, v);
         }},
        {"per_class_real",
         [](PipelineConfig& c, const std::string& k, const std::string& v) {
             c.per_class_real = parse_int(k, v);
         }},
        {"generated_per_class",
         [](PipelineConfig& c, const std::string& k, const std::string& v) {
             c.generated_per_class = parse_int(k, v);
         }},
        {"estimated_cap",
         [](PipelineConfig& c, const std::string& k, const std::string& v) {
             c.estimated_cap = parse_int(k, v);
         }},
        {"train_records",
         [](PipelineConfig& c, const std::string&, const std::string& v) {
             c.train_records = parse_list(v);
         }},
        {"test_records",
         [](PipelineConfig& c, const std::string&, const std::string& v) {
             c.test_records = parse_list(v);
         }},
        {"synth_train_records",
         [](PipelineConfig& c, const std::string& k, const std::string& v) {
             c.synth_train_records = parse_int(k, v);
         }},
        {"synth_test_records",
         [](PipelineConfig& c, const std::string& k, const std::string& v) {
             c.synth_test_records = parse_int(k, v);
         }},
        {"synth_beats",
         [](PipelineConfig& c, const std::string& k, const std::string& v) {
             c.synth_beats = parse_int(k, v);
         }},
        {"synth_period",
         [](PipelineConfig& c, const std::string& k, const std::string& v) {
             c.synth_period = parse_int(k, v);
         }},
        {"synth_noise",
         [](PipelineConfig& c, const std::string& k, const std::string& v) {
             c.synth_noise = parse_double(k, v);
         }},
    };
    return table;
}

void validate(const PipelineConfig& c) {
    if (c.m != 73)
        throw ConfigError("m must be 73: the classifier input is a fixed "
                          "73x73 coupling matrix");
    if (c.channel_index < 0) throw ConfigError("channel_index must be >= 0");
    if (c.generated_per_class < 0 || c.generated_per_class > 4000)
        throw ConfigError("generated_per_class must lie in [0, 4000]");
    if (c.gan_iterations < 0 || c.telemetry_every <= 0)
        throw ConfigError("gan_iterations must be >= 0 and telemetry_every > 0");
    if (c.gan_batch <= 0 || c.gan_batch % 4 != 0)
        throw ConfigError("gan_batch must be a positive multiple of 4");
    if (c.finetune_window <= 0 || c.finetune_max_epochs <= 0 ||
        c.finetune_batch <= 0)
        throw ConfigError("fine-tune window, epoch cap and batch must be "
                          "positive");
    if (c.synth_period <= 0 || c.synth_beats < 2)
        throw ConfigError("synthetic records need a positive period and at "
                          "least 2 beats");
}

}  // namespace

PipelineConfig parse_config_text(const std::string& text) {
    PipelineConfig cfg;
    std::stringstream ss(text);
    std::string line;
    int64_t lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) +
                              ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        auto it = setters().find(key);
        if (it == setters().end())
            throw ConfigError("line " + std::to_string(lineno) +
                              ": unknown key '" + key + "'");
        it->second(cfg, key, value);
    }
    validate(cfg);
    return cfg;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    std::string text((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
    return parse_config_text(text);
}

std::string render_config(const PipelineConfig& c) {
    std::string out;
    const auto put = [&out](const std::string& k, const std::string& v) {
        out += k + " = " + v + "\n";
    };
    put("data_dir", c.data_dir);
    put("output_dir", c.output_dir);
    put("seed", std::to_string(c.seed));
    put("channel_index", std::to_string(c.channel_index));
    put("m", std::to_string(c.m));
    put("gan_iterations", std::to_string(c.gan_iterations));
    put("gan_batch", std::to_string(c.gan_batch));
    put("telemetry_every", std::to_string(c.telemetry_every));
    put("fd_samples_per_class", std::to_string(c.fd_samples_per_class));
    put("finetune_target_acc", render_double(c.finetune_target_acc));
    put("finetune_plateau", render_double(c.finetune_plateau));
    put("finetune_window", std::to_string(c.finetune_window));
    put("finetune_max_epochs", std::to_string(c.finetune_max_epochs));
    put("finetune_batch", std::to_string(c.finetune_batch));
    put("estimator_base_threshold",
        render_double(c.estimator_base_threshold));
    put("estimator_max_pool", std::to_string(c.estimator_max_pool));
    put("selection_repetitions", std::to_string(c.selection_repetitions));
    put("selection_train_per_class",
        std::to_string(c.selection_train_per_class));
    put("selection_test_n", std::to_string(c.selection_test_n));
    put("selection_epochs", std::to_string(c.selection_epochs));
    put("selection_batch", std::to_string(c.selection_batch));
    put("selection_top", std::to_string(c.selection_top));
    put("per_class_real", std::to_string(c.per_class_real));
    put("generated_per_class", std::to_string(c.generated_per_class));
    put("estimated_cap", std::to_string(c.estimated_cap));
    put("train_records", render_list(c.train_records));
    put("test_records", render_list(c.test_records));
    put("synth_train_records", std::to_string(c.synth_train_records));
    put("synth_test_records", std::to_string(c.synth_test_records));
    put("synth_beats", std::to_string(c.synth_beats));
    put("synth_period", std::to_string(c.synth_period));
    put("synth_noise", render_double(c.synth_noise));
    return out;
}

uint64_t config_hash(const PipelineConfig& cfg) {
    // Paths say where data lives, not what the run computes; leaving them
    // out keeps artifacts valid when a tree is moved or mirrored.
    std::string semantic;
    std::stringstream ss(render_config(cfg));
    std::string line;
    while (std::getline(ss, line)) {
        if (line.rfind("data_dir ", 0) == 0 ||
            line.rfind("output_dir ", 0) == 0)
            continue;
        semantic += line + "\n";
    }
    return fnv1a64(semantic);
}

}  // namespace acegan
