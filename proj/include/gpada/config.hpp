#pragma once

#include <fstream>
#include <optional>
#include <string>

#include "gpada/loop.hpp"
#include "gpada/synthetic.hpp"

namespace gpada {

/// Full run configuration: the loop parameters plus exactly one data source
/// (a dataset CSV path or a synthetic spec) and an output directory.
struct RunConfig {
    LoopConfig loop;
    std::optional<std::string> dataset_path;
    std::optional<SyntheticSpec> synth;
    bool synth_touched = false;  // any synth_* key seen
    std::string out_dir = ".";

    SyntheticSpec& synth_ref() {
        if (!synth) synth = SyntheticSpec{};
        synth_touched = true;
        return *synth;
    }

    /// Source-of-data exclusivity check, applied after file + overrides.
    void validate_sources() const {
        if (dataset_path && synth_touched)
            fail("config: both dataset= and synth_* keys present; choose one data source");
        if (!dataset_path && !synth_touched)
            fail("config: no data source; set dataset= or synth_* keys");
        if (synth) synth->validate();
        loop.validate();
    }
};

namespace detail {

inline double parse_config_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        fail("config: unparsable value '" + value + "' for key '" + key + "'");
    }
}

inline long long parse_config_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        long long v = std::stoll(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        fail("config: unparsable value '" + value + "' for key '" + key + "'");
    }
}

inline std::uint64_t parse_config_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        unsigned long long v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        fail("config: unparsable value '" + value + "' for key '" + key + "'");
    }
}

inline double parse_in_range(const std::string& key, const std::string& value, double lo, double hi) {
    const double v = parse_config_double(key, value);
    if (v < lo || v > hi)
        fail("config: value " + value + " for key '" + key + "' outside [" + format_double(lo) + "," +
             format_double(hi) + "]");
    return v;
}

}  // namespace detail

/// Applies one key=value setting. Unknown keys are rejected.
inline void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
    using detail::parse_config_double;
    using detail::parse_config_int;
    using detail::parse_config_u64;
    using detail::parse_in_range;

    if (key == "dataset") {
        cfg.dataset_path = value;
    } else if (key == "synth_classes") {
        cfg.synth_ref().num_classes = static_cast<int>(parse_config_int(key, value));
    } else if (key == "synth_dim") {
        cfg.synth_ref().dim = static_cast<int>(parse_config_int(key, value));
    } else if (key == "synth_per_class") {
        cfg.synth_ref().per_class_per_domain = static_cast<int>(parse_config_int(key, value));
    } else if (key == "synth_shift") {
        cfg.synth_ref().shift_magnitude = parse_config_double(key, value);
    } else if (key == "synth_rotation") {
        cfg.synth_ref().rotation_angle = parse_config_double(key, value);
    } else if (key == "synth_noise_sigma") {
        cfg.synth_ref().noise_sigma = parse_config_double(key, value);
    } else if (key == "synth_seed") {
        cfg.synth_ref().seed = parse_config_u64(key, value);
    } else if (key == "rounds") {
        cfg.loop.rounds = static_cast<int>(parse_config_int(key, value));
    } else if (key == "budget_fraction") {
        cfg.loop.budget_fraction = parse_in_range(key, value, 0.0, 1.0);
    } else if (key == "kappa_start") {
        cfg.loop.kappa_start = parse_in_range(key, value, 0.0, 100.0);
    } else if (key == "kappa_step") {
        cfg.loop.kappa_step = parse_in_range(key, value, 0.0, 100.0);
    } else if (key == "warmup_epochs") {
        cfg.loop.warmup_epochs = static_cast<int>(parse_config_int(key, value));
    } else if (key == "epochs_per_round") {
        cfg.loop.epochs_per_round = static_cast<int>(parse_config_int(key, value));
    } else if (key == "alpha") {
        cfg.loop.alpha = parse_in_range(key, value, 0.0, 1.0);
    } else if (key == "lambda") {
        cfg.loop.lambda = parse_config_double(key, value);
    } else if (key == "jitter") {
        cfg.loop.jitter = parse_config_double(key, value);
    } else if (key == "learning_rate") {
        cfg.loop.optimizer.learning_rate = parse_config_double(key, value);
    } else if (key == "momentum") {
        cfg.loop.optimizer.momentum = parse_in_range(key, value, 0.0, 0.9999999999);
    } else if (key == "weight_decay") {
        cfg.loop.optimizer.weight_decay = parse_config_double(key, value);
    } else if (key == "batch_size") {
        cfg.loop.optimizer.batch_size = static_cast<int>(parse_config_int(key, value));
    } else if (key == "committee_k") {
        cfg.loop.committee.size = static_cast<int>(parse_config_int(key, value));
    } else if (key == "committee_sigma") {
        if (value == "auto")
            cfg.loop.committee.sigma.reset();
        else
            cfg.loop.committee.sigma = parse_config_double(key, value);
    } else if (key == "eval_fraction") {
        cfg.loop.eval_fraction = parse_in_range(key, value, 0.0, 0.99);
    } else if (key == "seed") {
        cfg.loop.seed = parse_config_u64(key, value);
    } else if (key == "strategy") {
        cfg.loop.strategy = strategy_from_string(value);
    } else {
        fail("config: unknown key '" + key + "'");
    }
}

/// Line-oriented key=value file. Blank lines and '#' comments are skipped.
inline RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("config: cannot open file '" + path + "'");
    RunConfig cfg;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            fail("config line " + std::to_string(row) + ": expected key=value, got '" + line + "'");
        apply_config_entry(cfg, line.substr(0, eq), line.substr(eq + 1));
    }
    return cfg;
}

}  // namespace gpada
