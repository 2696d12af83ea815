#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hyformer/data.hpp"
#include "hyformer/losses.hpp"
#include "hyformer/model.hpp"
#include "hyformer/train.hpp"

namespace hyformer::config {

// Configuration problems exit with code 2 at the CLI boundary.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat `key = value` document with dotted key namespaces. '#' starts a comment.
class KeyValueConfig {
public:
    static KeyValueConfig parse_file(const std::string& path);
    static KeyValueConfig parse_string(const std::string& text);

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    std::optional<std::string> get(const std::string& key) const;
    bool has(const std::string& key) const { return values_.count(key) > 0; }

    int get_int(const std::string& key, int fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    std::vector<double> get_doubles(const std::string& key) const;  // comma-separated
    std::vector<int> get_ints(const std::string& key) const;

    const std::map<std::string, std::string>& values() const { return values_; }
    std::string serialize() const;

private:
    std::map<std::string, std::string> values_;
};

// All knobs of one experiment run.
struct RunConfig {
    ModelConfig model;
    train::TrainConfig train;
    loss::LossConfig loss;
    data::PreprocessConfig preprocess;
    data::AugmentationConfig augment;
};

// Rejects unknown keys with the full list of valid ones.
RunConfig run_config_from_kv(const KeyValueConfig& kv);
KeyValueConfig run_config_to_kv(const RunConfig& cfg);
const std::vector<std::string>& valid_run_config_keys();

// Applies repeated `--set key=value` overrides.
void apply_overrides(KeyValueConfig& kv, const std::vector<std::string>& overrides);

}  // namespace hyformer::config
