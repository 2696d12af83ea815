#include "hyformer/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace hyformer::config {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(trim(tok));
    return out;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse_string(const std::string& text) {
    KeyValueConfig kv;
    std::istringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value', got '" + line + "'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        kv.values_[key] = value;
    }
    return kv;
}

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str());
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

int KeyValueConfig::get_int(const std::string& key, int fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    try {
        return std::stoi(*v);
    } catch (...) {
        throw ConfigError("config key '" + key + "': expected integer, got '" + *v + "'");
    }
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    try {
        return std::stod(*v);
    } catch (...) {
        throw ConfigError("config key '" + key + "': expected number, got '" + *v + "'");
    }
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1") return true;
    if (*v == "false" || *v == "0") return false;
    throw ConfigError("config key '" + key + "': expected true/false, got '" + *v + "'");
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
    auto v = get(key);
    return v ? *v : fallback;
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    try {
        return std::stoull(*v);
    } catch (...) {
        throw ConfigError("config key '" + key + "': expected unsigned integer, got '" + *v + "'");
    }
}

std::vector<double> KeyValueConfig::get_doubles(const std::string& key) const {
    auto v = get(key);
    if (!v) return {};
    std::vector<double> out;
    for (const auto& tok : split_csv(*v)) {
        try {
            out.push_back(std::stod(tok));
        } catch (...) {
            throw ConfigError("config key '" + key + "': expected comma-separated numbers, got '" + *v + "'");
        }
    }
    return out;
}

std::vector<int> KeyValueConfig::get_ints(const std::string& key) const {
    auto v = get(key);
    if (!v) return {};
    std::vector<int> out;
    for (const auto& tok : split_csv(*v)) {
        try {
            out.push_back(std::stoi(tok));
        } catch (...) {
            throw ConfigError("config key '" + key + "': expected comma-separated integers, got '" + *v + "'");
        }
    }
    return out;
}

std::string KeyValueConfig::serialize() const {
    std::ostringstream out;
    for (const auto& [k, v] : values_) out << k << " = " << v << "\n";
    return out.str();
}

const std::vector<std::string>& valid_run_config_keys() {
    static const std::vector<std::string> keys = {
        "model.input_size", "model.num_classes", "model.cls_hidden",
        "model.cnn.kind", "model.cnn.channels",
        "model.swin.kind", "model.swin.channels", "model.swin.window", "model.swin.blocks_per_stage",
        "model.swin.mlp_ratio", "model.swin.heads",
        "model.fusion_channels", "model.decoder_channels", "model.final_channels",
        "train.epochs", "train.patience", "train.lr_init", "train.lr_min", "train.weight_decay",
        "train.grad_clip_norm", "train.batch_size", "train.precision", "train.seed",
        "loss.lambda_seg", "loss.lambda_cls", "loss.dice_smooth", "loss.class_weights",
        "preprocess.target_size", "preprocess.mean", "preprocess.std", "preprocess.interpolation",
        "augment.p_hflip", "augment.p_vflip", "augment.p_rotate", "augment.rotate_degrees",
        "augment.jitter_factor", "augment.p_erase", "augment.erase_scale",
    };
    return keys;
}

namespace {

template <std::size_t N>
std::array<int, N> to_int_array(const std::vector<int>& v, const std::string& key) {
    if (v.size() != N)
        throw ConfigError("config key '" + key + "': expected " + std::to_string(N) + " comma-separated values");
    std::array<int, N> out{};
    std::copy_n(v.begin(), N, out.begin());
    return out;
}

template <std::size_t N>
std::array<double, N> to_double_array(const std::vector<double>& v, const std::string& key) {
    if (v.size() != N)
        throw ConfigError("config key '" + key + "': expected " + std::to_string(N) + " comma-separated values");
    std::array<double, N> out{};
    std::copy_n(v.begin(), N, out.begin());
    return out;
}

std::string join_ints(const int* v, std::size_t n) {
    std::ostringstream out;
    for (std::size_t i = 0; i < n; ++i) out << (i ? "," : "") << v[i];
    return out.str();
}

std::string join_doubles(const double* v, std::size_t n) {
    std::ostringstream out;
    for (std::size_t i = 0; i < n; ++i) out << (i ? "," : "") << v[i];
    return out.str();
}

}  // namespace

RunConfig run_config_from_kv(const KeyValueConfig& kv) {
    const auto& valid = valid_run_config_keys();
    for (const auto& [key, value] : kv.values()) {
        if (std::find(valid.begin(), valid.end(), key) == valid.end()) {
            std::ostringstream msg;
            msg << "unknown config key '" << key << "'. Valid keys:";
            for (const auto& k : valid) msg << "\n  " << k;
            throw ConfigError(msg.str());
        }
    }
    RunConfig cfg;
    try {
        cfg.model.input_size = kv.get_int("model.input_size", cfg.model.input_size);
        cfg.model.num_classes = kv.get_int("model.num_classes", cfg.model.num_classes);
        cfg.model.cls_hidden = kv.get_int("model.cls_hidden", cfg.model.cls_hidden);
        cfg.model.cnn.kind = backbone_kind_from_string(kv.get_string("model.cnn.kind", to_string(cfg.model.cnn.kind)));
        if (cfg.model.cnn.kind == BackboneKind::CnnReference) cfg.model.cnn = BackboneSpec::cnn_reference();
        if (kv.has("model.cnn.channels"))
            cfg.model.cnn.stage_channels = to_int_array<4>(kv.get_ints("model.cnn.channels"), "model.cnn.channels");
        cfg.model.swin.kind =
            backbone_kind_from_string(kv.get_string("model.swin.kind", to_string(cfg.model.swin.kind)));
        if (cfg.model.swin.kind == BackboneKind::SwinReference) cfg.model.swin = BackboneSpec::swin_reference();
        if (kv.has("model.swin.channels"))
            cfg.model.swin.stage_channels = to_int_array<4>(kv.get_ints("model.swin.channels"), "model.swin.channels");
        cfg.model.swin.window = kv.get_int("model.swin.window", cfg.model.swin.window);
        cfg.model.swin.blocks_per_stage = kv.get_int("model.swin.blocks_per_stage", cfg.model.swin.blocks_per_stage);
        cfg.model.swin.mlp_ratio = kv.get_double("model.swin.mlp_ratio", cfg.model.swin.mlp_ratio);
        if (kv.has("model.swin.heads"))
            cfg.model.swin.heads = to_int_array<4>(kv.get_ints("model.swin.heads"), "model.swin.heads");
        if (kv.has("model.fusion_channels"))
            cfg.model.fusion_channels = to_int_array<4>(kv.get_ints("model.fusion_channels"), "model.fusion_channels");
        if (kv.has("model.decoder_channels"))
            cfg.model.decoder_channels =
                to_int_array<3>(kv.get_ints("model.decoder_channels"), "model.decoder_channels");
        if (kv.has("model.final_channels"))
            cfg.model.final_channels = to_int_array<2>(kv.get_ints("model.final_channels"), "model.final_channels");

        cfg.train.epochs = kv.get_int("train.epochs", cfg.train.epochs);
        cfg.train.patience = kv.get_int("train.patience", cfg.train.patience);
        cfg.train.lr_init = kv.get_double("train.lr_init", cfg.train.lr_init);
        cfg.train.lr_min = kv.get_double("train.lr_min", cfg.train.lr_min);
        cfg.train.weight_decay = kv.get_double("train.weight_decay", cfg.train.weight_decay);
        cfg.train.grad_clip_norm = kv.get_double("train.grad_clip_norm", cfg.train.grad_clip_norm);
        cfg.train.batch_size = kv.get_int("train.batch_size", cfg.train.batch_size);
        cfg.train.precision = train::precision_from_string(kv.get_string("train.precision", "high"));
        cfg.train.seed = kv.get_u64("train.seed", cfg.train.seed);

        cfg.loss.lambda_seg = kv.get_double("loss.lambda_seg", cfg.loss.lambda_seg);
        cfg.loss.lambda_cls = kv.get_double("loss.lambda_cls", cfg.loss.lambda_cls);
        cfg.loss.dice_smooth = kv.get_double("loss.dice_smooth", cfg.loss.dice_smooth);
        if (kv.has("loss.class_weights")) {
            std::string w = kv.get_string("loss.class_weights", "");
            if (w == "auto") {
                cfg.loss.auto_weights = true;
            } else {
                cfg.loss.class_weights = to_double_array<3>(kv.get_doubles("loss.class_weights"), "loss.class_weights");
            }
        }

        cfg.preprocess.target_size = kv.get_int("preprocess.target_size", cfg.model.input_size);
        if (kv.has("preprocess.mean"))
            cfg.preprocess.mean = to_double_array<3>(kv.get_doubles("preprocess.mean"), "preprocess.mean");
        if (kv.has("preprocess.std"))
            cfg.preprocess.stddev = to_double_array<3>(kv.get_doubles("preprocess.std"), "preprocess.std");
        cfg.preprocess.interpolation =
            data::interp_from_string(kv.get_string("preprocess.interpolation", "bicubic"));

        cfg.augment.p_hflip = kv.get_double("augment.p_hflip", cfg.augment.p_hflip);
        cfg.augment.p_vflip = kv.get_double("augment.p_vflip", cfg.augment.p_vflip);
        cfg.augment.p_rotate = kv.get_double("augment.p_rotate", cfg.augment.p_rotate);
        cfg.augment.rotate_degrees = kv.get_double("augment.rotate_degrees", cfg.augment.rotate_degrees);
        cfg.augment.jitter_factor = kv.get_double("augment.jitter_factor", cfg.augment.jitter_factor);
        cfg.augment.p_erase = kv.get_double("augment.p_erase", cfg.augment.p_erase);
        if (kv.has("augment.erase_scale"))
            cfg.augment.erase_scale = to_double_array<2>(kv.get_doubles("augment.erase_scale"), "augment.erase_scale");

        cfg.model.validate();
        cfg.train.validate();
        cfg.loss.validate();
        cfg.preprocess.validate();
        cfg.augment.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("invalid configuration: ") + e.what());
    }
    if (cfg.preprocess.target_size != cfg.model.input_size)
        throw ConfigError("preprocess.target_size must equal model.input_size");
    return cfg;
}

KeyValueConfig run_config_to_kv(const RunConfig& cfg) {
    KeyValueConfig kv;
    kv.set("model.input_size", std::to_string(cfg.model.input_size));
    kv.set("model.num_classes", std::to_string(cfg.model.num_classes));
    kv.set("model.cls_hidden", std::to_string(cfg.model.cls_hidden));
    kv.set("model.cnn.kind", to_string(cfg.model.cnn.kind));
    kv.set("model.cnn.channels", join_ints(cfg.model.cnn.stage_channels.data(), 4));
    kv.set("model.swin.kind", to_string(cfg.model.swin.kind));
    kv.set("model.swin.channels", join_ints(cfg.model.swin.stage_channels.data(), 4));
    kv.set("model.swin.window", std::to_string(cfg.model.swin.window));
    kv.set("model.swin.blocks_per_stage", std::to_string(cfg.model.swin.blocks_per_stage));
    kv.set("model.swin.mlp_ratio", std::to_string(cfg.model.swin.mlp_ratio));
    kv.set("model.swin.heads", join_ints(cfg.model.swin.heads.data(), 4));
    kv.set("model.fusion_channels", join_ints(cfg.model.fusion_channels.data(), 4));
    kv.set("model.decoder_channels", join_ints(cfg.model.decoder_channels.data(), 3));
    kv.set("model.final_channels", join_ints(cfg.model.final_channels.data(), 2));
    kv.set("train.epochs", std::to_string(cfg.train.epochs));
    kv.set("train.patience", std::to_string(cfg.train.patience));
    kv.set("train.lr_init", std::to_string(cfg.train.lr_init));
    kv.set("train.lr_min", std::to_string(cfg.train.lr_min));
    kv.set("train.weight_decay", std::to_string(cfg.train.weight_decay));
    kv.set("train.grad_clip_norm", std::to_string(cfg.train.grad_clip_norm));
    kv.set("train.batch_size", std::to_string(cfg.train.batch_size));
    kv.set("train.precision", to_string(cfg.train.precision));
    kv.set("train.seed", std::to_string(cfg.train.seed));
    kv.set("loss.lambda_seg", std::to_string(cfg.loss.lambda_seg));
    kv.set("loss.lambda_cls", std::to_string(cfg.loss.lambda_cls));
    kv.set("loss.dice_smooth", std::to_string(cfg.loss.dice_smooth));
    kv.set("loss.class_weights",
           cfg.loss.auto_weights ? "auto" : join_doubles(cfg.loss.class_weights.data(), 3));
    kv.set("preprocess.target_size", std::to_string(cfg.preprocess.target_size));
    kv.set("preprocess.mean", join_doubles(cfg.preprocess.mean.data(), 3));
    kv.set("preprocess.std", join_doubles(cfg.preprocess.stddev.data(), 3));
    kv.set("preprocess.interpolation", to_string(cfg.preprocess.interpolation));
    kv.set("augment.p_hflip", std::to_string(cfg.augment.p_hflip));
    kv.set("augment.p_vflip", std::to_string(cfg.augment.p_vflip));
    kv.set("augment.p_rotate", std::to_string(cfg.augment.p_rotate));
    kv.set("augment.rotate_degrees", std::to_string(cfg.augment.rotate_degrees));
    kv.set("augment.jitter_factor", std::to_string(cfg.augment.jitter_factor));
    kv.set("augment.p_erase", std::to_string(cfg.augment.p_erase));
    kv.set("augment.erase_scale", join_doubles(cfg.augment.erase_scale.data(), 2));
    return kv;
}

void apply_overrides(KeyValueConfig& kv, const std::vector<std::string>& overrides) {
    for (const auto& ov : overrides) {
        std::size_t eq = ov.find('=');
        if (eq == std::string::npos) throw ConfigError("override '" + ov + "' is not of the form key=value");
        kv.set(trim(ov.substr(0, eq)), trim(ov.substr(eq + 1)));
    }
}

}  // namespace hyformer::config
