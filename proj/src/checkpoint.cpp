#include <json.hpp>

#include <cstring>
#include <fstream>

#include "hyformer/train.hpp"

namespace hyformer::train {

using json = nlohmann::ordered_json;
using nn::check;

namespace {

constexpr char kMagic[8] = {'H', 'Y', 'F', '_', 'C', 'K', 'P', 'T'};

json backbone_to_json(const BackboneSpec& s) {
    json j;
    j["kind"] = to_string(s.kind);
    j["stage_strides"] = s.stage_strides;
    j["stage_channels"] = s.stage_channels;
    j["pretrained"] = s.pretrained;
    j["window"] = s.window;
    j["blocks_per_stage"] = s.blocks_per_stage;
    j["mlp_ratio"] = s.mlp_ratio;
    j["heads"] = s.heads;
    return j;
}

BackboneSpec backbone_from_json(const json& j) {
    BackboneSpec s;
    s.kind = backbone_kind_from_string(j.at("kind").get<std::string>());
    s.stage_strides = j.at("stage_strides").get<std::array<int, 4>>();
    s.stage_channels = j.at("stage_channels").get<std::array<int, 4>>();
    s.pretrained = j.at("pretrained").get<bool>();
    s.window = j.at("window").get<int>();
    s.blocks_per_stage = j.at("blocks_per_stage").get<int>();
    s.mlp_ratio = j.at("mlp_ratio").get<double>();
    s.heads = j.at("heads").get<std::array<int, 4>>();
    return s;
}

json model_config_to_json(const ModelConfig& c) {
    json j;
    j["cnn"] = backbone_to_json(c.cnn);
    j["swin"] = backbone_to_json(c.swin);
    j["fusion_channels"] = c.fusion_channels;
    j["decoder_channels"] = c.decoder_channels;
    j["final_channels"] = c.final_channels;
    j["num_classes"] = c.num_classes;
    j["input_size"] = c.input_size;
    j["cls_hidden"] = c.cls_hidden;
    return j;
}

ModelConfig model_config_from_json(const json& j) {
    ModelConfig c;
    c.cnn = backbone_from_json(j.at("cnn"));
    c.swin = backbone_from_json(j.at("swin"));
    c.fusion_channels = j.at("fusion_channels").get<std::array<int, 4>>();
    c.decoder_channels = j.at("decoder_channels").get<std::array<int, 3>>();
    c.final_channels = j.at("final_channels").get<std::array<int, 2>>();
    c.num_classes = j.at("num_classes").get<int>();
    c.input_size = j.at("input_size").get<int>();
    c.cls_hidden = j.at("cls_hidden").get<int>();
    return c;
}

json train_config_to_json(const TrainConfig& c) {
    json j;
    j["epochs"] = c.epochs;
    j["patience"] = c.patience;
    j["lr_init"] = c.lr_init;
    j["lr_min"] = c.lr_min;
    j["weight_decay"] = c.weight_decay;
    j["grad_clip_norm"] = c.grad_clip_norm;
    j["batch_size"] = c.batch_size;
    j["precision"] = to_string(c.precision);
    j["seed"] = c.seed;
    return j;
}

TrainConfig train_config_from_json(const json& j) {
    TrainConfig c;
    c.epochs = j.at("epochs").get<int>();
    c.patience = j.at("patience").get<int>();
    c.lr_init = j.at("lr_init").get<double>();
    c.lr_min = j.at("lr_min").get<double>();
    c.weight_decay = j.at("weight_decay").get<double>();
    c.grad_clip_norm = j.at("grad_clip_norm").get<double>();
    c.batch_size = j.at("batch_size").get<int>();
    c.precision = precision_from_string(j.at("precision").get<std::string>());
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

}  // namespace

void save_checkpoint(const CheckpointBundle& bundle, const std::string& path) {
    json header;
    header["format_version"] = CheckpointBundle::kFormatVersion;
    header["model"] = model_config_to_json(bundle.model_config);
    header["train"] = train_config_to_json(bundle.train_config);
    header["seed"] = bundle.seed;
    header["epoch"] = bundle.epoch;
    json hist = json::array();
    for (const auto& e : bundle.history) {
        json row;
        row["epoch"] = e.epoch;
        row["lr"] = e.lr;
        row["train_loss"] = e.train_loss;
        row["train_seg"] = e.train_seg;
        row["train_cls"] = e.train_cls;
        row["val_dice"] = e.val_dice;
        hist.push_back(row);
    }
    header["history"] = hist;
    json tensors = json::array();
    for (const auto& [name, t] : bundle.state) {
        json row;
        row["name"] = name;
        row["shape"] = t.shape();
        tensors.push_back(row);
    }
    header["tensors"] = tensors;

    std::string header_str = header.dump();
    std::ofstream out(path, std::ios::binary);
    check(out.good(), "save_checkpoint: cannot open " + path);
    out.write(kMagic, 8);
    std::uint32_t version = CheckpointBundle::kFormatVersion;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    std::uint64_t len = header_str.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(header_str.data(), static_cast<std::streamsize>(len));
    for (const auto& [name, t] : bundle.state)
        out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.numel() * 8));
    check(out.good(), "save_checkpoint: write failed for " + path);
}

CheckpointBundle load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) throw std::runtime_error("load_checkpoint: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in.good() || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("load_checkpoint: " + path + " is not a checkpoint file");
    std::uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (!in.good() || version != CheckpointBundle::kFormatVersion)
        throw std::runtime_error("load_checkpoint: unsupported format version " + std::to_string(version) +
                                 " (expected " + std::to_string(CheckpointBundle::kFormatVersion) + ")");
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    if (!in.good()) throw std::runtime_error("load_checkpoint: truncated header length in " + path);
    std::string header_str(len, '\0');
    in.read(header_str.data(), static_cast<std::streamsize>(len));
    if (!in.good()) throw std::runtime_error("load_checkpoint: truncated header in " + path);

    json header = json::parse(header_str, nullptr, false);
    if (header.is_discarded()) throw std::runtime_error("load_checkpoint: corrupt header in " + path);

    CheckpointBundle bundle;
    bundle.model_config = model_config_from_json(header.at("model"));
    bundle.train_config = train_config_from_json(header.at("train"));
    bundle.seed = header.at("seed").get<std::uint64_t>();
    bundle.epoch = header.at("epoch").get<int>();
    for (const auto& row : header.at("history")) {
        EpochStats e;
        e.epoch = row.at("epoch").get<int>();
        e.lr = row.at("lr").get<double>();
        e.train_loss = row.at("train_loss").get<double>();
        e.train_seg = row.at("train_seg").get<double>();
        e.train_cls = row.at("train_cls").get<double>();
        e.val_dice = row.at("val_dice").get<double>();
        bundle.history.push_back(e);
    }
    for (const auto& row : header.at("tensors")) {
        std::string name = row.at("name").get<std::string>();
        std::vector<int> shape = row.at("shape").get<std::vector<int>>();
        Tensor t(shape);
        in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.numel() * 8));
        if (!in.good())
            throw std::runtime_error("load_checkpoint: truncated tensor data for '" + name + "' in " + path);
        bundle.state.emplace_back(std::move(name), std::move(t));
    }
    return bundle;
}

std::unique_ptr<HyFormerNet> model_from_checkpoint(const CheckpointBundle& bundle) {
    auto model = std::make_unique<HyFormerNet>(bundle.model_config, bundle.seed);
    model->load_state_dict(bundle.state);
    return model;
}

}  // namespace hyformer::train
