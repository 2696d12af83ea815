#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hyformer/layers.hpp"

namespace hyformer {

using nn::ParamStore;
using nn::Rng;
using nn::Tensor;
using nn::Var;

enum class BackboneKind { CnnReference, CnnToy, SwinReference, SwinToy };

std::string to_string(BackboneKind k);
BackboneKind backbone_kind_from_string(const std::string& s);

struct BackboneSpec {
    BackboneKind kind = BackboneKind::CnnToy;
    std::array<int, 4> stage_strides{4, 8, 16, 32};
    std::array<int, 4> stage_channels{16, 32, 64, 128};
    bool pretrained = false;
    // transformer-branch extras
    int window = 7;
    int blocks_per_stage = 2;  // alternating regular / shifted partitions
    double mlp_ratio = 2.0;
    std::array<int, 4> heads{1, 2, 4, 8};

    void validate() const;
    bool is_cnn() const { return kind == BackboneKind::CnnReference || kind == BackboneKind::CnnToy; }

    static BackboneSpec cnn_toy() { return {}; }
    static BackboneSpec swin_toy() {
        BackboneSpec s;
        s.kind = BackboneKind::SwinToy;
        s.stage_channels = {24, 48, 96, 192};
        return s;
    }
    static BackboneSpec cnn_reference();
    static BackboneSpec swin_reference();

    bool operator==(const BackboneSpec&) const = default;
};

struct ModelConfig {
    BackboneSpec cnn = BackboneSpec::cnn_toy();
    BackboneSpec swin = BackboneSpec::swin_toy();
    std::array<int, 4> fusion_channels{16, 32, 64, 128};
    std::array<int, 3> decoder_channels{64, 32, 16};  // gated blocks at strides 16, 8, 4
    std::array<int, 2> final_channels{8, 8};          // skip-free blocks to strides 2, 1
    int num_classes = 3;
    int input_size = 224;
    int cls_hidden = 256;

    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

struct FeaturePyramid {
    std::array<Var, 4> stages;
    std::array<int, 4> strides{4, 8, 16, 32};
};

struct ModelOutput {
    Var seg_probs;                    // {N,1,H,W} in (0,1)
    Var class_probs;                  // {N,num_classes} on the simplex
    Var class_logits;                 // pre-softmax, used by Grad-CAM
    std::vector<Var> attention_maps;  // coarse -> fine, each {N,1,h,w} in [0,1]
    Var bottleneck;                   // deepest fusion features, Grad-CAM target
};

// Returns the stored decoder gate map without recomputation. gate_index -1
// selects the finest (highest-resolution) gate.
Tensor extract_attention_map(const ModelOutput& out, int gate_index = -1);

namespace detail {

struct ConvBnRelu {
    nn::Conv2d conv;
    nn::BatchNorm2d bn;
    ConvBnRelu() = default;
    ConvBnRelu(ParamStore& ps, Rng& rng, const std::string& name, int in_ch, int out_ch, int kernel, int stride);
    Var forward(const Var& x, bool training) const;
};

struct CnnBackbone {
    std::vector<ConvBnRelu> blocks;  // 2 per stage
    BackboneSpec spec;
    CnnBackbone() = default;
    CnnBackbone(ParamStore& ps, Rng& rng, const std::string& name, const BackboneSpec& spec);
    FeaturePyramid forward(const Var& image, bool training) const;
};

struct SwinBackbone {
    nn::Conv2d patch_embed;
    nn::LayerNorm embed_norm;
    std::vector<nn::LayerNorm> merge_norms;   // before each patch-merging reduction
    std::vector<nn::Linear> merge_reductions;  // 4C -> 2C
    std::vector<nn::SwinBlock> blocks;         // blocks_per_stage per stage
    BackboneSpec spec;
    SwinBackbone() = default;
    SwinBackbone(ParamStore& ps, Rng& rng, const std::string& name, const BackboneSpec& spec);
    FeaturePyramid forward(const Var& image, bool training) const;
};

struct FusionBlock {
    nn::Conv2d conv;
    nn::BatchNorm2d bn;
    int in_cnn = 0, in_swin = 0;
    FusionBlock() = default;
    FusionBlock(ParamStore& ps, Rng& rng, const std::string& name, int cnn_ch, int swin_ch, int out_ch);
    Var forward(const Var& f_cnn, const Var& f_swin, bool training) const;
};

struct AttentionGate {
    nn::Conv2d align_g;  // 1x1, aligns the upsampled gating signal to skip channels
    nn::Conv2d wg, wx;   // 1x1 projections to the shared attention dimension
    nn::Conv2d psi;      // 1x1 to a single channel
    AttentionGate() = default;
    AttentionGate(ParamStore& ps, Rng& rng, const std::string& name, int skip_ch, int gate_ch, int inter_ch);
    // g is the coarser decoder feature; it is upsampled x2 and projected
    // before the additive attention. Returns (gated skip, attention map).
    std::pair<Var, Var> forward(const Var& x, const Var& g) const;
    // Core additive-attention computation on pre-aligned inputs.
    std::pair<Var, Var> forward_aligned(const Var& x, const Var& g_aligned) const;
};

struct DecoderBlock {
    nn::ConvTranspose2d up;
    AttentionGate gate;
    ConvBnRelu fuse;
    DecoderBlock() = default;
    DecoderBlock(ParamStore& ps, Rng& rng, const std::string& name, int in_ch, int skip_ch, int out_ch);
    std::pair<Var, Var> forward(const Var& d, const Var& skip, bool training) const;
};

struct UpBlock {
    nn::ConvTranspose2d up;
    ConvBnRelu conv;
    UpBlock() = default;
    UpBlock(ParamStore& ps, Rng& rng, const std::string& name, int in_ch, int out_ch);
    Var forward(const Var& x, bool training) const;
};

}  // namespace detail

// Dual-branch encoder + multi-scale fusion + attention-gated decoder with
// joint segmentation / classification heads.
class HyFormerNet {
public:
    HyFormerNet(ModelConfig config, std::uint64_t seed);
    HyFormerNet(const HyFormerNet&) = delete;
    HyFormerNet& operator=(const HyFormerNet&) = delete;

    const ModelConfig& config() const { return config_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    std::uint64_t seed() const { return seed_; }

    FeaturePyramid cnn_branch_forward(const Var& image, bool training = false) const;
    FeaturePyramid transformer_branch_forward(const Var& image, bool training = false) const;
    FeaturePyramid fuse_pyramids(const FeaturePyramid& cnn, const FeaturePyramid& swin, bool training) const;
    std::pair<Var, std::vector<Var>> decoder_forward(const FeaturePyramid& fused, bool training) const;
    Var segmentation_head(const Var& d1) const;
    Var classification_logits(const Var& bottleneck) const;

    ModelOutput forward(const Var& image, bool training = false) const;
    ModelOutput forward(const Tensor& images, bool training = false) const;

    // Deep copies of parameter/buffer values (checkpointing, best-epoch snapshots).
    std::vector<std::pair<std::string, Tensor>> state_dict() const;
    void load_state_dict(const std::vector<std::pair<std::string, Tensor>>& state);

    // Introspection used by tests: toggles attention-probability capture on
    // every transformer block and returns captured rows after a forward.
    void set_capture_attention(bool on);
    std::vector<Tensor> captured_attention() const;

private:
    ModelConfig config_;
    std::uint64_t seed_;
    ParamStore params_;
    detail::CnnBackbone cnn_;
    detail::SwinBackbone swin_;
    std::vector<detail::FusionBlock> fusion_;
    std::vector<detail::DecoderBlock> dec_blocks_;
    std::vector<detail::UpBlock> up_blocks_;
    nn::Conv2d seg_head_;
    nn::Linear cls_fc1_, cls_fc2_;
};

}  // namespace hyformer
