#include "hyformer/model.hpp"

#include <cmath>
#include <stdexcept>

namespace hyformer {

using namespace nn;

std::string to_string(BackboneKind k) {
    switch (k) {
        case BackboneKind::CnnReference: return "cnn_reference";
        case BackboneKind::CnnToy: return "cnn_toy";
        case BackboneKind::SwinReference: return "swin_reference";
        case BackboneKind::SwinToy: return "swin_toy";
    }
    return "?";
}

BackboneKind backbone_kind_from_string(const std::string& s) {
    if (s == "cnn_reference") return BackboneKind::CnnReference;
    if (s == "cnn_toy") return BackboneKind::CnnToy;
    if (s == "swin_reference") return BackboneKind::SwinReference;
    if (s == "swin_toy") return BackboneKind::SwinToy;
    throw std::invalid_argument("unknown backbone kind: " + s);
}

BackboneSpec BackboneSpec::cnn_reference() {
    BackboneSpec s;
    s.kind = BackboneKind::CnnReference;
    s.stage_channels = {48, 96, 192, 384};
    return s;
}

BackboneSpec BackboneSpec::swin_reference() {
    BackboneSpec s;
    s.kind = BackboneKind::SwinReference;
    s.stage_channels = {96, 192, 384, 768};
    s.heads = {3, 6, 12, 24};
    s.mlp_ratio = 4.0;
    return s;
}

void BackboneSpec::validate() const {
    check(stage_strides.size() == 4, "BackboneSpec: exactly 4 stages required");
    int prev = 0;
    for (int s : stage_strides) {
        check(s > prev && (s & (s - 1)) == 0, "BackboneSpec: strides must be strictly increasing powers of two");
        prev = s;
    }
    for (int c : stage_channels) check(c > 0, "BackboneSpec: channels must be positive");
    if (!is_cnn()) {
        check(window > 0, "BackboneSpec: window must be positive");
        check(blocks_per_stage >= 2, "BackboneSpec: need at least one regular and one shifted block per stage");
        for (int i = 0; i < 4; ++i)
            check(stage_channels[i] % heads[i] == 0, "BackboneSpec: channels must divide by heads");
    }
    if (pretrained)
        throw std::invalid_argument("BackboneSpec: no pretrained weights are bundled with this build; "
                                    "set pretrained=false for seeded-random initialization");
}

void ModelConfig::validate() const {
    cnn.validate();
    swin.validate();
    check(cnn.is_cnn(), "ModelConfig: cnn branch must use a cnn_* backbone");
    check(!swin.is_cnn(), "ModelConfig: transformer branch must use a swin_* backbone");
    check(num_classes >= 2, "ModelConfig: need at least 2 classes");
    check(input_size > 0 && input_size % 32 == 0, "ModelConfig: input size must be a positive multiple of 32");
    check(cls_hidden > 0, "ModelConfig: classification hidden width must be positive");
    for (int c : fusion_channels) check(c > 0, "ModelConfig: fusion widths must be positive");
    for (int c : decoder_channels) check(c > 0, "ModelConfig: decoder widths must be positive");
    for (int c : final_channels) check(c > 0, "ModelConfig: final widths must be positive");
}

Tensor extract_attention_map(const ModelOutput& out, int gate_index) {
    const int n = static_cast<int>(out.attention_maps.size());
    if (gate_index == -1) gate_index = n - 1;
    if (gate_index < 0 || gate_index >= n)
        throw std::out_of_range("extract_attention_map: gate index " + std::to_string(gate_index) +
                                " out of range (have " + std::to_string(n) + " gates)");
    return out.attention_maps[static_cast<std::size_t>(gate_index)]->value;
}

namespace detail {

ConvBnRelu::ConvBnRelu(ParamStore& ps, Rng& rng, const std::string& name, int in_ch, int out_ch, int kernel,
                       int stride)
    : conv(ps, rng, name + ".conv", in_ch, out_ch, kernel, stride, kernel / 2), bn(ps, name + ".bn", out_ch) {}

Var ConvBnRelu::forward(const Var& x, bool training) const { return relu(bn.forward(conv.forward(x), training)); }

CnnBackbone::CnnBackbone(ParamStore& ps, Rng& rng, const std::string& name, const BackboneSpec& spec_)
    : spec(spec_) {
    int in_ch = 3;
    for (int k = 0; k < 4; ++k) {
        int out_ch = spec.stage_channels[k];
        std::string stage = name + ".stage" + std::to_string(k + 1);
        // first stage needs two stride-2 reductions to reach stride 4
        if (k == 0) {
            blocks.emplace_back(ps, rng, stage + ".0", in_ch, out_ch, 3, 2);
            blocks.emplace_back(ps, rng, stage + ".1", out_ch, out_ch, 3, 2);
        } else {
            blocks.emplace_back(ps, rng, stage + ".0", in_ch, out_ch, 3, 2);
            blocks.emplace_back(ps, rng, stage + ".1", out_ch, out_ch, 3, 1);
        }
        in_ch = out_ch;
    }
}

FeaturePyramid CnnBackbone::forward(const Var& image, bool training) const {
    FeaturePyramid pyr;
    pyr.strides = spec.stage_strides;
    Var x = image;
    for (int k = 0; k < 4; ++k) {
        x = blocks[static_cast<std::size_t>(2 * k)].forward(x, training);
        x = blocks[static_cast<std::size_t>(2 * k + 1)].forward(x, training);
        pyr.stages[k] = x;
    }
    return pyr;
}

SwinBackbone::SwinBackbone(ParamStore& ps, Rng& rng, const std::string& name, const BackboneSpec& spec_)
    : patch_embed(ps, rng, name + ".patch_embed", 3, spec_.stage_channels[0], 4, 4, 0),
      embed_norm(ps, name + ".embed_norm", spec_.stage_channels[0]),
      spec(spec_) {
    for (int k = 0; k < 4; ++k) {
        int dim = spec.stage_channels[k];
        if (k > 0) {
            int prev = spec.stage_channels[k - 1];
            check(dim == 2 * prev, "SwinBackbone: patch merging doubles channels; stage channels must follow");
            merge_norms.emplace_back(ps, name + ".merge" + std::to_string(k) + ".norm", 4 * prev);
            merge_reductions.emplace_back(ps, rng, name + ".merge" + std::to_string(k) + ".reduce", 4 * prev, dim,
                                          false);
        }
        for (int b = 0; b < spec.blocks_per_stage; ++b) {
            int shift = (b % 2 == 1) ? spec.window / 2 : 0;
            blocks.emplace_back(ps, rng, name + ".stage" + std::to_string(k + 1) + ".block" + std::to_string(b),
                                dim, spec.heads[k], spec.window, shift, spec.mlp_ratio);
        }
    }
}

FeaturePyramid SwinBackbone::forward(const Var& image, bool /*training*/) const {
    FeaturePyramid pyr;
    pyr.strides = spec.stage_strides;
    Var x = patch_embed.forward(image);  // stride 4
    {
        const auto& s = x->value.shape();
        Var t = nchw_to_nlc(x);
        t = embed_norm.forward(t);
        x = nlc_to_nchw(t, s[2], s[3]);
    }
    std::size_t block_idx = 0;
    for (int k = 0; k < 4; ++k) {
        if (k > 0) {
            const auto& s = x->value.shape();
            Var padded = (s[2] % 2 || s[3] % 2) ? pad2d(x, 0, s[2] % 2, 0, s[3] % 2) : x;
            Var quads = space_to_depth2(padded);
            const auto& qs = quads->value.shape();
            Var t = nchw_to_nlc(quads);
            t = merge_norms[static_cast<std::size_t>(k - 1)].forward(t);
            t = merge_reductions[static_cast<std::size_t>(k - 1)].forward(t);
            x = nlc_to_nchw(t, qs[2], qs[3]);
        }
        for (int b = 0; b < spec.blocks_per_stage; ++b) x = blocks[block_idx++].forward(x);
        pyr.stages[k] = x;
    }
    return pyr;
}

FusionBlock::FusionBlock(ParamStore& ps, Rng& rng, const std::string& name, int cnn_ch, int swin_ch, int out_ch)
    : conv(ps, rng, name + ".conv", cnn_ch + swin_ch, out_ch, 3, 1, 1),
      bn(ps, name + ".bn", out_ch),
      in_cnn(cnn_ch),
      in_swin(swin_ch) {}

Var FusionBlock::forward(const Var& f_cnn, const Var& f_swin, bool training) const {
    check(f_cnn->value.dim(1) == in_cnn && f_swin->value.dim(1) == in_swin,
          "FusionBlock: channel mismatch against parameters");
    Var swin_resized = bilinear_resize(f_swin, f_cnn->value.dim(2), f_cnn->value.dim(3));
    Var cat = concat_channels(swin_resized, f_cnn);
    return relu(bn.forward(conv.forward(cat), training));
}

AttentionGate::AttentionGate(ParamStore& ps, Rng& rng, const std::string& name, int skip_ch, int gate_ch,
                             int inter_ch)
    : align_g(ps, rng, name + ".align_g", gate_ch, skip_ch, 1, 1, 0),
      wg(ps, rng, name + ".wg", skip_ch, inter_ch, 1, 1, 0),
      wx(ps, rng, name + ".wx", skip_ch, inter_ch, 1, 1, 0),
      psi(ps, rng, name + ".psi", inter_ch, 1, 1, 1, 0) {}

std::pair<Var, Var> AttentionGate::forward(const Var& x, const Var& g) const {
    Var g_up = bilinear_resize(g, x->value.dim(2), x->value.dim(3));
    Var g_aligned = align_g.forward(g_up);
    return forward_aligned(x, g_aligned);
}

std::pair<Var, Var> AttentionGate::forward_aligned(const Var& x, const Var& g_aligned) const {
    check(g_aligned->value.dim(2) == x->value.dim(2) && g_aligned->value.dim(3) == x->value.dim(3),
          "AttentionGate: spatial mismatch after alignment");
    Var pre = relu(add(wg.forward(g_aligned), wx.forward(x)));
    Var alpha = sigmoid(psi.forward(pre));  // {N,1,H,W}
    Var gated = mul_channel_broadcast(x, alpha);
    return {gated, alpha};
}

DecoderBlock::DecoderBlock(ParamStore& ps, Rng& rng, const std::string& name, int in_ch, int skip_ch, int out_ch)
    : up(ps, rng, name + ".up", in_ch, out_ch, 2),
      gate(ps, rng, name + ".gate", skip_ch, in_ch, std::max(1, skip_ch / 2)),
      fuse(ps, rng, name + ".fuse", out_ch + skip_ch, out_ch, 3, 1) {}

std::pair<Var, Var> DecoderBlock::forward(const Var& d, const Var& skip, bool training) const {
    auto [gated_skip, alpha] = gate.forward(skip, d);
    Var upsampled = up.forward(d);
    Var out = fuse.forward(concat_channels(upsampled, gated_skip), training);
    return {out, alpha};
}

UpBlock::UpBlock(ParamStore& ps, Rng& rng, const std::string& name, int in_ch, int out_ch)
    : up(ps, rng, name + ".up", in_ch, out_ch, 2), conv(ps, rng, name + ".conv", out_ch, out_ch, 3, 1) {}

Var UpBlock::forward(const Var& x, bool training) const { return conv.forward(up.forward(x), training); }

}  // namespace detail

HyFormerNet::HyFormerNet(ModelConfig config, std::uint64_t seed) : config_(std::move(config)), seed_(seed) {
    config_.validate();
    Rng rng(seed);
    cnn_ = detail::CnnBackbone(params_, rng, "cnn", config_.cnn);
    swin_ = detail::SwinBackbone(params_, rng, "swin", config_.swin);
    for (int k = 0; k < 4; ++k)
        fusion_.emplace_back(params_, rng, "fusion" + std::to_string(k + 1), config_.cnn.stage_channels[k],
                             config_.swin.stage_channels[k], config_.fusion_channels[k]);
    // gated decoder blocks consume skips from fusion stages 3, 2, 1
    int in_ch = config_.fusion_channels[3];
    for (int i = 0; i < 3; ++i) {
        int skip_stage = 2 - i;  // fusion index of the skip
        dec_blocks_.emplace_back(params_, rng, "decoder" + std::to_string(i + 1), in_ch,
                                 config_.fusion_channels[skip_stage], config_.decoder_channels[i]);
        in_ch = config_.decoder_channels[i];
    }
    up_blocks_.emplace_back(params_, rng, "up1", in_ch, config_.final_channels[0]);
    up_blocks_.emplace_back(params_, rng, "up2", config_.final_channels[0], config_.final_channels[1]);
    seg_head_ = nn::Conv2d(params_, rng, "seg_head", config_.final_channels[1], 1, 1, 1, 0);
    cls_fc1_ = nn::Linear(params_, rng, "cls.fc1", config_.fusion_channels[3], config_.cls_hidden);
    cls_fc2_ = nn::Linear(params_, rng, "cls.fc2", config_.cls_hidden, config_.num_classes);
}

FeaturePyramid HyFormerNet::cnn_branch_forward(const Var& image, bool training) const {
    const auto& s = image->value.shape();
    check(s.size() == 4 && s[1] == 3, "cnn_branch_forward: {N,3,H,W} expected");
    check(s[2] % 32 == 0 && s[3] % 32 == 0, "input spatial size must be divisible by 32");
    return cnn_.forward(image, training);
}

FeaturePyramid HyFormerNet::transformer_branch_forward(const Var& image, bool training) const {
    const auto& s = image->value.shape();
    check(s.size() == 4 && s[1] == 3, "transformer_branch_forward: {N,3,H,W} expected");
    check(s[2] % 32 == 0 && s[3] % 32 == 0, "input spatial size must be divisible by 32");
    return swin_.forward(image, training);
}

FeaturePyramid HyFormerNet::fuse_pyramids(const FeaturePyramid& cnn, const FeaturePyramid& swin,
                                          bool training) const {
    FeaturePyramid fused;
    fused.strides = cnn.strides;
    for (int k = 0; k < 4; ++k)
        fused.stages[k] = fusion_[static_cast<std::size_t>(k)].forward(cnn.stages[k], swin.stages[k], training);
    return fused;
}

std::pair<Var, std::vector<Var>> HyFormerNet::decoder_forward(const FeaturePyramid& fused, bool training) const {
    for (const auto& st : fused.stages) check(st != nullptr, "decoder_forward: missing pyramid stage");
    Var d = fused.stages[3];  // bottleneck at stride 32
    std::vector<Var> alphas;
    for (int i = 0; i < 3; ++i) {
        auto [next, alpha] = dec_blocks_[static_cast<std::size_t>(i)].forward(d, fused.stages[2 - i], training);
        d = next;
        alphas.push_back(alpha);
    }
    for (const auto& blk : up_blocks_) d = blk.forward(d, training);
    return {d, alphas};
}

Var HyFormerNet::segmentation_head(const Var& d1) const { return sigmoid(seg_head_.forward(d1)); }

Var HyFormerNet::classification_logits(const Var& bottleneck) const {
    Var pooled = global_avg_pool(bottleneck);
    return cls_fc2_.forward(relu(cls_fc1_.forward(pooled)));
}

ModelOutput HyFormerNet::forward(const Var& image, bool training) const {
    FeaturePyramid cnn = cnn_branch_forward(image, training);
    FeaturePyramid swin = transformer_branch_forward(image, training);
    FeaturePyramid fused = fuse_pyramids(cnn, swin, training);
    auto [d1, alphas] = decoder_forward(fused, training);
    ModelOutput out;
    out.bottleneck = fused.stages[3];
    out.seg_probs = segmentation_head(d1);
    out.class_logits = classification_logits(fused.stages[3]);
    out.class_probs = softmax_lastdim(out.class_logits);
    out.attention_maps = std::move(alphas);
    return out;
}

ModelOutput HyFormerNet::forward(const Tensor& images, bool training) const {
    return forward(make_const(images), training);
}

std::vector<std::pair<std::string, Tensor>> HyFormerNet::state_dict() const {
    std::vector<std::pair<std::string, Tensor>> state;
    state.reserve(params_.params.size() + params_.buffers.size());
    for (const auto& [name, v] : params_.params) state.emplace_back(name, v->value);
    for (const auto& [name, t] : params_.buffers) state.emplace_back(name, *t);
    return state;
}

void HyFormerNet::load_state_dict(const std::vector<std::pair<std::string, Tensor>>& state) {
    std::size_t i = 0;
    check(state.size() == params_.params.size() + params_.buffers.size(),
          "load_state_dict: entry count mismatch");
    for (auto& [name, v] : params_.params) {
        check(state[i].first == name && state[i].second.same_shape(v->value),
              "load_state_dict: mismatch at " + name);
        v->value = state[i++].second;
    }
    for (auto& [name, t] : params_.buffers) {
        check(state[i].first == name && state[i].second.same_shape(*t), "load_state_dict: mismatch at " + name);
        *t = state[i++].second;
    }
}

void HyFormerNet::set_capture_attention(bool on) {
    for (auto& blk : swin_.blocks) blk.attn.capture_attention = on;
}

std::vector<Tensor> HyFormerNet::captured_attention() const {
    std::vector<Tensor> out;
    for (const auto& blk : swin_.blocks)
        if (!blk.attn.last_attention.empty()) out.push_back(blk.attn.last_attention);
    return out;
}

}  // namespace hyformer
