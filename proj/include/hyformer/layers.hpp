#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "hyformer/ops.hpp"
#include "hyformer/rand.hpp"

namespace hyformer::nn {

using Rng = RandomSource;

// Registry of learnable parameters and persistent buffers (BN running
// statistics). Registration order is the canonical order for the optimizer
// and checkpoint layout.
struct ParamStore {
    std::vector<std::pair<std::string, Var>> params;
    std::vector<std::pair<std::string, std::shared_ptr<Tensor>>> buffers;

    Var add_param(const std::string& name, Tensor init) {
        auto v = make_leaf(std::move(init), true, name);
        params.emplace_back(name, v);
        return v;
    }
    std::shared_ptr<Tensor> add_buffer(const std::string& name, Tensor init) {
        auto t = std::make_shared<Tensor>(std::move(init));
        buffers.emplace_back(name, t);
        return t;
    }
    std::vector<Var> param_vars() const {
        std::vector<Var> out;
        out.reserve(params.size());
        for (const auto& [name, v] : params) out.push_back(v);
        return out;
    }
    std::int64_t total_params() const {
        std::int64_t n = 0;
        for (const auto& [name, v] : params) n += v->value.numel();
        return n;
    }
};

Tensor init_kaiming(std::vector<int> shape, int fan_in, Rng& rng);
Tensor init_xavier(std::vector<int> shape, int fan_in, int fan_out, Rng& rng);

struct Conv2d {
    Var w, b;
    int stride = 1, pad = 1;
    Conv2d() = default;
    Conv2d(ParamStore& ps, Rng& rng, const std::string& name, int in_ch, int out_ch, int kernel, int stride,
           int pad);
    Var forward(const Var& x) const { return conv2d(x, w, b, stride, pad); }
};

struct ConvTranspose2d {
    Var w, b;
    int stride = 2;
    ConvTranspose2d() = default;
    ConvTranspose2d(ParamStore& ps, Rng& rng, const std::string& name, int in_ch, int out_ch, int stride);
    Var forward(const Var& x) const { return conv_transpose2d(x, w, b, stride); }
};

struct BatchNorm2d {
    Var gamma, beta;
    std::shared_ptr<Tensor> running_mean, running_var;
    double eps = 1e-5;
    double momentum = 0.1;
    BatchNorm2d() = default;
    BatchNorm2d(ParamStore& ps, const std::string& name, int channels);
    Var forward(const Var& x, bool training) const;
};

struct LayerNorm {
    Var gamma, beta;
    double eps = 1e-5;
    LayerNorm() = default;
    LayerNorm(ParamStore& ps, const std::string& name, int dim);
    Var forward(const Var& x) const { return layernorm_lastdim(x, gamma, beta, eps); }
};

struct Linear {
    Var w, b;
    Linear() = default;
    Linear(ParamStore& ps, Rng& rng, const std::string& name, int in_dim, int out_dim, bool bias = true);
    Var forward(const Var& x) const { return linear(x, w, b); }
};

// Multi-head self-attention within fixed windows. Input tokens are
// {num_windows*N, win*win, C}; an additive mask separates regions that must
// not attend to each other (shifted windows, padding).
struct WindowAttention {
    Linear qkv, proj;
    int dim = 0, heads = 1, head_dim = 0;
    mutable bool capture_attention = false;
    mutable Tensor last_attention;  // {B*heads, L, L} rows are probability distributions

    WindowAttention() = default;
    WindowAttention(ParamStore& ps, Rng& rng, const std::string& name, int dim, int heads);
    Var forward(const Var& tokens, const Tensor* mask) const;
};

struct SwinBlock {
    LayerNorm ln1, ln2;
    WindowAttention attn;
    Linear fc1, fc2;
    int window = 7;
    int shift = 0;  // 0 = regular partition, window/2 = shifted

    SwinBlock() = default;
    SwinBlock(ParamStore& ps, Rng& rng, const std::string& name, int dim, int heads, int window, int shift,
              double mlp_ratio);
    Var forward(const Var& x_nchw) const;
};

// Additive attention mask for one padded feature map: {nw, L, L} with 0 for
// allowed pairs and a large negative value for pairs crossing shifted-window
// region boundaries or touching padding.
Tensor make_window_mask(int h, int w, int hp, int wp, int window, int shift);

}  // namespace hyformer::nn
