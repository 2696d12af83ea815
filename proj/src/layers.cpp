#include "hyformer/layers.hpp"

#include <cmath>

namespace hyformer::nn {

Tensor init_kaiming(std::vector<int> shape, int fan_in, Rng& rng) {
    Tensor t(shape);
    const double stddev = std::sqrt(2.0 / std::max(1, fan_in));
    for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = rng.normal(0.0, stddev);
    return t;
}

Tensor init_xavier(std::vector<int> shape, int fan_in, int fan_out, Rng& rng) {
    Tensor t(shape);
    const double limit = std::sqrt(6.0 / std::max(1, fan_in + fan_out));
    for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-limit, limit);
    return t;
}

Conv2d::Conv2d(ParamStore& ps, Rng& rng, const std::string& name, int in_ch, int out_ch, int kernel,
               int stride_, int pad_)
    : stride(stride_), pad(pad_) {
    w = ps.add_param(name + ".weight", init_kaiming({out_ch, in_ch, kernel, kernel}, in_ch * kernel * kernel, rng));
    b = ps.add_param(name + ".bias", Tensor({out_ch}));
}

ConvTranspose2d::ConvTranspose2d(ParamStore& ps, Rng& rng, const std::string& name, int in_ch, int out_ch,
                                 int stride_)
    : stride(stride_) {
    w = ps.add_param(name + ".weight", init_kaiming({in_ch, out_ch, stride_, stride_}, in_ch, rng));
    b = ps.add_param(name + ".bias", Tensor({out_ch}));
}

BatchNorm2d::BatchNorm2d(ParamStore& ps, const std::string& name, int channels) {
    gamma = ps.add_param(name + ".gamma", Tensor({channels}, 1.0));
    beta = ps.add_param(name + ".beta", Tensor({channels}));
    running_mean = ps.add_buffer(name + ".running_mean", Tensor({channels}));
    running_var = ps.add_buffer(name + ".running_var", Tensor({channels}, 1.0));
}

Var BatchNorm2d::forward(const Var& x, bool training) const {
    if (!training) return batchnorm2d_eval(x, gamma, beta, *running_mean, *running_var, eps);
    Tensor mean, var;
    Var y = batchnorm2d_train(x, gamma, beta, eps, &mean, &var);
    const auto& s = x->value.shape();
    const double m = static_cast<double>(s[0]) * s[2] * s[3];
    const double unbias = m > 1.0 ? m / (m - 1.0) : 1.0;
    for (std::int64_t c = 0; c < mean.numel(); ++c) {
        (*running_mean)[c] = (1.0 - momentum) * (*running_mean)[c] + momentum * mean[c];
        (*running_var)[c] = (1.0 - momentum) * (*running_var)[c] + momentum * var[c] * unbias;
    }
    return y;
}

LayerNorm::LayerNorm(ParamStore& ps, const std::string& name, int dim) {
    gamma = ps.add_param(name + ".gamma", Tensor({dim}, 1.0));
    beta = ps.add_param(name + ".beta", Tensor({dim}));
}

Linear::Linear(ParamStore& ps, Rng& rng, const std::string& name, int in_dim, int out_dim, bool bias) {
    w = ps.add_param(name + ".weight", init_xavier({in_dim, out_dim}, in_dim, out_dim, rng));
    if (bias) b = ps.add_param(name + ".bias", Tensor({out_dim}));
}

WindowAttention::WindowAttention(ParamStore& ps, Rng& rng, const std::string& name, int dim_, int heads_)
    : qkv(ps, rng, name + ".qkv", dim_, 3 * dim_),
      proj(ps, rng, name + ".proj", dim_, dim_),
      dim(dim_),
      heads(heads_),
      head_dim(dim_ / heads_) {
    check(dim_ % heads_ == 0, "WindowAttention: dim must divide by heads");
}

Var WindowAttention::forward(const Var& tokens, const Tensor* mask) const {
    const auto& s = tokens->value.shape();
    check(s.size() == 3 && s[2] == dim, "WindowAttention: token shape mismatch");
    const int B = s[0], L = s[1];

    Var qkv_out = qkv.forward(tokens);  // {B, L, 3C}
    // split into per-head {B*heads, L, head_dim}; layout b*heads + h
    auto split_head = [&](int which) {
        Tensor t({B * heads, L, head_dim});
        for (int b = 0; b < B; ++b)
            for (int l = 0; l < L; ++l)
                for (int h = 0; h < heads; ++h)
                    for (int d = 0; d < head_dim; ++d)
                        t.at3(b * heads + h, l, d) =
                            qkv_out->value.at3(b, l, which * dim + h * head_dim + d);
        int Bh = B, Lh = L, hd = head_dim, hh = heads, dd = dim;
        return make_node(std::move(t), {qkv_out}, [Bh, Lh, hd, hh, dd, which](Node& n) {
            Tensor& pg = n.parents[0]->ensure_grad();
            for (int b = 0; b < Bh; ++b)
                for (int l = 0; l < Lh; ++l)
                    for (int h = 0; h < hh; ++h)
                        for (int d = 0; d < hd; ++d)
                            pg.at3(b, l, which * dd + h * hd + d) += n.grad.at3(b * hh + h, l, d);
        });
    };
    Var q = split_head(0), k = split_head(1), v = split_head(2);

    Var scores = bmm(scale(q, 1.0 / std::sqrt(static_cast<double>(head_dim))), transpose_last2(k));
    if (mask) scores = add_window_mask(scores, *mask, heads);
    Var attn = softmax_lastdim(scores);
    if (capture_attention) last_attention = attn->value;
    Var ctx = bmm(attn, v);  // {B*heads, L, head_dim}

    // merge heads back to {B, L, C}
    Tensor merged({B, L, dim});
    for (int b = 0; b < B; ++b)
        for (int l = 0; l < L; ++l)
            for (int h = 0; h < heads; ++h)
                for (int d = 0; d < head_dim; ++d)
                    merged.at3(b, l, h * head_dim + d) = ctx->value.at3(b * heads + h, l, d);
    int Bh = B, Lh = L, hd = head_dim, hh = heads;
    Var out = make_node(std::move(merged), {ctx}, [Bh, Lh, hd, hh](Node& n) {
        Tensor& pg = n.parents[0]->ensure_grad();
        for (int b = 0; b < Bh; ++b)
            for (int l = 0; l < Lh; ++l)
                for (int h = 0; h < hh; ++h)
                    for (int d = 0; d < hd; ++d) pg.at3(b * hh + h, l, d) += n.grad.at3(b, l, h * hd + d);
    });
    return proj.forward(out);
}

SwinBlock::SwinBlock(ParamStore& ps, Rng& rng, const std::string& name, int dim, int heads, int window_,
                     int shift_, double mlp_ratio)
    : ln1(ps, name + ".ln1", dim),
      ln2(ps, name + ".ln2", dim),
      attn(ps, rng, name + ".attn", dim, heads),
      fc1(ps, rng, name + ".mlp.fc1", dim, static_cast<int>(dim * mlp_ratio)),
      fc2(ps, rng, name + ".mlp.fc2", static_cast<int>(dim * mlp_ratio), dim),
      window(window_),
      shift(shift_) {}

Tensor make_window_mask(int h, int w, int hp, int wp, int window, int shift) {
    // Region ids over the padded map; -1 marks padding. Tokens may only
    // attend within their own region.
    std::vector<int> region(static_cast<std::size_t>(hp) * wp, -1);
    auto region_of = [&](int coord, int size) {
        if (shift == 0) return 0;
        if (coord < size - window) return 0;
        if (coord < size - shift) return 1;
        return 2;
    };
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) region[static_cast<std::size_t>(i) * wp + j] = region_of(i, h) * 3 + region_of(j, w);
    if (shift > 0) {
        // cyclic shift of the id map mirrors the shift applied to features
        std::vector<int> shifted(region.size());
        for (int i = 0; i < hp; ++i)
            for (int j = 0; j < wp; ++j) {
                int si = ((i + shift) % hp + hp) % hp;
                int sj = ((j + shift) % wp + wp) % wp;
                shifted[static_cast<std::size_t>(i) * wp + j] = region[static_cast<std::size_t>(si) * wp + sj];
            }
        region.swap(shifted);
    }
    const int nwh = hp / window, nww = wp / window, L = window * window;
    Tensor mask({nwh * nww, L, L});
    constexpr double kNegInf = -1e9;
    for (int wy = 0; wy < nwh; ++wy)
        for (int wx = 0; wx < nww; ++wx) {
            int widx = wy * nww + wx;
            for (int a = 0; a < L; ++a) {
                int ra = region[static_cast<std::size_t>(wy * window + a / window) * wp + wx * window + a % window];
                for (int b = 0; b < L; ++b) {
                    int rb = region[static_cast<std::size_t>(wy * window + b / window) * wp + wx * window + b % window];
                    if (ra != rb || ra < 0) mask.at3(widx, a, b) = kNegInf;
                }
            }
        }
    return mask;
}

Var SwinBlock::forward(const Var& x_nchw) const {
    const auto& s = x_nchw->value.shape();
    const int N = s[0], H = s[2], W = s[3];
    check(H >= 1 && W >= 1, "SwinBlock: empty feature map");
    const int win = window;
    const int sh = (H > win || W > win) ? shift : 0;  // single window: shifting is a no-op
    const int hp = (H + win - 1) / win * win;
    const int wp = (W + win - 1) / win * win;

    Var tokens = nchw_to_nlc(x_nchw);
    Var normed = ln1.forward(tokens);
    Var fmap = nlc_to_nchw(normed, H, W);
    if (hp != H || wp != W) fmap = pad2d(fmap, 0, hp - H, 0, wp - W);
    if (sh > 0) fmap = roll2d(fmap, -sh, -sh);

    Tensor mask = make_window_mask(H, W, hp, wp, win, sh);
    Var windows = window_partition(fmap, win);
    Var attended = attn.forward(windows, &mask);
    Var restored = window_reverse(attended, N, hp, wp, win);
    if (sh > 0) restored = roll2d(restored, sh, sh);
    if (hp != H || wp != W) restored = crop2d(restored, 0, 0, H, W);

    Var x1 = add(tokens, nchw_to_nlc(restored));
    Var mlp_out = fc2.forward(gelu(fc1.forward(ln2.forward(x1))));
    Var x2 = add(x1, mlp_out);
    return nlc_to_nchw(x2, H, W);
}

}  // namespace hyformer::nn
