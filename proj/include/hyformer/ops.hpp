#pragma once

#include "hyformer/autograd.hpp"

namespace hyformer::nn {

// ---- elementwise / shape ----
Var add(const Var& a, const Var& b);           // same shape
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div_vars(const Var& a, const Var& b);
Var scale(const Var& x, double s);
Var add_scalar(const Var& x, double s);
Var relu(const Var& x);
Var sigmoid(const Var& x);
Var gelu(const Var& x);
Var softmax_lastdim(const Var& x);
Var reshape(const Var& x, std::vector<int> shape);

// ---- NCHW utilities ----
Var bias_add_channels(const Var& x, const Var& b);          // x {N,C,H,W}, b {C}
Var mul_channel_broadcast(const Var& x, const Var& a);      // a {N,1,H,W}
Var concat_channels(const Var& a, const Var& b);
Var pad2d(const Var& x, int top, int bottom, int left, int right);
Var crop2d(const Var& x, int top, int left, int out_h, int out_w);
Var roll2d(const Var& x, int dy, int dx);                   // cyclic
Var global_avg_pool(const Var& x);                          // -> {N,C}
Var sum_all(const Var& x);                                  // -> {1}
Var mean_all(const Var& x);                                 // -> {1}

// ---- token layout (windowed attention) ----
Var nchw_to_nlc(const Var& x);                              // {N,C,H,W} -> {N,H*W,C}
Var nlc_to_nchw(const Var& x, int h, int w);
Var window_partition(const Var& x, int win);                // {N,C,Hp,Wp} -> {N*nw, win*win, C}
Var window_reverse(const Var& x, int n, int hp, int wp, int win);
Var space_to_depth2(const Var& x);                          // {N,C,H,W} -> {N,4C,H/2,W/2}
Var add_window_mask(const Var& scores, const Tensor& mask, int heads);  // mask {nw,L,L}

// ---- linear algebra ----
Var linear(const Var& x, const Var& w, const Var& b);       // x {...,In}, w {In,Out}, b {Out} or null
Var bmm(const Var& a, const Var& b);                        // {B,M,K}x{B,K,N}
Var transpose_last2(const Var& x);                          // {B,M,N} -> {B,N,M}

// ---- convolutions ----
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);
Var conv_transpose2d(const Var& x, const Var& w, const Var& b, int stride);  // kernel == stride

// ---- normalization ----
// Training-mode batch norm; writes the batch statistics it used so the layer
// can maintain running estimates.
Var batchnorm2d_train(const Var& x, const Var& gamma, const Var& beta, double eps,
                      Tensor* batch_mean_out, Tensor* batch_var_out);
Var batchnorm2d_eval(const Var& x, const Var& gamma, const Var& beta,
                     const Tensor& running_mean, const Tensor& running_var, double eps);
Var layernorm_lastdim(const Var& x, const Var& gamma, const Var& beta, double eps);

// ---- resampling ----
Var bilinear_resize(const Var& x, int out_h, int out_w);    // NCHW, half-pixel centers

// Non-graph helper shared with the data pipeline and interpretability code.
Tensor bilinear_resize_plain(const Tensor& x, int out_h, int out_w);

}  // namespace hyformer::nn
