#include <Eigen/Core>

#include "hyformer/ops.hpp"

namespace hyformer::nn {

namespace {
using MatrixRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatrixRM>;
using MapC = Eigen::Map<const MatrixRM>;

void im2col(const double* x, int C, int H, int W, int kh, int kw, int stride, int pad, int Ho, int Wo,
            double* col) {
    // col layout: (C*kh*kw) x (Ho*Wo)
    for (int c = 0; c < C; ++c)
        for (int ki = 0; ki < kh; ++ki)
            for (int kj = 0; kj < kw; ++kj) {
                double* dst = col + (static_cast<std::int64_t>(c) * kh * kw + ki * kw + kj) * Ho * Wo;
                for (int oy = 0; oy < Ho; ++oy) {
                    int iy = oy * stride - pad + ki;
                    if (iy < 0 || iy >= H) {
                        for (int ox = 0; ox < Wo; ++ox) dst[oy * Wo + ox] = 0.0;
                        continue;
                    }
                    const double* src_row = x + (static_cast<std::int64_t>(c) * H + iy) * W;
                    for (int ox = 0; ox < Wo; ++ox) {
                        int ix = ox * stride - pad + kj;
                        dst[oy * Wo + ox] = (ix >= 0 && ix < W) ? src_row[ix] : 0.0;
                    }
                }
            }
}

void col2im_add(const double* col, int C, int H, int W, int kh, int kw, int stride, int pad, int Ho, int Wo,
                double* x) {
    for (int c = 0; c < C; ++c)
        for (int ki = 0; ki < kh; ++ki)
            for (int kj = 0; kj < kw; ++kj) {
                const double* src = col + (static_cast<std::int64_t>(c) * kh * kw + ki * kw + kj) * Ho * Wo;
                for (int oy = 0; oy < Ho; ++oy) {
                    int iy = oy * stride - pad + ki;
                    if (iy < 0 || iy >= H) continue;
                    double* dst_row = x + (static_cast<std::int64_t>(c) * H + iy) * W;
                    for (int ox = 0; ox < Wo; ++ox) {
                        int ix = ox * stride - pad + kj;
                        if (ix >= 0 && ix < W) dst_row[ix] += src[oy * Wo + ox];
                    }
                }
            }
}
}  // namespace

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
    const auto& xs = x->value.shape();
    const auto& ws = w->value.shape();
    check(xs.size() == 4 && ws.size() == 4, "conv2d: NCHW input and OIHW weight expected");
    check(xs[1] == ws[1], "conv2d: channel mismatch (input " + std::to_string(xs[1]) + ", weight expects " +
                              std::to_string(ws[1]) + ")");
    const int N = xs[0], C = xs[1], H = xs[2], W = xs[3];
    const int Co = ws[0], kh = ws[2], kw = ws[3];
    const int Ho = (H + 2 * pad - kh) / stride + 1;
    const int Wo = (W + 2 * pad - kw) / stride + 1;
    check(Ho > 0 && Wo > 0, "conv2d: output would be empty");
    const std::int64_t K = static_cast<std::int64_t>(C) * kh * kw;

    Tensor y({N, Co, Ho, Wo});
    std::vector<double> col(static_cast<std::size_t>(K) * Ho * Wo);
    MapC Wm(w->value.data(), Co, K);
    for (int n = 0; n < N; ++n) {
        im2col(x->value.data() + static_cast<std::int64_t>(n) * C * H * W, C, H, W, kh, kw, stride, pad, Ho, Wo,
               col.data());
        MapC Col(col.data(), K, static_cast<std::int64_t>(Ho) * Wo);
        MapM Y(y.data() + static_cast<std::int64_t>(n) * Co * Ho * Wo, Co, static_cast<std::int64_t>(Ho) * Wo);
        Y.noalias() = Wm * Col;
    }
    if (b) {
        check(b->value.numel() == Co, "conv2d: bias size mismatch");
        for (int n = 0; n < N; ++n)
            for (int c = 0; c < Co; ++c) {
                double* p = y.data() + (static_cast<std::int64_t>(n) * Co + c) * Ho * Wo;
                for (int i = 0; i < Ho * Wo; ++i) p[i] += b->value[c];
            }
    }

    std::vector<Var> parents = b ? std::vector<Var>{x, w, b} : std::vector<Var>{x, w};
    return make_node(std::move(y), std::move(parents),
                     [N, C, H, W, Co, kh, kw, stride, pad, Ho, Wo, K](Node& n) {
                         Node& xn = *n.parents[0];
                         Node& wn = *n.parents[1];
                         std::vector<double> col(static_cast<std::size_t>(K) * Ho * Wo);
                         std::vector<double> dcol;
                         MapC Wm(wn.value.data(), Co, K);
                         for (int i = 0; i < N; ++i) {
                             MapC G(n.grad.data() + static_cast<std::int64_t>(i) * Co * Ho * Wo, Co,
                                    static_cast<std::int64_t>(Ho) * Wo);
                             // im2col is recomputed instead of cached from forward.
                             im2col(xn.value.data() + static_cast<std::int64_t>(i) * C * H * W, C, H, W, kh, kw,
                                    stride, pad, Ho, Wo, col.data());
                             MapC Col(col.data(), K, static_cast<std::int64_t>(Ho) * Wo);
                             if (wn.requires_grad) {
                                 MapM WG(wn.ensure_grad().data(), Co, K);
                                 WG.noalias() += G * Col.transpose();
                             }
                             if (xn.requires_grad) {
                                 dcol.resize(static_cast<std::size_t>(K) * Ho * Wo);
                                 MapM DCol(dcol.data(), K, static_cast<std::int64_t>(Ho) * Wo);
                                 DCol.noalias() = Wm.transpose() * G;
                                 col2im_add(dcol.data(), C, H, W, kh, kw, stride, pad, Ho, Wo,
                                            xn.ensure_grad().data() + static_cast<std::int64_t>(i) * C * H * W);
                             }
                         }
                         if (n.parents.size() > 2 && n.parents[2]->requires_grad) {
                             Tensor& bg = n.parents[2]->ensure_grad();
                             for (int i = 0; i < N; ++i)
                                 for (int c = 0; c < Co; ++c) {
                                     const double* g =
                                         n.grad.data() + (static_cast<std::int64_t>(i) * Co + c) * Ho * Wo;
                                     double acc = 0.0;
                                     for (int k = 0; k < Ho * Wo; ++k) acc += g[k];
                                     bg[c] += acc;
                                 }
                         }
                     });
}

// Transposed convolution restricted to kernel == stride (non-overlapping
// upsampling blocks), which is all the decoder uses.
Var conv_transpose2d(const Var& x, const Var& w, const Var& b, int stride) {
    const auto& xs = x->value.shape();
    const auto& ws = w->value.shape();
    check(xs.size() == 4 && ws.size() == 4, "conv_transpose2d: NCHW input, IOHW weight expected");
    check(ws[2] == stride && ws[3] == stride, "conv_transpose2d: kernel must equal stride");
    check(xs[1] == ws[0], "conv_transpose2d: channel mismatch");
    const int N = xs[0], Ci = xs[1], H = xs[2], W = xs[3];
    const int Co = ws[1], k = stride;
    const int Ho = H * k, Wo = W * k;
    const std::int64_t HW = static_cast<std::int64_t>(H) * W;
    const std::int64_t M = static_cast<std::int64_t>(Co) * k * k;

    Tensor y({N, Co, Ho, Wo});
    std::vector<double> out(static_cast<std::size_t>(M) * HW);
    MapC Wm(w->value.data(), Ci, M);
    for (int n = 0; n < N; ++n) {
        MapC X(x->value.data() + static_cast<std::int64_t>(n) * Ci * HW, Ci, HW);
        MapM O(out.data(), M, HW);
        O.noalias() = Wm.transpose() * X;
        for (int co = 0; co < Co; ++co)
            for (int di = 0; di < k; ++di)
                for (int dj = 0; dj < k; ++dj) {
                    const double* src = out.data() + ((static_cast<std::int64_t>(co) * k + di) * k + dj) * HW;
                    for (int i = 0; i < H; ++i)
                        for (int j = 0; j < W; ++j)
                            y.at4(n, co, i * k + di, j * k + dj) = src[static_cast<std::int64_t>(i) * W + j];
                }
    }
    if (b) {
        check(b->value.numel() == Co, "conv_transpose2d: bias size mismatch");
        for (int n = 0; n < N; ++n)
            for (int c = 0; c < Co; ++c) {
                double* p = y.data() + (static_cast<std::int64_t>(n) * Co + c) * Ho * Wo;
                for (int i = 0; i < Ho * Wo; ++i) p[i] += b->value[c];
            }
    }

    std::vector<Var> parents = b ? std::vector<Var>{x, w, b} : std::vector<Var>{x, w};
    return make_node(std::move(y), std::move(parents), [N, Ci, H, W, Co, k, Ho, Wo, HW, M](Node& n) {
        Node& xn = *n.parents[0];
        Node& wn = *n.parents[1];
        std::vector<double> dg(static_cast<std::size_t>(M) * HW);
        MapC Wm(wn.value.data(), Ci, M);
        for (int i2 = 0; i2 < N; ++i2) {
            // gather grad into (Co*k*k, H*W) layout
            for (int co = 0; co < Co; ++co)
                for (int di = 0; di < k; ++di)
                    for (int dj = 0; dj < k; ++dj) {
                        double* dst = dg.data() + ((static_cast<std::int64_t>(co) * k + di) * k + dj) * HW;
                        for (int i = 0; i < H; ++i)
                            for (int j = 0; j < W; ++j)
                                dst[static_cast<std::int64_t>(i) * W + j] = n.grad.at4(i2, co, i * k + di, j * k + dj);
                    }
            MapC DG(dg.data(), M, HW);
            if (xn.requires_grad) {
                MapM XG(xn.ensure_grad().data() + static_cast<std::int64_t>(i2) * Ci * HW, Ci, HW);
                XG.noalias() += Wm * DG;
            }
            if (wn.requires_grad) {
                MapC X(xn.value.data() + static_cast<std::int64_t>(i2) * Ci * HW, Ci, HW);
                MapM WG(wn.ensure_grad().data(), Ci, M);
                WG.noalias() += X * DG.transpose();
            }
        }
        if (n.parents.size() > 2 && n.parents[2]->requires_grad) {
            Tensor& bg = n.parents[2]->ensure_grad();
            for (int i2 = 0; i2 < N; ++i2)
                for (int c = 0; c < Co; ++c) {
                    const double* g = n.grad.data() + (static_cast<std::int64_t>(i2) * Co + c) * Ho * Wo;
                    double acc = 0.0;
                    for (int p = 0; p < Ho * Wo; ++p) acc += g[p];
                    bg[c] += acc;
                }
        }
    });
}

}  // namespace hyformer::nn
