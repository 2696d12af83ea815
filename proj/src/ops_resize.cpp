#include <algorithm>
#include <cmath>

#include "hyformer/ops.hpp"

namespace hyformer::nn {

namespace {
// Half-pixel-center source coordinate, clamped into the valid range.
inline void src_coord(int o, int out_size, int in_size, int& i0, int& i1, double& w1) {
    double s = (o + 0.5) * static_cast<double>(in_size) / out_size - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(in_size - 1));
    i0 = static_cast<int>(std::floor(s));
    i1 = std::min(i0 + 1, in_size - 1);
    w1 = s - i0;
}
}  // namespace

Tensor bilinear_resize_plain(const Tensor& x, int out_h, int out_w) {
    const auto& s = x.shape();
    check(s.size() == 4, "bilinear_resize: NCHW expected");
    const int N = s[0], C = s[1], H = s[2], W = s[3];
    if (H == out_h && W == out_w) return x;
    Tensor y({N, C, out_h, out_w});
    for (int oy = 0; oy < out_h; ++oy) {
        int y0, y1;
        double wy;
        src_coord(oy, out_h, H, y0, y1, wy);
        for (int ox = 0; ox < out_w; ++ox) {
            int x0, x1;
            double wx;
            src_coord(ox, out_w, W, x0, x1, wx);
            for (int n = 0; n < N; ++n)
                for (int c = 0; c < C; ++c) {
                    double v00 = x.at4(n, c, y0, x0), v01 = x.at4(n, c, y0, x1);
                    double v10 = x.at4(n, c, y1, x0), v11 = x.at4(n, c, y1, x1);
                    y.at4(n, c, oy, ox) =
                        (1 - wy) * ((1 - wx) * v00 + wx * v01) + wy * ((1 - wx) * v10 + wx * v11);
                }
        }
    }
    return y;
}

Var bilinear_resize(const Var& x, int out_h, int out_w) {
    const auto& s = x->value.shape();
    check(s.size() == 4, "bilinear_resize: NCHW expected");
    const int N = s[0], C = s[1], H = s[2], W = s[3];
    if (H == out_h && W == out_w) {
        // identity resize: pass-through node keeps the graph connected
        Tensor y = x->value;
        return make_node(std::move(y), {x}, [](Node& n) {
            Tensor& pg = n.parents[0]->ensure_grad();
            for (std::int64_t i = 0; i < n.grad.numel(); ++i) pg[i] += n.grad[i];
        });
    }
    Tensor y = bilinear_resize_plain(x->value, out_h, out_w);
    return make_node(std::move(y), {x}, [N, C, H, W, out_h, out_w](Node& n) {
        Tensor& pg = n.parents[0]->ensure_grad();
        for (int oy = 0; oy < out_h; ++oy) {
            int y0, y1;
            double wy;
            src_coord(oy, out_h, H, y0, y1, wy);
            for (int ox = 0; ox < out_w; ++ox) {
                int x0, x1;
                double wx;
                src_coord(ox, out_w, W, x0, x1, wx);
                for (int b = 0; b < N; ++b)
                    for (int c = 0; c < C; ++c) {
                        double g = n.grad.at4(b, c, oy, ox);
                        pg.at4(b, c, y0, x0) += g * (1 - wy) * (1 - wx);
                        pg.at4(b, c, y0, x1) += g * (1 - wy) * wx;
                        pg.at4(b, c, y1, x0) += g * wy * (1 - wx);
                        pg.at4(b, c, y1, x1) += g * wy * wx;
                    }
            }
        }
    });
}

}  // namespace hyformer::nn
