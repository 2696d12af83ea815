#include "hyformer/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hyformer::data {

using nn::check;

std::string to_string(Interp i) {
    switch (i) {
        case Interp::Bicubic: return "bicubic";
        case Interp::Bilinear: return "bilinear";
        case Interp::Nearest: return "nearest";
    }
    return "?";
}

Interp interp_from_string(const std::string& s) {
    if (s == "bicubic") return Interp::Bicubic;
    if (s == "bilinear") return Interp::Bilinear;
    if (s == "nearest") return Interp::Nearest;
    throw std::invalid_argument("unknown interpolation: " + s);
}

namespace {

// Keys cubic convolution kernel, a = -0.5.
double cubic_weight(double t) {
    constexpr double a = -0.5;
    t = std::abs(t);
    if (t <= 1.0) return (a + 2.0) * t * t * t - (a + 3.0) * t * t + 1.0;
    if (t < 2.0) return a * t * t * t - 5.0 * a * t * t + 8.0 * a * t - 4.0 * a;
    return 0.0;
}

inline double src_center(int o, int out_size, int in_size) {
    return (o + 0.5) * static_cast<double>(in_size) / out_size - 0.5;
}

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

double sample_bilinear(const Tensor& chw, int c, double sy, double sx, int H, int W) {
    sy = std::clamp(sy, 0.0, static_cast<double>(H - 1));
    sx = std::clamp(sx, 0.0, static_cast<double>(W - 1));
    int y0 = static_cast<int>(std::floor(sy)), x0 = static_cast<int>(std::floor(sx));
    int y1 = std::min(y0 + 1, H - 1), x1 = std::min(x0 + 1, W - 1);
    double wy = sy - y0, wx = sx - x0;
    double v00 = chw.at3(c, y0, x0), v01 = chw.at3(c, y0, x1);
    double v10 = chw.at3(c, y1, x0), v11 = chw.at3(c, y1, x1);
    return (1 - wy) * ((1 - wx) * v00 + wx * v01) + wy * ((1 - wx) * v10 + wx * v11);
}

double sample_bicubic(const Tensor& chw, int c, double sy, double sx, int H, int W) {
    int iy = static_cast<int>(std::floor(sy)), ix = static_cast<int>(std::floor(sx));
    double acc = 0.0;
    for (int dy = -1; dy <= 2; ++dy) {
        double wy = cubic_weight(sy - (iy + dy));
        if (wy == 0.0) continue;
        int y = clampi(iy + dy, 0, H - 1);
        for (int dx = -1; dx <= 2; ++dx) {
            double wx = cubic_weight(sx - (ix + dx));
            if (wx == 0.0) continue;
            int x = clampi(ix + dx, 0, W - 1);
            acc += wy * wx * chw.at3(c, y, x);
        }
    }
    return acc;
}

}  // namespace

Tensor resize_image(const Tensor& chw, int out_h, int out_w, Interp interp) {
    const auto& s = chw.shape();
    check(s.size() == 3, "resize_image: {C,H,W} expected");
    check(s[1] > 0 && s[2] > 0 && out_h > 0 && out_w > 0, "resize_image: degenerate size");
    const int C = s[0], H = s[1], W = s[2];
    if (H == out_h && W == out_w) return chw;
    Tensor out({C, out_h, out_w});
    for (int oy = 0; oy < out_h; ++oy) {
        double sy = src_center(oy, out_h, H);
        for (int ox = 0; ox < out_w; ++ox) {
            double sx = src_center(ox, out_w, W);
            for (int c = 0; c < C; ++c) {
                double v;
                switch (interp) {
                    case Interp::Nearest:
                        v = chw.at3(c, clampi(static_cast<int>(std::floor(sy + 0.5)), 0, H - 1), clampi(static_cast<int>(std::floor(sx + 0.5)), 0, W - 1));
                        break;
                    case Interp::Bilinear:
                        v = sample_bilinear(chw, c, sy, sx, H, W);
                        break;
                    default:
                        v = std::clamp(sample_bicubic(chw, c, sy, sx, H, W), 0.0, 1.0);
                }
                out.at3(c, oy, ox) = v;
            }
        }
    }
    return out;
}

Tensor resize_mask(const Tensor& mask, int out_h, int out_w) {
    const auto& s = mask.shape();
    check(s.size() == 2, "resize_mask: {H,W} expected");
    check(s[0] > 0 && s[1] > 0 && out_h > 0 && out_w > 0, "resize_mask: degenerate size");
    const int H = s[0], W = s[1];
    if (H == out_h && W == out_w) return mask;
    Tensor out({out_h, out_w});
    for (int oy = 0; oy < out_h; ++oy) {
        int sy = clampi(static_cast<int>(std::floor(src_center(oy, out_h, H) + 0.5)), 0, H - 1);
        for (int ox = 0; ox < out_w; ++ox) {
            int sx = clampi(static_cast<int>(std::floor(src_center(ox, out_w, W) + 0.5)), 0, W - 1);
            out.at2(oy, ox) = mask.at2(sy, sx) >= 0.5 ? 1.0 : 0.0;
        }
    }
    return out;
}

Tensor hflip_image(const Tensor& chw) {
    const auto& s = chw.shape();
    Tensor out(s);
    for (int c = 0; c < s[0]; ++c)
        for (int y = 0; y < s[1]; ++y)
            for (int x = 0; x < s[2]; ++x) out.at3(c, y, x) = chw.at3(c, y, s[2] - 1 - x);
    return out;
}

Tensor vflip_image(const Tensor& chw) {
    const auto& s = chw.shape();
    Tensor out(s);
    for (int c = 0; c < s[0]; ++c)
        for (int y = 0; y < s[1]; ++y)
            for (int x = 0; x < s[2]; ++x) out.at3(c, y, x) = chw.at3(c, s[1] - 1 - y, x);
    return out;
}

Tensor hflip_mask(const Tensor& mask) {
    const auto& s = mask.shape();
    Tensor out(s);
    for (int y = 0; y < s[0]; ++y)
        for (int x = 0; x < s[1]; ++x) out.at2(y, x) = mask.at2(y, s[1] - 1 - x);
    return out;
}

Tensor vflip_mask(const Tensor& mask) {
    const auto& s = mask.shape();
    Tensor out(s);
    for (int y = 0; y < s[0]; ++y)
        for (int x = 0; x < s[1]; ++x) out.at2(y, x) = mask.at2(s[0] - 1 - y, x);
    return out;
}

namespace {
// Inverse-map target pixel to source coordinates for a rotation about the
// image center.
inline void rotate_src(double i, double j, double cy, double cx, double cos_t, double sin_t, double& sy,
                       double& sx) {
    double dy = i - cy, dx = j - cx;
    sy = cos_t * dy + sin_t * dx + cy;
    sx = -sin_t * dy + cos_t * dx + cx;
}
}  // namespace

Tensor rotate_image(const Tensor& chw, double degrees) {
    const auto& s = chw.shape();
    const int C = s[0], H = s[1], W = s[2];
    const double t = degrees * 3.14159265358979323846 / 180.0;
    const double cos_t = std::cos(t), sin_t = std::sin(t);
    const double cy = (H - 1) / 2.0, cx = (W - 1) / 2.0;
    Tensor out({C, H, W});
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) {
            double sy, sx;
            rotate_src(i, j, cy, cx, cos_t, sin_t, sy, sx);
            if (sy < 0 || sy > H - 1 || sx < 0 || sx > W - 1) continue;  // zero fill
            for (int c = 0; c < C; ++c) out.at3(c, i, j) = sample_bilinear(chw, c, sy, sx, H, W);
        }
    return out;
}

Tensor rotate_mask(const Tensor& mask, double degrees) {
    const auto& s = mask.shape();
    const int H = s[0], W = s[1];
    const double t = degrees * 3.14159265358979323846 / 180.0;
    const double cos_t = std::cos(t), sin_t = std::sin(t);
    const double cy = (H - 1) / 2.0, cx = (W - 1) / 2.0;
    Tensor out({H, W});
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) {
            double sy, sx;
            rotate_src(i, j, cy, cx, cos_t, sin_t, sy, sx);
            int y = static_cast<int>(std::floor(sy + 0.5)), x = static_cast<int>(std::floor(sx + 0.5));
            if (y < 0 || y >= H || x < 0 || x >= W) continue;
            out.at2(i, j) = mask.at2(y, x) >= 0.5 ? 1.0 : 0.0;
        }
    return out;
}

Tensor normalize_image(const Tensor& chw, const std::array<double, 3>& mean,
                       const std::array<double, 3>& stddev) {
    const auto& s = chw.shape();
    check(s.size() == 3 && s[0] == 3, "normalize_image: {3,H,W} expected");
    Tensor out = chw;
    for (int c = 0; c < 3; ++c) {
        check(stddev[static_cast<std::size_t>(c)] > 0, "normalize_image: std must be positive");
        double m = mean[static_cast<std::size_t>(c)], sd = stddev[static_cast<std::size_t>(c)];
        for (int y = 0; y < s[1]; ++y)
            for (int x = 0; x < s[2]; ++x) out.at3(c, y, x) = (out.at3(c, y, x) - m) / sd;
    }
    return out;
}

}  // namespace hyformer::data
