#include <cmath>

#include "hyformer/ops.hpp"

namespace hyformer::nn {

namespace {
constexpr double kPi = 3.14159265358979323846;

void accumulate(Node& parent, const Tensor& g) {
    Tensor& pg = parent.ensure_grad();
    const std::int64_t n = g.numel();
    for (std::int64_t i = 0; i < n; ++i) pg[i] += g[i];
}
}  // namespace

Var add(const Var& a, const Var& b) {
    check(a->value.same_shape(b->value), "add: shape mismatch " + a->value.shape_str() + " vs " + b->value.shape_str());
    Tensor y = a->value;
    for (std::int64_t i = 0; i < y.numel(); ++i) y[i] += b->value[i];
    return make_node(std::move(y), {a, b}, [](Node& n) {
        if (n.parents[0]->requires_grad) accumulate(*n.parents[0], n.grad);
        if (n.parents[1]->requires_grad) accumulate(*n.parents[1], n.grad);
    });
}

Var sub(const Var& a, const Var& b) {
    check(a->value.same_shape(b->value), "sub: shape mismatch");
    Tensor y = a->value;
    for (std::int64_t i = 0; i < y.numel(); ++i) y[i] -= b->value[i];
    return make_node(std::move(y), {a, b}, [](Node& n) {
        if (n.parents[0]->requires_grad) accumulate(*n.parents[0], n.grad);
        if (n.parents[1]->requires_grad) {
            Tensor& pg = n.parents[1]->ensure_grad();
            for (std::int64_t i = 0; i < n.grad.numel(); ++i) pg[i] -= n.grad[i];
        }
    });
}

Var mul(const Var& a, const Var& b) {
    check(a->value.same_shape(b->value), "mul: shape mismatch");
    Tensor y = a->value;
    for (std::int64_t i = 0; i < y.numel(); ++i) y[i] *= b->value[i];
    return make_node(std::move(y), {a, b}, [](Node& n) {
        const Tensor& av = n.parents[0]->value;
        const Tensor& bv = n.parents[1]->value;
        if (n.parents[0]->requires_grad) {
            Tensor& pg = n.parents[0]->ensure_grad();
            for (std::int64_t i = 0; i < n.grad.numel(); ++i) pg[i] += n.grad[i] * bv[i];
        }
        if (n.parents[1]->requires_grad) {
            Tensor& pg = n.parents[1]->ensure_grad();
            for (std::int64_t i = 0; i < n.grad.numel(); ++i) pg[i] += n.grad[i] * av[i];
        }
    });
}

Var div_vars(const Var& a, const Var& b) {
    check(a->value.same_shape(b->value), "div: shape mismatch");
    Tensor y = a->value;
    for (std::int64_t i = 0; i < y.numel(); ++i) y[i] /= b->value[i];
    return make_node(std::move(y), {a, b}, [](Node& n) {
        const Tensor& av = n.parents[0]->value;
        const Tensor& bv = n.parents[1]->value;
        if (n.parents[0]->requires_grad) {
            Tensor& pg = n.parents[0]->ensure_grad();
            for (std::int64_t i = 0; i < n.grad.numel(); ++i) pg[i] += n.grad[i] / bv[i];
        }
        if (n.parents[1]->requires_grad) {
            Tensor& pg = n.parents[1]->ensure_grad();
            for (std::int64_t i = 0; i < n.grad.numel(); ++i) pg[i] -= n.grad[i] * av[i] / (bv[i] * bv[i]);
        }
    });
}

Var scale(const Var& x, double s) {
    Tensor y = x->value;
    for (std::int64_t i = 0; i < y.numel(); ++i) y[i] *= s;
    return make_node(std::move(y), {x}, [s](Node& n) {
        Tensor& pg = n.parents[0]->ensure_grad();
        for (std::int64_t i = 0; i < n.grad.numel(); ++i) pg[i] += n.grad[i] * s;
    });
}

Var add_scalar(const Var& x, double s) {
    Tensor y = x->value;
    for (std::int64_t i = 0; i < y.numel(); ++i) y[i] += s;
    return make_node(std::move(y), {x}, [](Node& n) { accumulate(*n.parents[0], n.grad); });
}

Var relu(const Var& x) {
    Tensor y = x->value;
    for (std::int64_t i = 0; i < y.numel(); ++i) y[i] = y[i] > 0.0 ? y[i] : 0.0;
    return make_node(std::move(y), {x}, [](Node& n) {
        const Tensor& xv = n.parents[0]->value;
        Tensor& pg = n.parents[0]->ensure_grad();
        for (std::int64_t i = 0; i < n.grad.numel(); ++i)
            if (xv[i] > 0.0) pg[i] += n.grad[i];
    });
}

Var sigmoid(const Var& x) {
    Tensor y = x->value;
    for (std::int64_t i = 0; i < y.numel(); ++i) y[i] = 1.0 / (1.0 + std::exp(-y[i]));
    Tensor yc = y;
    return make_node(std::move(y), {x}, [yc = std::move(yc)](Node& n) {
        Tensor& pg = n.parents[0]->ensure_grad();
        for (std::int64_t i = 0; i < n.grad.numel(); ++i) pg[i] += n.grad[i] * yc[i] * (1.0 - yc[i]);
    });
}

Var gelu(const Var& x) {
    Tensor y = x->value;
    for (std::int64_t i = 0; i < y.numel(); ++i) {
        double v = y[i];
        y[i] = 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0)));
    }
    return make_node(std::move(y), {x}, [](Node& n) {
        const Tensor& xv = n.parents[0]->value;
        Tensor& pg = n.parents[0]->ensure_grad();
        for (std::int64_t i = 0; i < n.grad.numel(); ++i) {
            double v = xv[i];
            double cdf = 0.5 * (1.0 + std::erf(v / std::sqrt(2.0)));
            double pdf = std::exp(-0.5 * v * v) / std::sqrt(2.0 * kPi);
            pg[i] += n.grad[i] * (cdf + v * pdf);
        }
    });
}

Var softmax_lastdim(const Var& x) {
    const int d = x->value.dim(-1);
    const std::int64_t rows = x->value.numel() / d;
    Tensor y = x->value;
    for (std::int64_t r = 0; r < rows; ++r) {
        double* row = y.data() + r * d;
        double m = row[0];
        for (int i = 1; i < d; ++i) m = std::max(m, row[i]);
        double s = 0.0;
        for (int i = 0; i < d; ++i) {
            row[i] = std::exp(row[i] - m);
            s += row[i];
        }
        for (int i = 0; i < d; ++i) row[i] /= s;
    }
    Tensor yc = y;
    return make_node(std::move(y), {x}, [yc = std::move(yc), d, rows](Node& n) {
        Tensor& pg = n.parents[0]->ensure_grad();
        for (std::int64_t r = 0; r < rows; ++r) {
            const double* yrow = yc.data() + r * d;
            const double* grow = n.grad.data() + r * d;
            double dot = 0.0;
            for (int i = 0; i < d; ++i) dot += grow[i] * yrow[i];
            double* prow = pg.data() + r * d;
            for (int i = 0; i < d; ++i) prow[i] += yrow[i] * (grow[i] - dot);
        }
    });
}

Var reshape(const Var& x, std::vector<int> shape) {
    Tensor y = Tensor::from(std::move(shape), x->value.vec());
    std::vector<int> old_shape = x->value.shape();
    return make_node(std::move(y), {x}, [old_shape = std::move(old_shape)](Node& n) {
        accumulate(*n.parents[0], n.grad);
    });
}

Var bias_add_channels(const Var& x, const Var& b) {
    const auto& s = x->value.shape();
    check(s.size() == 4 && b->value.numel() == s[1], "bias_add_channels: shape mismatch");
    Tensor y = x->value;
    const int N = s[0], C = s[1], HW = s[2] * s[3];
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            double bc = b->value[c];
            double* p = y.data() + (static_cast<std::int64_t>(n) * C + c) * HW;
            for (int i = 0; i < HW; ++i) p[i] += bc;
        }
    return make_node(std::move(y), {x, b}, [N, C, HW](Node& n) {
        if (n.parents[0]->requires_grad) accumulate(*n.parents[0], n.grad);
        if (n.parents[1]->requires_grad) {
            Tensor& bg = n.parents[1]->ensure_grad();
            for (int b2 = 0; b2 < N; ++b2)
                for (int c = 0; c < C; ++c) {
                    const double* g = n.grad.data() + (static_cast<std::int64_t>(b2) * C + c) * HW;
                    double acc = 0.0;
                    for (int i = 0; i < HW; ++i) acc += g[i];
                    bg[c] += acc;
                }
        }
    });
}

Var mul_channel_broadcast(const Var& x, const Var& a) {
    const auto& xs = x->value.shape();
    const auto& as = a->value.shape();
    check(xs.size() == 4 && as.size() == 4 && as[1] == 1 && as[0] == xs[0] && as[2] == xs[2] && as[3] == xs[3],
          "mul_channel_broadcast: expected x {N,C,H,W}, a {N,1,H,W}");
    Tensor y = x->value;
    const int N = xs[0], C = xs[1], HW = xs[2] * xs[3];
    for (int n = 0; n < N; ++n) {
        const double* am = a->value.data() + static_cast<std::int64_t>(n) * HW;
        for (int c = 0; c < C; ++c) {
            double* p = y.data() + (static_cast<std::int64_t>(n) * C + c) * HW;
            for (int i = 0; i < HW; ++i) p[i] *= am[i];
        }
    }
    return make_node(std::move(y), {x, a}, [N, C, HW](Node& n) {
        const Tensor& xv = n.parents[0]->value;
        const Tensor& av = n.parents[1]->value;
        if (n.parents[0]->requires_grad) {
            Tensor& pg = n.parents[0]->ensure_grad();
            for (int b = 0; b < N; ++b) {
                const double* am = av.data() + static_cast<std::int64_t>(b) * HW;
                for (int c = 0; c < C; ++c) {
                    std::int64_t off = (static_cast<std::int64_t>(b) * C + c) * HW;
                    for (int i = 0; i < HW; ++i) pg[off + i] += n.grad[off + i] * am[i];
                }
            }
        }
        if (n.parents[1]->requires_grad) {
            Tensor& ag = n.parents[1]->ensure_grad();
            for (int b = 0; b < N; ++b)
                for (int c = 0; c < C; ++c) {
                    std::int64_t off = (static_cast<std::int64_t>(b) * C + c) * HW;
                    std::int64_t aoff = static_cast<std::int64_t>(b) * HW;
                    for (int i = 0; i < HW; ++i) ag[aoff + i] += n.grad[off + i] * xv[off + i];
                }
        }
    });
}

Var concat_channels(const Var& a, const Var& b) {
    const auto& as = a->value.shape();
    const auto& bs = b->value.shape();
    check(as.size() == 4 && bs.size() == 4 && as[0] == bs[0] && as[2] == bs[2] && as[3] == bs[3],
          "concat_channels: incompatible shapes " + a->value.shape_str() + " vs " + b->value.shape_str());
    const int N = as[0], Ca = as[1], Cb = bs[1], HW = as[2] * as[3];
    Tensor y({N, Ca + Cb, as[2], as[3]});
    for (int n = 0; n < N; ++n) {
        std::copy_n(a->value.data() + static_cast<std::int64_t>(n) * Ca * HW, static_cast<std::size_t>(Ca) * HW,
                    y.data() + static_cast<std::int64_t>(n) * (Ca + Cb) * HW);
        std::copy_n(b->value.data() + static_cast<std::int64_t>(n) * Cb * HW, static_cast<std::size_t>(Cb) * HW,
                    y.data() + static_cast<std::int64_t>(n) * (Ca + Cb) * HW + static_cast<std::int64_t>(Ca) * HW);
    }
    return make_node(std::move(y), {a, b}, [N, Ca, Cb, HW](Node& n) {
        for (int which = 0; which < 2; ++which) {
            Node& p = *n.parents[which];
            if (!p.requires_grad) continue;
            Tensor& pg = p.ensure_grad();
            const int C = which == 0 ? Ca : Cb;
            const int coff = which == 0 ? 0 : Ca;
            for (int b = 0; b < N; ++b) {
                const double* g = n.grad.data() + (static_cast<std::int64_t>(b) * (Ca + Cb) + coff) * HW;
                double* d = pg.data() + static_cast<std::int64_t>(b) * C * HW;
                for (std::int64_t i = 0; i < static_cast<std::int64_t>(C) * HW; ++i) d[i] += g[i];
            }
        }
    });
}

Var pad2d(const Var& x, int top, int bottom, int left, int right) {
    const auto& s = x->value.shape();
    check(s.size() == 4, "pad2d: NCHW expected");
    const int N = s[0], C = s[1], H = s[2], W = s[3];
    const int Ho = H + top + bottom, Wo = W + left + right;
    Tensor y({N, C, Ho, Wo});
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c)
            for (int h = 0; h < H; ++h)
                std::copy_n(&x->value.at4(n, c, h, 0), W, &y.at4(n, c, h + top, left));
    return make_node(std::move(y), {x}, [N, C, H, W, top, left](Node& n) {
        Tensor& pg = n.parents[0]->ensure_grad();
        for (int b = 0; b < N; ++b)
            for (int c = 0; c < C; ++c)
                for (int h = 0; h < H; ++h)
                    for (int w = 0; w < W; ++w) pg.at4(b, c, h, w) += n.grad.at4(b, c, h + top, w + left);
    });
}

Var crop2d(const Var& x, int top, int left, int out_h, int out_w) {
    const auto& s = x->value.shape();
    check(s.size() == 4 && top + out_h <= s[2] && left + out_w <= s[3], "crop2d: window out of range");
    const int N = s[0], C = s[1];
    Tensor y({N, C, out_h, out_w});
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c)
            for (int h = 0; h < out_h; ++h)
                std::copy_n(&x->value.at4(n, c, h + top, left), out_w, &y.at4(n, c, h, 0));
    return make_node(std::move(y), {x}, [N, C, out_h, out_w, top, left](Node& n) {
        Tensor& pg = n.parents[0]->ensure_grad();
        for (int b = 0; b < N; ++b)
            for (int c = 0; c < C; ++c)
                for (int h = 0; h < out_h; ++h)
                    for (int w = 0; w < out_w; ++w) pg.at4(b, c, h + top, w + left) += n.grad.at4(b, c, h, w);
    });
}

Var roll2d(const Var& x, int dy, int dx) {
    const auto& s = x->value.shape();
    check(s.size() == 4, "roll2d: NCHW expected");
    const int N = s[0], C = s[1], H = s[2], W = s[3];
    auto wrap = [](int v, int m) { return ((v % m) + m) % m; };
    Tensor y({N, C, H, W});
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c)
            for (int h = 0; h < H; ++h)
                for (int w = 0; w < W; ++w) y.at4(n, c, h, w) = x->value.at4(n, c, wrap(h - dy, H), wrap(w - dx, W));
    return make_node(std::move(y), {x}, [N, C, H, W, dy, dx, wrap](Node& n) {
        Tensor& pg = n.parents[0]->ensure_grad();
        for (int b = 0; b < N; ++b)
            for (int c = 0; c < C; ++c)
                for (int h = 0; h < H; ++h)
                    for (int w = 0; w < W; ++w) pg.at4(b, c, wrap(h - dy, H), wrap(w - dx, W)) += n.grad.at4(b, c, h, w);
    });
}

Var global_avg_pool(const Var& x) {
    const auto& s = x->value.shape();
    check(s.size() == 4, "global_avg_pool: NCHW expected");
    const int N = s[0], C = s[1], HW = s[2] * s[3];
    Tensor y({N, C});
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            const double* p = x->value.data() + (static_cast<std::int64_t>(n) * C + c) * HW;
            double acc = 0.0;
            for (int i = 0; i < HW; ++i) acc += p[i];
            y.at2(n, c) = acc / HW;
        }
    return make_node(std::move(y), {x}, [N, C, HW](Node& n) {
        Tensor& pg = n.parents[0]->ensure_grad();
        for (int b = 0; b < N; ++b)
            for (int c = 0; c < C; ++c) {
                double g = n.grad.at2(b, c) / HW;
                double* p = pg.data() + (static_cast<std::int64_t>(b) * C + c) * HW;
                for (int i = 0; i < HW; ++i) p[i] += g;
            }
    });
}

Var sum_all(const Var& x) {
    Tensor y = Tensor::scalar(x->value.sum());
    return make_node(std::move(y), {x}, [](Node& n) {
        Tensor& pg = n.parents[0]->ensure_grad();
        double g = n.grad[0];
        for (std::int64_t i = 0; i < pg.numel(); ++i) pg[i] += g;
    });
}

Var mean_all(const Var& x) { return scale(sum_all(x), 1.0 / static_cast<double>(x->value.numel())); }

Var nchw_to_nlc(const Var& x) {
    const auto& s = x->value.shape();
    check(s.size() == 4, "nchw_to_nlc: NCHW expected");
    const int N = s[0], C = s[1], H = s[2], W = s[3];
    Tensor y({N, H * W, C});
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c)
            for (int i = 0; i < H * W; ++i) y.at3(n, i, c) = x->value[(static_cast<std::int64_t>(n) * C + c) * H * W + i];
    return make_node(std::move(y), {x}, [N, C, H, W](Node& n) {
        Tensor& pg = n.parents[0]->ensure_grad();
        for (int b = 0; b < N; ++b)
            for (int c = 0; c < C; ++c)
                for (int i = 0; i < H * W; ++i)
                    pg[(static_cast<std::int64_t>(b) * C + c) * H * W + i] += n.grad.at3(b, i, c);
    });
}

Var nlc_to_nchw(const Var& x, int h, int w) {
    const auto& s = x->value.shape();
    check(s.size() == 3 && s[1] == h * w, "nlc_to_nchw: token count mismatch");
    const int N = s[0], C = s[2];
    Tensor y({N, C, h, w});
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c)
            for (int i = 0; i < h * w; ++i) y[(static_cast<std::int64_t>(n) * C + c) * h * w + i] = x->value.at3(n, i, c);
    return make_node(std::move(y), {x}, [N, C, h, w](Node& n) {
        Tensor& pg = n.parents[0]->ensure_grad();
        for (int b = 0; b < N; ++b)
            for (int c = 0; c < C; ++c)
                for (int i = 0; i < h * w; ++i)
                    pg.at3(b, i, c) += n.grad[(static_cast<std::int64_t>(b) * C + c) * h * w + i];
    });
}

Var window_partition(const Var& x, int win) {
    const auto& s = x->value.shape();
    check(s.size() == 4 && s[2] % win == 0 && s[3] % win == 0, "window_partition: size not divisible by window");
    const int N = s[0], C = s[1], H = s[2], W = s[3];
    const int nwh = H / win, nww = W / win, nw = nwh * nww, L = win * win;
    Tensor y({N * nw, L, C});
    for (int n = 0; n < N; ++n)
        for (int wy = 0; wy < nwh; ++wy)
            for (int wx = 0; wx < nww; ++wx) {
                int b = (n * nwh + wy) * nww + wx;
                for (int ty = 0; ty < win; ++ty)
                    for (int tx = 0; tx < win; ++tx)
                        for (int c = 0; c < C; ++c)
                            y.at3(b, ty * win + tx, c) = x->value.at4(n, c, wy * win + ty, wx * win + tx);
            }
    return make_node(std::move(y), {x}, [N, C, win, nwh, nww](Node& n) {
        Tensor& pg = n.parents[0]->ensure_grad();
        for (int b2 = 0; b2 < N; ++b2)
            for (int wy = 0; wy < nwh; ++wy)
                for (int wx = 0; wx < nww; ++wx) {
                    int b = (b2 * nwh + wy) * nww + wx;
                    for (int ty = 0; ty < win; ++ty)
                        for (int tx = 0; tx < win; ++tx)
                            for (int c = 0; c < C; ++c)
                                pg.at4(b2, c, wy * win + ty, wx * win + tx) += n.grad.at3(b, ty * win + tx, c);
                }
    });
}

Var window_reverse(const Var& x, int n_imgs, int hp, int wp, int win) {
    const auto& s = x->value.shape();
    const int nwh = hp / win, nww = wp / win;
    check(s.size() == 3 && s[0] == n_imgs * nwh * nww && s[1] == win * win, "window_reverse: shape mismatch");
    const int C = s[2];
    Tensor y({n_imgs, C, hp, wp});
    for (int n = 0; n < n_imgs; ++n)
        for (int wy = 0; wy < nwh; ++wy)
            for (int wx = 0; wx < nww; ++wx) {
                int b = (n * nwh + wy) * nww + wx;
                for (int ty = 0; ty < win; ++ty)
                    for (int tx = 0; tx < win; ++tx)
                        for (int c = 0; c < C; ++c)
                            y.at4(n, c, wy * win + ty, wx * win + tx) = x->value.at3(b, ty * win + tx, c);
            }
    return make_node(std::move(y), {x}, [n_imgs, C, win, nwh, nww](Node& n) {
        Tensor& pg = n.parents[0]->ensure_grad();
        for (int b2 = 0; b2 < n_imgs; ++b2)
            for (int wy = 0; wy < nwh; ++wy)
                for (int wx = 0; wx < nww; ++wx) {
                    int b = (b2 * nwh + wy) * nww + wx;
                    for (int ty = 0; ty < win; ++ty)
                        for (int tx = 0; tx < win; ++tx)
                            for (int c = 0; c < C; ++c)
                                pg.at3(b, ty * win + tx, c) += n.grad.at4(b2, c, wy * win + ty, wx * win + tx);
                }
    });
}

Var space_to_depth2(const Var& x) {
    const auto& s = x->value.shape();
    check(s.size() == 4 && s[2] % 2 == 0 && s[3] % 2 == 0, "space_to_depth2: H,W must be even");
    const int N = s[0], C = s[1], H = s[2], W = s[3];
    const int Ho = H / 2, Wo = W / 2;
    // Quadrant order matches the usual patch-merging convention:
    // x[0::2,0::2], x[1::2,0::2], x[0::2,1::2], x[1::2,1::2].
    static const int QY[4] = {0, 1, 0, 1};
    static const int QX[4] = {0, 0, 1, 1};
    Tensor y({N, 4 * C, Ho, Wo});
    for (int n = 0; n < N; ++n)
        for (int q = 0; q < 4; ++q)
            for (int c = 0; c < C; ++c)
                for (int i = 0; i < Ho; ++i)
                    for (int j = 0; j < Wo; ++j)
                        y.at4(n, q * C + c, i, j) = x->value.at4(n, c, 2 * i + QY[q], 2 * j + QX[q]);
    return make_node(std::move(y), {x}, [N, C, Ho, Wo](Node& n) {
        Tensor& pg = n.parents[0]->ensure_grad();
        for (int b = 0; b < N; ++b)
            for (int q = 0; q < 4; ++q)
                for (int c = 0; c < C; ++c)
                    for (int i = 0; i < Ho; ++i)
                        for (int j = 0; j < Wo; ++j)
                            pg.at4(b, c, 2 * i + QY[q], 2 * j + QX[q]) += n.grad.at4(b, q * C + c, i, j);
    });
}

Var add_window_mask(const Var& scores, const Tensor& mask, int heads) {
    const auto& s = scores->value.shape();
    const auto& ms = mask.shape();
    check(s.size() == 3 && ms.size() == 3 && s[1] == ms[1] && s[2] == ms[2], "add_window_mask: shape mismatch");
    const int B = s[0], L = s[1], nw = ms[0];
    check(B % (heads * nw) == 0 || (B / heads) % nw == 0, "add_window_mask: batch not a multiple of windows");
    Tensor y = scores->value;
    for (int b = 0; b < B; ++b) {
        int w = (b / heads) % nw;
        const double* m = mask.data() + static_cast<std::int64_t>(w) * L * L;
        double* p = y.data() + static_cast<std::int64_t>(b) * L * L;
        for (int i = 0; i < L * L; ++i) p[i] += m[i];
    }
    return make_node(std::move(y), {scores}, [](Node& n) { accumulate(*n.parents[0], n.grad); });
}

}  // namespace hyformer::nn
