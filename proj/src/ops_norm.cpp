#include <cmath>

#include "hyformer/ops.hpp"

namespace hyformer::nn {

Var batchnorm2d_train(const Var& x, const Var& gamma, const Var& beta, double eps,
                      Tensor* batch_mean_out, Tensor* batch_var_out) {
    const auto& s = x->value.shape();
    check(s.size() == 4, "batchnorm2d: NCHW expected");
    const int N = s[0], C = s[1], HW = s[2] * s[3];
    const std::int64_t m = static_cast<std::int64_t>(N) * HW;
    check(gamma->value.numel() == C && beta->value.numel() == C, "batchnorm2d: affine size mismatch");

    Tensor mean({C}), var({C});
    for (int c = 0; c < C; ++c) {
        double acc = 0.0;
        for (int n = 0; n < N; ++n) {
            const double* p = x->value.data() + (static_cast<std::int64_t>(n) * C + c) * HW;
            for (int i = 0; i < HW; ++i) acc += p[i];
        }
        mean[c] = acc / static_cast<double>(m);
    }
    for (int c = 0; c < C; ++c) {
        double acc = 0.0;
        for (int n = 0; n < N; ++n) {
            const double* p = x->value.data() + (static_cast<std::int64_t>(n) * C + c) * HW;
            for (int i = 0; i < HW; ++i) {
                double d = p[i] - mean[c];
                acc += d * d;
            }
        }
        var[c] = acc / static_cast<double>(m);  // biased, used for normalization
    }
    if (batch_mean_out) *batch_mean_out = mean;
    if (batch_var_out) *batch_var_out = var;

    Tensor y = x->value;
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            double inv = 1.0 / std::sqrt(var[c] + eps);
            double g = gamma->value[c], b = beta->value[c], mu = mean[c];
            double* p = y.data() + (static_cast<std::int64_t>(n) * C + c) * HW;
            for (int i = 0; i < HW; ++i) p[i] = (p[i] - mu) * inv * g + b;
        }

    Tensor mean_c = mean, var_c = var;
    return make_node(std::move(y), {x, gamma, beta},
                     [N, C, HW, m, eps, mean_c = std::move(mean_c), var_c = std::move(var_c)](Node& n) {
                         Node& xn = *n.parents[0];
                         Node& gn = *n.parents[1];
                         Node& bn = *n.parents[2];
                         for (int c = 0; c < C; ++c) {
                             const double mu = mean_c[c];
                             const double inv = 1.0 / std::sqrt(var_c[c] + eps);
                             const double g = gn.value[c];
                             // accumulate per-channel sums of dy and dy*xhat
                             double sum_dy = 0.0, sum_dy_xhat = 0.0;
                             for (int b = 0; b < N; ++b) {
                                 const double* xp = xn.value.data() + (static_cast<std::int64_t>(b) * C + c) * HW;
                                 const double* gp = n.grad.data() + (static_cast<std::int64_t>(b) * C + c) * HW;
                                 for (int i = 0; i < HW; ++i) {
                                     sum_dy += gp[i];
                                     sum_dy_xhat += gp[i] * (xp[i] - mu) * inv;
                                 }
                             }
                             if (gn.requires_grad) gn.ensure_grad()[c] += sum_dy_xhat;
                             if (bn.requires_grad) bn.ensure_grad()[c] += sum_dy;
                             if (xn.requires_grad) {
                                 Tensor& xg = xn.ensure_grad();
                                 const double md = static_cast<double>(m);
                                 for (int b = 0; b < N; ++b) {
                                     const double* xp = xn.value.data() + (static_cast<std::int64_t>(b) * C + c) * HW;
                                     const double* gp = n.grad.data() + (static_cast<std::int64_t>(b) * C + c) * HW;
                                     double* dp = xg.data() + (static_cast<std::int64_t>(b) * C + c) * HW;
                                     for (int i = 0; i < HW; ++i) {
                                         double xhat = (xp[i] - mu) * inv;
                                         dp[i] += g * inv * (gp[i] - sum_dy / md - xhat * sum_dy_xhat / md);
                                     }
                                 }
                             }
                         }
                     });
}

Var batchnorm2d_eval(const Var& x, const Var& gamma, const Var& beta,
                     const Tensor& running_mean, const Tensor& running_var, double eps) {
    const auto& s = x->value.shape();
    check(s.size() == 4, "batchnorm2d: NCHW expected");
    const int N = s[0], C = s[1], HW = s[2] * s[3];
    Tensor y = x->value;
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            double inv = 1.0 / std::sqrt(running_var[c] + eps);
            double g = gamma->value[c], b = beta->value[c], mu = running_mean[c];
            double* p = y.data() + (static_cast<std::int64_t>(n) * C + c) * HW;
            for (int i = 0; i < HW; ++i) p[i] = (p[i] - mu) * inv * g + b;
        }
    Tensor mean_c = running_mean, var_c = running_var;
    return make_node(std::move(y), {x, gamma, beta},
                     [N, C, HW, eps, mean_c = std::move(mean_c), var_c = std::move(var_c)](Node& n) {
                         Node& xn = *n.parents[0];
                         Node& gn = *n.parents[1];
                         Node& bn = *n.parents[2];
                         for (int c = 0; c < C; ++c) {
                             const double inv = 1.0 / std::sqrt(var_c[c] + eps);
                             const double g = gn.value[c], mu = mean_c[c];
                             double sum_dy = 0.0, sum_dy_xhat = 0.0;
                             for (int b = 0; b < N; ++b) {
                                 const double* xp = xn.value.data() + (static_cast<std::int64_t>(b) * C + c) * HW;
                                 const double* gp = n.grad.data() + (static_cast<std::int64_t>(b) * C + c) * HW;
                                 for (int i = 0; i < HW; ++i) {
                                     sum_dy += gp[i];
                                     sum_dy_xhat += gp[i] * (xp[i] - mu) * inv;
                                 }
                             }
                             if (gn.requires_grad) gn.ensure_grad()[c] += sum_dy_xhat;
                             if (bn.requires_grad) bn.ensure_grad()[c] += sum_dy;
                             if (xn.requires_grad) {
                                 Tensor& xg = xn.ensure_grad();
                                 for (int b = 0; b < N; ++b) {
                                     const double* gp = n.grad.data() + (static_cast<std::int64_t>(b) * C + c) * HW;
                                     double* dp = xg.data() + (static_cast<std::int64_t>(b) * C + c) * HW;
                                     for (int i = 0; i < HW; ++i) dp[i] += gp[i] * g * inv;
                                 }
                             }
                         }
                     });
}

Var layernorm_lastdim(const Var& x, const Var& gamma, const Var& beta, double eps) {
    const int d = x->value.dim(-1);
    check(gamma->value.numel() == d && beta->value.numel() == d, "layernorm: affine size mismatch");
    const std::int64_t rows = x->value.numel() / d;
    Tensor y = x->value;
    Tensor mean({static_cast<int>(rows)}), inv_std({static_cast<int>(rows)});
    for (std::int64_t r = 0; r < rows; ++r) {
        double* row = y.data() + r * d;
        double mu = 0.0;
        for (int i = 0; i < d; ++i) mu += row[i];
        mu /= d;
        double v = 0.0;
        for (int i = 0; i < d; ++i) {
            double dd = row[i] - mu;
            v += dd * dd;
        }
        v /= d;
        double inv = 1.0 / std::sqrt(v + eps);
        mean[r] = mu;
        inv_std[r] = inv;
        for (int i = 0; i < d; ++i) row[i] = (row[i] - mu) * inv * gamma->value[i] + beta->value[i];
    }
    Tensor mean_c = mean, inv_c = inv_std;
    return make_node(std::move(y), {x, gamma, beta},
                     [d, rows, mean_c = std::move(mean_c), inv_c = std::move(inv_c)](Node& n) {
                         Node& xn = *n.parents[0];
                         Node& gn = *n.parents[1];
                         Node& bn = *n.parents[2];
                         Tensor* xg = xn.requires_grad ? &xn.ensure_grad() : nullptr;
                         Tensor* gg = gn.requires_grad ? &gn.ensure_grad() : nullptr;
                         Tensor* bg = bn.requires_grad ? &bn.ensure_grad() : nullptr;
                         for (std::int64_t r = 0; r < rows; ++r) {
                             const double* xrow = xn.value.data() + r * d;
                             const double* grow = n.grad.data() + r * d;
                             const double mu = mean_c[r], inv = inv_c[r];
                             double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
                             for (int i = 0; i < d; ++i) {
                                 double xhat = (xrow[i] - mu) * inv;
                                 double dxhat = grow[i] * gn.value[i];
                                 mean_dxhat += dxhat;
                                 mean_dxhat_xhat += dxhat * xhat;
                                 if (gg) (*gg)[i] += grow[i] * xhat;
                                 if (bg) (*bg)[i] += grow[i];
                             }
                             mean_dxhat /= d;
                             mean_dxhat_xhat /= d;
                             if (xg) {
                                 double* drow = xg->data() + r * d;
                                 for (int i = 0; i < d; ++i) {
                                     double xhat = (xrow[i] - mu) * inv;
                                     double dxhat = grow[i] * gn.value[i];
                                     drow[i] += inv * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat);
                                 }
                             }
                         }
                     });
}

}  // namespace hyformer::nn
