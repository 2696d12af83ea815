#include <Eigen/Core>

#include "hyformer/ops.hpp"

namespace hyformer::nn {

namespace {
using MatrixRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatrixRM>;
using MapC = Eigen::Map<const MatrixRM>;
}  // namespace

Var linear(const Var& x, const Var& w, const Var& b) {
    const auto& xs = x->value.shape();
    const auto& ws = w->value.shape();
    check(ws.size() == 2, "linear: weight must be {In,Out}");
    const int in = ws[0], out = ws[1];
    check(xs.back() == in, "linear: input feature dim " + std::to_string(xs.back()) + " != " + std::to_string(in));
    const std::int64_t m = x->value.numel() / in;
    std::vector<int> out_shape(xs.begin(), xs.end() - 1);
    out_shape.push_back(out);
    Tensor y(out_shape);
    {
        MapC X(x->value.data(), m, in);
        MapC W(w->value.data(), in, out);
        MapM Y(y.data(), m, out);
        Y.noalias() = X * W;
        if (b) {
            check(b->value.numel() == out, "linear: bias size mismatch");
            for (std::int64_t r = 0; r < m; ++r)
                for (int c = 0; c < out; ++c) y[r * out + c] += b->value[c];
        }
    }
    std::vector<Var> parents = b ? std::vector<Var>{x, w, b} : std::vector<Var>{x, w};
    return make_node(std::move(y), std::move(parents), [m, in, out](Node& n) {
        Node& xn = *n.parents[0];
        Node& wn = *n.parents[1];
        MapC G(n.grad.data(), m, out);
        if (xn.requires_grad) {
            MapC W(wn.value.data(), in, out);
            MapM XG(xn.ensure_grad().data(), m, in);
            XG.noalias() += G * W.transpose();
        }
        if (wn.requires_grad) {
            MapC X(xn.value.data(), m, in);
            MapM WG(wn.ensure_grad().data(), in, out);
            WG.noalias() += X.transpose() * G;
        }
        if (n.parents.size() > 2 && n.parents[2]->requires_grad) {
            Tensor& bg = n.parents[2]->ensure_grad();
            for (std::int64_t r = 0; r < m; ++r)
                for (int c = 0; c < out; ++c) bg[c] += n.grad[r * out + c];
        }
    });
}

Var bmm(const Var& a, const Var& b) {
    const auto& as = a->value.shape();
    const auto& bs = b->value.shape();
    check(as.size() == 3 && bs.size() == 3 && as[0] == bs[0] && as[2] == bs[1], "bmm: shape mismatch");
    const int B = as[0], M = as[1], K = as[2], N = bs[2];
    Tensor y({B, M, N});
    for (int i = 0; i < B; ++i) {
        MapC A(a->value.data() + static_cast<std::int64_t>(i) * M * K, M, K);
        MapC Bm(b->value.data() + static_cast<std::int64_t>(i) * K * N, K, N);
        MapM Y(y.data() + static_cast<std::int64_t>(i) * M * N, M, N);
        Y.noalias() = A * Bm;
    }
    return make_node(std::move(y), {a, b}, [B, M, K, N](Node& n) {
        Node& an = *n.parents[0];
        Node& bn = *n.parents[1];
        for (int i = 0; i < B; ++i) {
            MapC G(n.grad.data() + static_cast<std::int64_t>(i) * M * N, M, N);
            if (an.requires_grad) {
                MapC Bm(bn.value.data() + static_cast<std::int64_t>(i) * K * N, K, N);
                MapM AG(an.ensure_grad().data() + static_cast<std::int64_t>(i) * M * K, M, K);
                AG.noalias() += G * Bm.transpose();
            }
            if (bn.requires_grad) {
                MapC A(an.value.data() + static_cast<std::int64_t>(i) * M * K, M, K);
                MapM BG(bn.ensure_grad().data() + static_cast<std::int64_t>(i) * K * N, K, N);
                BG.noalias() += A.transpose() * G;
            }
        }
    });
}

Var transpose_last2(const Var& x) {
    const auto& s = x->value.shape();
    check(s.size() == 3, "transpose_last2: {B,M,N} expected");
    const int B = s[0], M = s[1], N = s[2];
    Tensor y({B, N, M});
    for (int b = 0; b < B; ++b)
        for (int i = 0; i < M; ++i)
            for (int j = 0; j < N; ++j) y.at3(b, j, i) = x->value.at3(b, i, j);
    return make_node(std::move(y), {x}, [B, M, N](Node& n) {
        Tensor& pg = n.parents[0]->ensure_grad();
        for (int b = 0; b < B; ++b)
            for (int i = 0; i < M; ++i)
                for (int j = 0; j < N; ++j) pg.at3(b, i, j) += n.grad.at3(b, j, i);
    });
}

}  // namespace hyformer::nn
