#include "hyformer/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace hyformer::stats {

std::pair<double, double> aggregate_seed_stats(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("aggregate_seed_stats: empty input");
    double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    if (values.size() == 1) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

std::pair<double, double> bootstrap_ci(const std::vector<double>& per_image_values, int iterations,
                                       double level, std::uint64_t seed) {
    const std::size_t n = per_image_values.size();
    if (n < 2) throw std::invalid_argument("bootstrap_ci: need at least 2 values");
    if (iterations < 1 || level <= 0.0 || level >= 1.0)
        throw std::invalid_argument("bootstrap_ci: bad iterations/level");
    std::mt19937_64 rng(seed);
    std::vector<double> means(static_cast<std::size_t>(iterations));
    for (int it = 0; it < iterations; ++it) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += per_image_values[rng() % n];
        means[static_cast<std::size_t>(it)] = acc / static_cast<double>(n);
    }
    std::sort(means.begin(), means.end());
    auto quantile = [&](double q) {
        double pos = q * static_cast<double>(iterations - 1);
        std::size_t lo = static_cast<std::size_t>(std::floor(pos));
        std::size_t hi = std::min(lo + 1, static_cast<std::size_t>(iterations - 1));
        double frac = pos - static_cast<double>(lo);
        return means[lo] * (1.0 - frac) + means[hi] * frac;
    };
    double tail = (1.0 - level) / 2.0;
    return {quantile(tail), quantile(1.0 - tail)};
}

namespace {
double normal_sf_two_sided(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }
}  // namespace

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("wilcoxon: length mismatch");
    std::vector<double> diffs;
    diffs.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        if (d != 0.0) diffs.push_back(d);  // classic zero-drop convention
    }
    WilcoxonResult res;
    res.n_effective = static_cast<int>(diffs.size());
    if (diffs.empty()) {
        res.degenerate = true;
        res.p_value = 1.0;
        return res;
    }
    const int n = res.n_effective;
    // average ranks of |d|
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int i, int j) {
        return std::abs(diffs[static_cast<std::size_t>(i)]) < std::abs(diffs[static_cast<std::size_t>(j)]);
    });
    std::vector<double> ranks(static_cast<std::size_t>(n));
    std::vector<int> tie_sizes;
    for (int i = 0; i < n;) {
        int j = i;
        double v = std::abs(diffs[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
        while (j < n && std::abs(diffs[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])]) == v) ++j;
        double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (int k = i; k < j; ++k) ranks[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = avg_rank;
        tie_sizes.push_back(j - i);
        i = j;
    }
    double w_plus = 0.0, w_minus = 0.0;
    for (int i = 0; i < n; ++i)
        (diffs[static_cast<std::size_t>(i)] > 0.0 ? w_plus : w_minus) += ranks[static_cast<std::size_t>(i)];
    res.w_statistic = std::min(w_plus, w_minus);

    if (n <= kWilcoxonExactLimit) {
        // Exact null distribution of W+ by dynamic programming over doubled
        // ranks (average ranks double to integers).
        res.exact = true;
        std::vector<std::int64_t> r2(static_cast<std::size_t>(n));
        std::int64_t total2 = 0;
        for (int i = 0; i < n; ++i) {
            r2[static_cast<std::size_t>(i)] = llround(2.0 * ranks[static_cast<std::size_t>(i)]);
            total2 += r2[static_cast<std::size_t>(i)];
        }
        std::vector<std::uint64_t> ways(static_cast<std::size_t>(total2 + 1), 0);
        ways[0] = 1;
        for (int i = 0; i < n; ++i) {
            std::int64_t r = r2[static_cast<std::size_t>(i)];
            for (std::int64_t s = total2; s >= r; --s) ways[static_cast<std::size_t>(s)] += ways[static_cast<std::size_t>(s - r)];
        }
        const double denom = std::pow(2.0, n);
        std::int64_t obs2 = llround(2.0 * w_plus);
        double p_le = 0.0, p_ge = 0.0;
        for (std::int64_t s = 0; s <= total2; ++s) {
            double pr = static_cast<double>(ways[static_cast<std::size_t>(s)]) / denom;
            if (s <= obs2) p_le += pr;
            if (s >= obs2) p_ge += pr;
        }
        res.p_value = std::min(1.0, 2.0 * std::min(p_le, p_ge));
    } else {
        const double nn = static_cast<double>(n);
        const double mu = nn * (nn + 1.0) / 4.0;
        double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
        for (int t : tie_sizes) {
            double td = static_cast<double>(t);
            var -= (td * td * td - td) / 48.0;
        }
        if (var <= 0.0) {
            res.degenerate = true;
            res.p_value = 1.0;
            return res;
        }
        double d = w_plus - mu;
        double cc = d > 0 ? -0.5 : (d < 0 ? 0.5 : 0.0);  // continuity correction toward the mean
        double z = (d + cc) / std::sqrt(var);
        res.p_value = std::min(1.0, normal_sf_two_sided(z));
    }
    return res;
}

double cohens_d(const std::vector<double>& group_a, const std::vector<double>& group_b) {
    if (group_a.size() < 2 || group_b.size() < 2)
        throw std::invalid_argument("cohens_d: each group needs at least 2 values");
    auto [ma, sa] = aggregate_seed_stats(group_a);
    auto [mb, sb] = aggregate_seed_stats(group_b);
    double na = static_cast<double>(group_a.size()), nb = static_cast<double>(group_b.size());
    double pooled = std::sqrt(((na - 1.0) * sa * sa + (nb - 1.0) * sb * sb) / (na + nb - 2.0));
    if (pooled == 0.0) {
        if (ma == mb) return 0.0;
        return ma > mb ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    }
    return (ma - mb) / pooled;
}

}  // namespace hyformer::stats
