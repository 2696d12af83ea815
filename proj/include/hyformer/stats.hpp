#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace hyformer::stats {

// Arithmetic mean and (n-1)-denominator standard deviation.
std::pair<double, double> aggregate_seed_stats(const std::vector<double>& values);

// Percentile bootstrap CI of the mean. Deterministic under a fixed seed.
std::pair<double, double> bootstrap_ci(const std::vector<double>& per_image_values, int iterations = 1000,
                                       double level = 0.95, std::uint64_t seed = 0);

struct WilcoxonResult {
    double w_statistic = 0;  // min(W+, W-)
    double p_value = 1.0;
    bool degenerate = false;  // all paired differences were zero
    bool exact = false;       // exact sign-enumeration path (n <= kExactLimit)
    int n_effective = 0;      // pairs remaining after dropping zero differences
};

inline constexpr int kWilcoxonExactLimit = 25;

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b);

double cohens_d(const std::vector<double>& group_a, const std::vector<double>& group_b);

}  // namespace hyformer::stats
