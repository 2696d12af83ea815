#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hyformer/config.hpp"
#include "hyformer/metrics.hpp"

namespace hyformer::report {

struct RunManifestInfo {
    std::string command;
    std::string config_text;  // resolved flat key-value snapshot
    std::uint64_t dataset_fingerprint = 0;
    std::vector<std::uint64_t> seeds;
    std::string started_utc;
    std::string finished_utc;
};

std::string utc_timestamp();
void write_run_manifest(const std::string& run_dir, const RunManifestInfo& info);

// Human-readable table + machine key-value document + per-image TSV log.
void write_metrics_report(const std::string& out_dir, const metrics::MetricsReport& report,
                          const std::string& stem = "metrics_report");
std::string metrics_report_kv(const metrics::MetricsReport& report);
std::string metrics_report_table(const metrics::MetricsReport& report);

// Per-image dice log reader used by --compare and cmd_report.
struct PerImageLog {
    std::vector<std::string> ids;
    std::vector<double> dice;
    std::vector<double> iou;
};
PerImageLog read_per_image_log(const std::string& path);

struct LearningCurvePoint {
    double fraction = 0.0;
    int n_train_images = 0;
    double dice_mean = 0.0, dice_std = 0.0;
    double accuracy_mean = 0.0, accuracy_std = 0.0;
    double recovery_pct = 0.0;  // 100 * dice / source reference
};

void write_learning_curve(const std::string& out_dir, const std::vector<LearningCurvePoint>& points,
                          double source_reference_dice);

// Consolidated comparison across runs (cmd_report). Significance stars mark
// Wilcoxon p < 0.05 against the first run when per-image logs align.
struct RunSummary {
    std::string name;
    metrics::MetricsReport report;
    bool valid = false;
};
std::string comparison_table(const std::vector<RunSummary>& runs, int bootstrap_iterations,
                             std::uint64_t bootstrap_seed);

// ---- figure emission (OpenCV rendering, in figures.cpp) ----

// Five-panel strip: input | ground truth | prediction | attention | Grad-CAM.
void write_interpret_panel(const std::string& path, const nn::Tensor& image_chw01, const nn::Tensor& gt,
                           const nn::Tensor& pred, const nn::Tensor& attention01, const nn::Tensor& gradcam01,
                           double attention_iou, const std::string& caption);

void write_curve_plot(const std::string& path, const std::vector<double>& xs, const std::vector<double>& ys,
                      double reference, const std::string& title);

}  // namespace hyformer::report
