#include "hyformer/report.hpp"

#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "hyformer/stats.hpp"
#include "hyformer/version.hpp"

namespace hyformer::report {

namespace {
std::string fmt(double v, int prec = 4) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(prec) << v;
    return out.str();
}
const char* kClassNames[3] = {"normal", "benign", "malignant"};
}  // namespace

std::string utc_timestamp() {
    std::time_t t = std::time(nullptr);
    std::tm tmv{};
    gmtime_r(&t, &tmv);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tmv);
    return buf;
}

void write_run_manifest(const std::string& run_dir, const RunManifestInfo& info) {
    std::ofstream out(std::filesystem::path(run_dir) / "run_manifest.kv");
    out << "schema_version = 1\n";
    out << "toolkit_version = " << kToolkitVersion << "\n";
    out << "command = " << info.command << "\n";
    out << "dataset_fingerprint = " << std::hex << std::showbase << info.dataset_fingerprint << std::dec
        << std::noshowbase << "\n";
    out << "seeds = ";
    for (std::size_t i = 0; i < info.seeds.size(); ++i) out << (i ? "," : "") << info.seeds[i];
    out << "\n";
    out << "started_utc = " << info.started_utc << "\n";
    out << "finished_utc = " << info.finished_utc << "\n";
    std::istringstream cfg(info.config_text);
    std::string line;
    while (std::getline(cfg, line))
        if (!line.empty()) out << "config." << line << "\n";
}

std::string metrics_report_kv(const metrics::MetricsReport& report) {
    std::ostringstream out;
    out << "schema_version = " << metrics::MetricsReport::kSchemaVersion << "\n";
    out << "n_images = " << report.image_ids.size() << "\n";
    out << "dice.mean = " << fmt(report.mean_dice, 6) << "\n";
    out << "dice.lesion_only = " << fmt(report.lesion_only_dice, 6) << "\n";
    out << "dice.lesion_image_count = " << report.lesion_image_count << "\n";
    out << "iou.mean = " << fmt(report.mean_iou, 6) << "\n";
    out << "classification.accuracy = " << fmt(report.classification.accuracy, 6) << "\n";
    for (int c = 0; c < 3; ++c) {
        const auto& pc = report.classification.per_class[static_cast<std::size_t>(c)];
        std::string p = std::string("class.") + kClassNames[c];
        out << p << ".precision = " << fmt(pc.precision, 6) << "\n";
        out << p << ".recall = " << fmt(pc.recall, 6) << "\n";
        out << p << ".f1 = " << fmt(pc.f1, 6) << "\n";
        out << p << ".support = " << pc.support << "\n";
        out << p << ".zero_division = " << (pc.zero_division ? "true" : "false") << "\n";
    }
    out << "overall.precision = " << fmt(report.classification.macro_precision, 6) << "\n";
    out << "overall.recall = " << fmt(report.classification.macro_recall, 6) << "\n";
    out << "overall.f1 = " << fmt(report.classification.macro_f1, 6) << "\n";
    if (report.has_ci) {
        out << "dice.ci95_low = " << fmt(report.dice_ci_low, 6) << "\n";
        out << "dice.ci95_high = " << fmt(report.dice_ci_high, 6) << "\n";
    }
    return out.str();
}

std::string metrics_report_table(const metrics::MetricsReport& report) {
    std::ostringstream out;
    out << "Evaluation over " << report.image_ids.size() << " images\n";
    out << "---------------------------------------------------------------\n";
    out << "Segmentation   Dice " << fmt(report.mean_dice) << "   IoU " << fmt(report.mean_iou)
        << "   lesion-only Dice " << fmt(report.lesion_only_dice) << " (" << report.lesion_image_count
        << " images)\n";
    if (report.has_ci)
        out << "               Dice 95% CI [" << fmt(report.dice_ci_low) << ", " << fmt(report.dice_ci_high)
            << "]\n";
    out << "Classification accuracy " << fmt(report.classification.accuracy) << "\n\n";
    out << std::left << std::setw(12) << "class" << std::right << std::setw(11) << "precision" << std::setw(9)
        << "recall" << std::setw(9) << "f1" << std::setw(10) << "support" << "\n";
    for (int c = 0; c < 3; ++c) {
        const auto& pc = report.classification.per_class[static_cast<std::size_t>(c)];
        out << std::left << std::setw(12) << kClassNames[c] << std::right << std::setw(11) << fmt(pc.precision)
            << std::setw(9) << fmt(pc.recall) << std::setw(9) << fmt(pc.f1) << std::setw(10) << pc.support
            << (pc.zero_division ? "  (zero-division)" : "") << "\n";
    }
    out << std::left << std::setw(12) << "overall" << std::right << std::setw(11)
        << fmt(report.classification.macro_precision) << std::setw(9) << fmt(report.classification.macro_recall)
        << std::setw(9) << fmt(report.classification.macro_f1) << std::setw(10) << report.classification.total
        << "\n";
    return out.str();
}

void write_metrics_report(const std::string& out_dir, const metrics::MetricsReport& report,
                          const std::string& stem) {
    std::filesystem::create_directories(out_dir);
    {
        std::ofstream out(std::filesystem::path(out_dir) / (stem + ".txt"));
        out << metrics_report_table(report);
    }
    {
        std::ofstream out(std::filesystem::path(out_dir) / (stem + ".kv"));
        out << metrics_report_kv(report);
    }
    {
        std::ofstream out(std::filesystem::path(out_dir) / "per_image_metrics.tsv");
        out << "# id\tdice\tiou\n";
        for (std::size_t i = 0; i < report.image_ids.size(); ++i)
            out << report.image_ids[i] << '\t' << fmt(report.per_image_dice[i], 6) << '\t'
                << fmt(report.per_image_iou[i], 6) << '\n';
    }
}

PerImageLog read_per_image_log(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw std::runtime_error("cannot open per-image log: " + path);
    PerImageLog log;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string id, dice, iou;
        if (!std::getline(ss, id, '\t') || !std::getline(ss, dice, '\t') || !std::getline(ss, iou, '\t'))
            throw std::runtime_error("malformed per-image log line: " + line);
        log.ids.push_back(id);
        log.dice.push_back(std::stod(dice));
        log.iou.push_back(std::stod(iou));
    }
    return log;
}

void write_learning_curve(const std::string& out_dir, const std::vector<LearningCurvePoint>& points,
                          double source_reference_dice) {
    std::filesystem::create_directories(out_dir);
    std::ofstream tsv(std::filesystem::path(out_dir) / "learning_curve.tsv");
    tsv << "# fraction\tn_train\tdice_mean\tdice_std\taccuracy_mean\taccuracy_std\trecovery_pct\n";
    for (const auto& p : points)
        tsv << fmt(p.fraction, 4) << '\t' << p.n_train_images << '\t' << fmt(p.dice_mean, 6) << '\t'
            << fmt(p.dice_std, 6) << '\t' << fmt(p.accuracy_mean, 6) << '\t' << fmt(p.accuracy_std, 6) << '\t'
            << fmt(p.recovery_pct, 2) << '\n';
    std::ofstream kv(std::filesystem::path(out_dir) / "learning_curve.kv");
    kv << "schema_version = 1\n";
    kv << "source_reference_dice = " << fmt(source_reference_dice, 6) << "\n";
    kv << "rows = " << points.size() << "\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
        std::string p = "row" + std::to_string(i);
        kv << p << ".fraction = " << fmt(points[i].fraction, 4) << "\n";
        kv << p << ".n_train = " << points[i].n_train_images << "\n";
        kv << p << ".dice_mean = " << fmt(points[i].dice_mean, 6) << "\n";
        kv << p << ".recovery_pct = " << fmt(points[i].recovery_pct, 2) << "\n";
    }
}

std::string comparison_table(const std::vector<RunSummary>& runs, int bootstrap_iterations,
                             std::uint64_t bootstrap_seed) {
    std::ostringstream out;
    out << std::left << std::setw(28) << "run" << std::right << std::setw(8) << "images" << std::setw(10)
        << "dice" << std::setw(22) << "dice 95% CI" << std::setw(10) << "acc" << std::setw(12) << "signif"
        << "\n";
    const RunSummary* baseline = nullptr;
    for (const auto& r : runs)
        if (r.valid) {
            baseline = &r;
            break;
        }
    for (const auto& r : runs) {
        if (!r.valid) continue;
        std::string ci = "-";
        if (r.report.per_image_dice.size() >= 2) {
            auto [lo, hi] = stats::bootstrap_ci(r.report.per_image_dice, bootstrap_iterations, 0.95, bootstrap_seed);
            ci = "[" + fmt(lo) + ", " + fmt(hi) + "]";
        }
        std::string sig = "";
        if (baseline && &r != baseline && r.report.per_image_dice.size() == baseline->report.per_image_dice.size() &&
            r.report.image_ids == baseline->report.image_ids) {
            auto w = stats::wilcoxon_signed_rank(r.report.per_image_dice, baseline->report.per_image_dice);
            if (!w.degenerate && w.p_value < 0.001) sig = "*** ";
            else if (!w.degenerate && w.p_value < 0.01) sig = "** ";
            else if (!w.degenerate && w.p_value < 0.05) sig = "* ";
            sig += "p=" + fmt(w.p_value, 4);
        }
        out << std::left << std::setw(28) << r.name << std::right << std::setw(8) << r.report.image_ids.size()
            << std::setw(10) << fmt(r.report.mean_dice) << std::setw(22) << ci << std::setw(10)
            << fmt(r.report.classification.accuracy) << std::setw(12) << sig << "\n";
    }
    return out.str();
}

}  // namespace hyformer::report
