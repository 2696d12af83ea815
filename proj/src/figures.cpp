#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "hyformer/report.hpp"

namespace hyformer::report {

using nn::Tensor;

namespace {

cv::Mat gray_to_bgr(const Tensor& hw) {
    const int H = hw.dim(0), W = hw.dim(1);
    cv::Mat m(H, W, CV_8UC1);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            m.at<std::uint8_t>(y, x) =
                static_cast<std::uint8_t>(std::min(255.0, std::max(0.0, hw.at2(y, x) * 255.0 + 0.5)));
    cv::Mat bgr;
    cv::cvtColor(m, bgr, cv::COLOR_GRAY2BGR);
    return bgr;
}

cv::Mat chw_to_bgr(const Tensor& chw) {
    const int H = chw.dim(1), W = chw.dim(2);
    cv::Mat m(H, W, CV_8UC3);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            auto to8 = [&](int c) {
                return static_cast<std::uint8_t>(std::min(255.0, std::max(0.0, chw.at3(c, y, x) * 255.0 + 0.5)));
            };
            m.at<cv::Vec3b>(y, x) = cv::Vec3b(to8(2), to8(1), to8(0));
        }
    return m;
}

cv::Mat heat_overlay(const cv::Mat& base_bgr, const Tensor& map01) {
    cv::Mat gray(base_bgr.rows, base_bgr.cols, CV_8UC1);
    for (int y = 0; y < base_bgr.rows; ++y)
        for (int x = 0; x < base_bgr.cols; ++x)
            gray.at<std::uint8_t>(y, x) =
                static_cast<std::uint8_t>(std::min(255.0, std::max(0.0, map01.at2(y, x) * 255.0 + 0.5)));
    cv::Mat heat;
    cv::applyColorMap(gray, heat, cv::COLORMAP_JET);
    cv::Mat blended;
    cv::addWeighted(base_bgr, 0.5, heat, 0.5, 0.0, blended);
    return blended;
}

void caption(cv::Mat& img, const std::string& text) {
    cv::putText(img, text, cv::Point(4, 14), cv::FONT_HERSHEY_SIMPLEX, 0.38, cv::Scalar(0, 0, 0), 2);
    cv::putText(img, text, cv::Point(4, 14), cv::FONT_HERSHEY_SIMPLEX, 0.38, cv::Scalar(255, 255, 255), 1);
}

}  // namespace

void write_interpret_panel(const std::string& path, const Tensor& image_chw01, const Tensor& gt,
                           const Tensor& pred, const Tensor& attention01, const Tensor& gradcam01,
                           double attention_iou, const std::string& text) {
    cv::Mat input = chw_to_bgr(image_chw01);
    cv::Mat gt_bgr = gray_to_bgr(gt);
    cv::Mat pred_bgr = gray_to_bgr(pred);
    cv::Mat attn = heat_overlay(input, attention01);
    cv::Mat cam = heat_overlay(input, gradcam01);
    caption(input, text);
    caption(gt_bgr, "ground truth");
    caption(pred_bgr, "prediction");
    {
        std::ostringstream label;
        label << "attention IoU " << std::fixed << std::setprecision(2) << attention_iou;
        caption(attn, label.str());
    }
    caption(cam, "grad-cam");
    std::vector<cv::Mat> cols = {input, gt_bgr, pred_bgr, attn, cam};
    cv::Mat panel;
    cv::hconcat(cols, panel);
    if (!cv::imwrite(path, panel)) throw std::runtime_error("failed to write panel: " + path);
}

void write_curve_plot(const std::string& path, const std::vector<double>& xs, const std::vector<double>& ys,
                      double reference, const std::string& title) {
    const int W = 640, H = 480, margin = 60;
    cv::Mat canvas(H, W, CV_8UC3, cv::Scalar(255, 255, 255));
    double xmax = 1e-9, ymax = 1e-9;
    for (double x : xs) xmax = std::max(xmax, x);
    for (double y : ys) ymax = std::max(ymax, y);
    ymax = std::max({ymax, reference, 0.1}) * 1.1;
    auto px = [&](double x) { return margin + static_cast<int>((W - 2 * margin) * (xmax > 0 ? x / xmax : 0)); };
    auto py = [&](double y) { return H - margin - static_cast<int>((H - 2 * margin) * y / ymax); };
    cv::line(canvas, {margin, H - margin}, {W - margin, H - margin}, cv::Scalar(0, 0, 0), 1);
    cv::line(canvas, {margin, H - margin}, {margin, margin}, cv::Scalar(0, 0, 0), 1);
    cv::putText(canvas, title, {margin, margin - 20}, cv::FONT_HERSHEY_SIMPLEX, 0.5, cv::Scalar(0, 0, 0), 1);
    // source-domain reference line
    cv::line(canvas, {margin, py(reference)}, {W - margin, py(reference)}, cv::Scalar(0, 0, 200), 1,
             cv::LINE_AA);
    for (std::size_t i = 0; i + 1 < xs.size(); ++i)
        cv::line(canvas, {px(xs[i]), py(ys[i])}, {px(xs[i + 1]), py(ys[i + 1])}, cv::Scalar(200, 80, 0), 2,
                 cv::LINE_AA);
    for (std::size_t i = 0; i < xs.size(); ++i)
        cv::circle(canvas, {px(xs[i]), py(ys[i])}, 3, cv::Scalar(200, 80, 0), cv::FILLED, cv::LINE_AA);
    for (double tick : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        double y = tick * ymax;
        cv::putText(canvas, cv::format("%.2f", y), {8, py(y) + 4}, cv::FONT_HERSHEY_SIMPLEX, 0.38,
                    cv::Scalar(0, 0, 0), 1);
    }
    for (double x : xs)
        cv::putText(canvas, cv::format("%.0f%%", 100 * x), {px(x) - 12, H - margin + 18}, cv::FONT_HERSHEY_SIMPLEX,
                    0.38, cv::Scalar(0, 0, 0), 1);
    if (!cv::imwrite(path, canvas)) throw std::runtime_error("failed to write plot: " + path);
}

}  // namespace hyformer::report
