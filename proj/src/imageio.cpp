#include "hyformer/imageio.hpp"

#include <opencv2/imgcodecs.hpp>
#include <stdexcept>

namespace hyformer::io {

Tensor load_image_rgb(const std::string& path) {
    cv::Mat img = cv::imread(path, cv::IMREAD_COLOR);  // BGR, 8-bit
    if (img.empty()) throw std::runtime_error("unreadable image: " + path);
    Tensor t({3, img.rows, img.cols});
    for (int y = 0; y < img.rows; ++y) {
        const cv::Vec3b* row = img.ptr<cv::Vec3b>(y);
        for (int x = 0; x < img.cols; ++x) {
            t.at3(0, y, x) = row[x][2] / 255.0;  // R
            t.at3(1, y, x) = row[x][1] / 255.0;  // G
            t.at3(2, y, x) = row[x][0] / 255.0;  // B
        }
    }
    return t;
}

Tensor load_mask(const std::string& path) {
    cv::Mat img = cv::imread(path, cv::IMREAD_GRAYSCALE);
    if (img.empty()) throw std::runtime_error("unreadable mask: " + path);
    Tensor t({img.rows, img.cols});
    for (int y = 0; y < img.rows; ++y) {
        const std::uint8_t* row = img.ptr<std::uint8_t>(y);
        for (int x = 0; x < img.cols; ++x) t.at2(y, x) = row[x] >= 128 ? 1.0 : 0.0;
    }
    return t;
}

void save_image_gray(const std::string& path, const Tensor& hw01) {
    const auto& s = hw01.shape();
    cv::Mat img(s[0], s[1], CV_8UC1);
    for (int y = 0; y < s[0]; ++y)
        for (int x = 0; x < s[1]; ++x)
            img.at<std::uint8_t>(y, x) =
                static_cast<std::uint8_t>(std::min(255.0, std::max(0.0, hw01.at2(y, x) * 255.0 + 0.5)));
    if (!cv::imwrite(path, img)) throw std::runtime_error("failed to write image: " + path);
}

void save_image_rgb(const std::string& path, const Tensor& chw01) {
    const auto& s = chw01.shape();
    cv::Mat img(s[1], s[2], CV_8UC3);
    for (int y = 0; y < s[1]; ++y)
        for (int x = 0; x < s[2]; ++x) {
            auto to8 = [&](int c) {
                return static_cast<std::uint8_t>(std::min(255.0, std::max(0.0, chw01.at3(c, y, x) * 255.0 + 0.5)));
            };
            img.at<cv::Vec3b>(y, x) = cv::Vec3b(to8(2), to8(1), to8(0));  // BGR on disk
        }
    if (!cv::imwrite(path, img)) throw std::runtime_error("failed to write image: " + path);
}

}  // namespace hyformer::io
