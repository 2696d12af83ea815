// Generates small synthetic ultrasound-like datasets for integration tests
// and demos: BUSI-style class folders with *_mask files, or an external-style
// tree with RGB-coded masks. Lesions are bright (or inverted-contrast) blobs
// on speckled backgrounds.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "hyformer/imageio.hpp"
#include "hyformer/rand.hpp"
#include "hyformer/tensor.hpp"

namespace fs = std::filesystem;
using hyformer::nn::RandomSource;
using hyformer::nn::Tensor;

namespace {

struct Blob {
    double cy, cx, ry, rx;
};

Tensor speckle_background(int size, RandomSource& rng, double base) {
    Tensor img({3, size, size});
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            double v = std::clamp(base + rng.normal(0.0, 0.05), 0.0, 1.0);
            for (int c = 0; c < 3; ++c) img.at3(c, y, x) = v;
        }
    return img;
}

void stamp_blob(Tensor& img, Tensor& mask, const Blob& b, double intensity, RandomSource& rng) {
    const int size = mask.dim(0);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            double dy = (y - b.cy) / b.ry, dx = (x - b.cx) / b.rx;
            if (dy * dy + dx * dx <= 1.0) {
                mask.at2(y, x) = 1.0;
                double v = std::clamp(intensity + rng.normal(0.0, 0.03), 0.0, 1.0);
                for (int c = 0; c < 3; ++c) img.at3(c, y, x) = v;
            }
        }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthetic breast-ultrasound-style dataset generator"};
    std::string out_dir, style = "busi";
    int size = 64, n_normal = 4, n_benign = 4, n_malignant = 4;
    std::uint64_t seed = 7;
    bool inverted = false;
    app.add_option("--out", out_dir, "output root")->required();
    app.add_option("--style", style, "busi | external");
    app.add_option("--size", size, "image size in pixels");
    app.add_option("--normal", n_normal, "normal image count");
    app.add_option("--benign", n_benign, "benign image count");
    app.add_option("--malignant", n_malignant, "malignant image count");
    app.add_option("--seed", seed, "generator seed");
    app.add_flag("--inverted", inverted, "dark lesions on bright background (domain-shifted variant)");
    CLI11_PARSE(app, argc, argv);

    RandomSource rng(seed);
    const double bg = inverted ? 0.75 : 0.25;
    const double fg = inverted ? 0.15 : 0.85;

    auto make_sample = [&](int label) {
        Tensor img = speckle_background(size, rng, bg);
        Tensor mask({size, size});
        if (label != 0) {
            Blob b;
            b.cy = rng.uniform(size * 0.3, size * 0.7);
            b.cx = rng.uniform(size * 0.3, size * 0.7);
            // benign: round; malignant: elongated + slightly dimmer rim
            double r = rng.uniform(size * 0.10, size * 0.22);
            b.ry = r;
            b.rx = label == 1 ? r : r * rng.uniform(1.6, 2.2);
            stamp_blob(img, mask, b, label == 1 ? fg : fg * 0.82, rng);
        }
        return std::pair{img, mask};
    };

    if (style == "busi") {
        const char* classes[3] = {"normal", "benign", "malignant"};
        int counts[3] = {n_normal, n_benign, n_malignant};
        for (int cls = 0; cls < 3; ++cls) {
            fs::path dir = fs::path(out_dir) / classes[cls];
            fs::create_directories(dir);
            for (int i = 0; i < counts[cls]; ++i) {
                auto [img, mask] = make_sample(cls);
                std::string stem = std::string(classes[cls]) + " (" + std::to_string(i + 1) + ")";
                hyformer::io::save_image_rgb((dir / (stem + ".png")).string(), img);
                hyformer::io::save_image_gray((dir / (stem + "_mask.png")).string(), mask);
            }
        }
    } else if (style == "external") {
        fs::create_directories(fs::path(out_dir) / "images");
        fs::create_directories(fs::path(out_dir) / "masks");
        int counts[3] = {n_normal, n_benign, n_malignant};
        int idx = 0;
        for (int cls = 0; cls < 3; ++cls)
            for (int i = 0; i < counts[cls]; ++i, ++idx) {
                auto [img, mask] = make_sample(cls);
                std::string name = "case_" + std::to_string(1000 + idx) + ".png";
                hyformer::io::save_image_rgb((fs::path(out_dir) / "images" / name).string(), img);
                Tensor rgb_mask({3, size, size});
                for (int y = 0; y < size; ++y)
                    for (int x = 0; x < size; ++x)
                        if (mask.at2(y, x) == 1.0) rgb_mask.at3(cls == 1 ? 1 : 0, y, x) = 1.0;
                hyformer::io::save_image_rgb((fs::path(out_dir) / "masks" / name).string(), rgb_mask);
            }
    } else {
        std::cerr << "unknown --style " << style << "\n";
        return 2;
    }
    std::cout << "wrote synthetic dataset to " << out_dir << "\n";
    return 0;
}
