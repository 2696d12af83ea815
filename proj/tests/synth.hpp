#pragma once

// In-memory synthetic datasets for training/eval tests: bright (or
// inverted-contrast) elliptical lesions on speckled backgrounds.

#include <memory>
#include <string>

#include "hyformer/data.hpp"

namespace synth {

using hyformer::data::DatasetManifest;
using hyformer::data::ImageRecord;
using hyformer::data::Label;
using hyformer::data::MemoryDatasetView;
using hyformer::data::Sample;
using hyformer::data::Split;
using hyformer::nn::RandomSource;
using hyformer::nn::Tensor;

inline Sample make_blob_sample(int size, Label label, RandomSource& rng, bool inverted = false) {
    const double bg = inverted ? 0.75 : 0.25;
    const double fg = inverted ? 0.15 : 0.85;
    Sample s;
    s.label = label;
    s.image = Tensor({3, size, size});
    s.mask = Tensor({size, size});
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            double v = std::clamp(bg + rng.normal(0.0, 0.04), 0.0, 1.0);
            for (int c = 0; c < 3; ++c) s.image.at3(c, y, x) = v;
        }
    if (label != Label::Normal) {
        double cy = rng.uniform(size * 0.3, size * 0.7);
        double cx = rng.uniform(size * 0.3, size * 0.7);
        double r = rng.uniform(size * 0.14, size * 0.26);
        double ry = r, rx = label == Label::Benign ? r : r * 1.8;
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                double dy = (y - cy) / ry, dx = (x - cx) / rx;
                if (dy * dy + dx * dx <= 1.0) {
                    s.mask.at2(y, x) = 1.0;
                    double v = std::clamp(fg + rng.normal(0.0, 0.03), 0.0, 1.0);
                    for (int c = 0; c < 3; ++c) s.image.at3(c, y, x) = v;
                }
            }
    }
    return s;
}

struct Dataset {
    DatasetManifest manifest;
    std::shared_ptr<MemoryDatasetView> view;
};

// counts: {normal, benign, malignant}; all records land in `split`.
inline Dataset make_dataset(int size, std::array<int, 3> counts, std::uint64_t seed, Split split = Split::Train,
                            bool inverted = false, const std::string& prefix = "img") {
    Dataset ds;
    ds.view = std::make_shared<MemoryDatasetView>();
    RandomSource rng(seed);
    int idx = 0;
    for (int cls = 0; cls < 3; ++cls)
        for (int i = 0; i < counts[static_cast<std::size_t>(cls)]; ++i, ++idx) {
            ImageRecord rec;
            rec.id = prefix + "_" + std::to_string(idx);
            rec.label = static_cast<Label>(cls);
            rec.split = split;
            rec.image_path = "<memory>";
            ds.manifest.records.push_back(rec);
            ds.view->put(rec.id, make_blob_sample(size, rec.label, rng, inverted));
        }
    return ds;
}

}  // namespace synth
