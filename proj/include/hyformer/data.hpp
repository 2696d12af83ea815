#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hyformer/rand.hpp"
#include "hyformer/transforms.hpp"

namespace hyformer::data {

using nn::RandomSource;
using nn::Tensor;

enum class Label : int { Normal = 0, Benign = 1, Malignant = 2 };
enum class Source { BUSI, External };
enum class Split { Unassigned, Train, Val, Test };

std::string to_string(Label l);
std::string to_string(Split s);
std::string to_string(Source s);
Label label_from_string(const std::string& s);
Split split_from_string(const std::string& s);
Source source_from_string(const std::string& s);

struct ImageRecord {
    std::string id;
    std::string image_path;
    std::vector<std::string> mask_paths;  // multiple masks are merged by pixel-wise OR
    Label label = Label::Normal;
    Source source = Source::BUSI;
    Split split = Split::Unassigned;
};

struct DatasetManifest {
    std::vector<ImageRecord> records;
    std::vector<std::string> warnings;

    std::array<std::int64_t, 3> class_counts() const;
    std::array<std::int64_t, 3> class_counts(Split split) const;
    std::vector<std::string> ids(Split split) const;
    const ImageRecord* find(const std::string& id) const;
    void validate() const;
};

struct PreprocessConfig {
    int target_size = 224;
    std::array<double, 3> mean{0.485, 0.456, 0.406};
    std::array<double, 3> stddev{0.229, 0.224, 0.225};
    Interp interpolation = Interp::Bicubic;
    void validate() const;
};

struct AugmentationConfig {
    double p_hflip = 0.5;
    double p_vflip = 0.3;
    double p_rotate = 0.3;
    double rotate_degrees = 20.0;
    double jitter_factor = 0.3;
    double p_erase = 0.2;
    std::array<double, 2> erase_scale{0.02, 0.33};
    std::uint64_t rng_seed = 0;
    void validate() const;
    static AugmentationConfig disabled() {
        AugmentationConfig c;
        c.p_hflip = c.p_vflip = c.p_rotate = c.jitter_factor = c.p_erase = 0.0;
        return c;
    }
};

struct AdaptationSplitSpec {
    struct FractionSplit {
        double fraction = 0.0;
        std::vector<std::string> train_ids;
        std::vector<std::string> test_ids;
    };
    std::vector<double> fractions{0.05, 0.10, 0.20, 0.50};
    std::vector<FractionSplit> splits;  // populated by make_adaptation_splits
    std::vector<std::string> warnings;
};

// One loaded sample: image {3,H,W} in [0,1] (or normalized after
// preprocessing), mask {H,W} in {0,1}.
struct Sample {
    Tensor image;
    Tensor mask;
    Label label = Label::Normal;
};

// ---- ingestion ----
DatasetManifest load_busi_manifest(const std::string& root);
DatasetManifest load_external_manifest(const std::string& root);

// RGB-coded mask to (binary mask, lesion label). Input {3,H,W} in [0,1].
// Mixed red/green foreground throws (annotation ambiguity is never resolved
// silently).
std::pair<Tensor, Label> convert_rgb_mask(const Tensor& rgb, double black_threshold = 10.0 / 255.0);

// ---- splits ----
DatasetManifest stratified_split(DatasetManifest manifest, const std::array<double, 3>& fractions,
                                 std::uint64_t seed);
AdaptationSplitSpec make_adaptation_splits(const DatasetManifest& manifest, AdaptationSplitSpec spec,
                                           std::uint64_t seed);

// Largest-remainder integer allocation of `target_total` over `counts`.
std::vector<std::int64_t> allocate_largest_remainder(const std::vector<std::int64_t>& counts,
                                                     std::int64_t target_total);

// ---- per-sample processing ----
Sample preprocess_sample(const Sample& raw, const PreprocessConfig& cfg);
// Geometric transforms hit image and mask identically; photometric ones hit
// the image only. Training-mode only.
void augment_sample(Tensor& image, Tensor& mask, const AugmentationConfig& cfg, RandomSource& rng);

// ---- persistence ----
void save_manifest(const DatasetManifest& manifest, const std::string& path);
DatasetManifest load_manifest(const std::string& path);

// Content hash over record identities, labels and image/mask file bytes.
std::uint64_t dataset_fingerprint(const DatasetManifest& manifest);

// Sample source with an access log; the training engine is handed a view so
// test-split isolation is checkable after the fact.
class DatasetView {
public:
    virtual ~DatasetView() = default;
    Sample load(const ImageRecord& rec) const {
        access_log_.push_back(rec.id);
        return load_impl(rec);
    }
    const std::vector<std::string>& access_log() const { return access_log_; }
    void clear_access_log() { access_log_.clear(); }

protected:
    virtual Sample load_impl(const ImageRecord& rec) const = 0;
    mutable std::vector<std::string> access_log_;
};

// Reads from disk through the image codecs; merges multiple masks by OR.
class DiskDatasetView : public DatasetView {
protected:
    Sample load_impl(const ImageRecord& rec) const override;
};

class MemoryDatasetView : public DatasetView {
public:
    void put(const std::string& id, Sample s) { samples_[id] = std::move(s); }

protected:
    Sample load_impl(const ImageRecord& rec) const override;

private:
    std::map<std::string, Sample> samples_;
};

}  // namespace hyformer::data
