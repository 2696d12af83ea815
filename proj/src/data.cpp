#include "hyformer/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "hyformer/imageio.hpp"

namespace fs = std::filesystem;

namespace hyformer::data {

using nn::check;
using nn::mix_seed;

std::string to_string(Label l) {
    switch (l) {
        case Label::Normal: return "normal";
        case Label::Benign: return "benign";
        case Label::Malignant: return "malignant";
    }
    return "?";
}
std::string to_string(Split s) {
    switch (s) {
        case Split::Unassigned: return "unassigned";
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "?";
}
std::string to_string(Source s) { return s == Source::BUSI ? "busi" : "external"; }

Label label_from_string(const std::string& s) {
    if (s == "normal") return Label::Normal;
    if (s == "benign") return Label::Benign;
    if (s == "malignant") return Label::Malignant;
    throw std::invalid_argument("unknown label: " + s);
}
Split split_from_string(const std::string& s) {
    if (s == "unassigned") return Split::Unassigned;
    if (s == "train") return Split::Train;
    if (s == "val") return Split::Val;
    if (s == "test") return Split::Test;
    throw std::invalid_argument("unknown split: " + s);
}
Source source_from_string(const std::string& s) {
    if (s == "busi") return Source::BUSI;
    if (s == "external") return Source::External;
    throw std::invalid_argument("unknown source: " + s);
}

std::array<std::int64_t, 3> DatasetManifest::class_counts() const {
    std::array<std::int64_t, 3> counts{};
    for (const auto& r : records) counts[static_cast<std::size_t>(r.label)]++;
    return counts;
}

std::array<std::int64_t, 3> DatasetManifest::class_counts(Split split) const {
    std::array<std::int64_t, 3> counts{};
    for (const auto& r : records)
        if (r.split == split) counts[static_cast<std::size_t>(r.label)]++;
    return counts;
}

std::vector<std::string> DatasetManifest::ids(Split split) const {
    std::vector<std::string> out;
    for (const auto& r : records)
        if (r.split == split) out.push_back(r.id);
    return out;
}

const ImageRecord* DatasetManifest::find(const std::string& id) const {
    for (const auto& r : records)
        if (r.id == id) return &r;
    return nullptr;
}

void DatasetManifest::validate() const {
    auto counts = class_counts();
    std::int64_t total = counts[0] + counts[1] + counts[2];
    check(total == static_cast<std::int64_t>(records.size()), "manifest: class counts do not sum to record count");
}

void PreprocessConfig::validate() const {
    check(target_size > 0, "PreprocessConfig: target size must be positive");
    for (double s : stddev) check(s > 0, "PreprocessConfig: std components must be positive");
}

void AugmentationConfig::validate() const {
    for (double p : {p_hflip, p_vflip, p_rotate, jitter_factor, p_erase})
        check(p >= 0.0 && p <= 1.0, "AugmentationConfig: probabilities/factors must lie in [0,1]");
    check(erase_scale[0] > 0.0 && erase_scale[1] < 1.0 && erase_scale[0] <= erase_scale[1],
          "AugmentationConfig: erase scale range must be within (0,1)");
}

namespace {

bool is_image_file(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp";
}

std::vector<fs::path> sorted_files(const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file()) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

}  // namespace

DatasetManifest load_busi_manifest(const std::string& root) {
    check(fs::is_directory(root), "load_busi_manifest: not a directory: " + root);
    DatasetManifest manifest;
    std::vector<fs::path> class_dirs;
    for (const auto& e : fs::directory_iterator(root))
        if (e.is_directory()) class_dirs.push_back(e.path());
    std::sort(class_dirs.begin(), class_dirs.end());
    check(!class_dirs.empty(), "load_busi_manifest: no class subfolders under " + root);

    for (const auto& dir : class_dirs) {
        Label label = label_from_string(lower(dir.filename().string()));
        auto files = sorted_files(dir);
        std::size_t n_before = manifest.records.size();
        for (const auto& f : files) {
            if (!is_image_file(f)) continue;
            std::string stem = f.stem().string();
            if (stem.find("_mask") != std::string::npos) continue;  // mask file, not an image
            ImageRecord rec;
            rec.id = lower(dir.filename().string()) + "/" + stem;
            rec.image_path = f.string();
            rec.label = label;
            rec.source = Source::BUSI;
            std::string prefix = stem + "_mask";
            for (const auto& m : files) {
                if (!is_image_file(m)) continue;
                std::string mstem = m.stem().string();
                if (mstem.rfind(prefix, 0) == 0) rec.mask_paths.push_back(m.string());
            }
            if (rec.mask_paths.empty() && label != Label::Normal)
                throw std::runtime_error("load_busi_manifest: missing mask for non-normal image " + f.string());
            manifest.records.push_back(std::move(rec));
        }
        if (manifest.records.size() == n_before)
            manifest.warnings.push_back("empty class folder: " + dir.string());
    }
    std::sort(manifest.records.begin(), manifest.records.end(),
              [](const ImageRecord& a, const ImageRecord& b) { return a.id < b.id; });
    return manifest;
}

std::pair<Tensor, Label> convert_rgb_mask(const Tensor& rgb, double black_threshold) {
    const auto& s = rgb.shape();
    check(s.size() == 3 && s[0] == 3, "convert_rgb_mask: {3,H,W} expected");
    const int H = s[1], W = s[2];
    Tensor mask({H, W});
    std::int64_t red = 0, green = 0;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double r = rgb.at3(0, y, x), g = rgb.at3(1, y, x), b = rgb.at3(2, y, x);
            if (r > black_threshold || g > black_threshold || b > black_threshold) {
                mask.at2(y, x) = 1.0;
                if (r > g) ++red;
                else if (g > r) ++green;
            }
        }
    if (red > 0 && green > 0)
        throw std::runtime_error("convert_rgb_mask: ambiguous annotation with both red and green foreground (" +
                                 std::to_string(red) + " red, " + std::to_string(green) + " green pixels)");
    Label label = Label::Normal;  // "none": empty mask
    if (green > 0) label = Label::Benign;
    else if (red > 0) label = Label::Malignant;
    return {std::move(mask), label};
}

DatasetManifest load_external_manifest(const std::string& root) {
    fs::path images = fs::path(root) / "images";
    fs::path masks = fs::path(root) / "masks";
    check(fs::is_directory(images) && fs::is_directory(masks),
          "load_external_manifest: expected images/ and masks/ under " + root);
    DatasetManifest manifest;
    for (const auto& f : sorted_files(images)) {
        if (!is_image_file(f)) continue;
        fs::path mask_path = masks / f.filename();
        if (!fs::exists(mask_path))
            throw std::runtime_error("load_external_manifest: missing mask for " + f.string());
        ImageRecord rec;
        rec.id = f.stem().string();
        rec.image_path = f.string();
        rec.mask_paths.push_back(mask_path.string());
        rec.source = Source::External;
        auto [mask, label] = convert_rgb_mask(io::load_image_rgb(mask_path.string()));
        rec.label = label;
        manifest.records.push_back(std::move(rec));
    }
    std::sort(manifest.records.begin(), manifest.records.end(),
              [](const ImageRecord& a, const ImageRecord& b) { return a.id < b.id; });
    return manifest;
}

std::vector<std::int64_t> allocate_largest_remainder(const std::vector<std::int64_t>& counts,
                                                     std::int64_t target_total) {
    std::int64_t n = std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
    check(target_total >= 0 && target_total <= n, "allocate_largest_remainder: target out of range");
    std::vector<std::int64_t> alloc(counts.size(), 0);
    if (n == 0) return alloc;
    std::vector<double> remainders(counts.size());
    std::int64_t assigned = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        double quota = static_cast<double>(target_total) * static_cast<double>(counts[i]) / static_cast<double>(n);
        alloc[i] = static_cast<std::int64_t>(std::floor(quota));
        remainders[i] = quota - static_cast<double>(alloc[i]);
        assigned += alloc[i];
    }
    std::vector<std::size_t> order(counts.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (remainders[a] != remainders[b]) return remainders[a] > remainders[b];
        return a < b;
    });
    for (std::size_t k = 0; assigned < target_total; k = (k + 1) % order.size()) {
        std::size_t i = order[k];
        if (alloc[i] < counts[i]) {
            ++alloc[i];
            ++assigned;
        }
    }
    return alloc;
}

namespace {

// Quota allocation of n items over weighted bins (largest remainder,
// earlier bin wins ties).
std::vector<std::int64_t> allocate_by_weights(const std::vector<double>& weights, std::int64_t n) {
    std::vector<std::int64_t> alloc(weights.size(), 0);
    std::vector<double> remainders(weights.size());
    std::int64_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        double quota = weights[i] * static_cast<double>(n);
        alloc[i] = static_cast<std::int64_t>(std::floor(quota));
        remainders[i] = quota - static_cast<double>(alloc[i]);
        assigned += alloc[i];
    }
    std::vector<std::size_t> order(weights.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (remainders[a] != remainders[b]) return remainders[a] > remainders[b];
        return a < b;
    });
    for (std::size_t k = 0; assigned < n && k < order.size(); ++k) {
        ++alloc[order[k]];
        ++assigned;
    }
    return alloc;
}

template <typename T>
void shuffle_fisher_yates(std::vector<T>& v, RandomSource& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.uniform_int(i)]);
}

}  // namespace

DatasetManifest stratified_split(DatasetManifest manifest, const std::array<double, 3>& fractions,
                                 std::uint64_t seed) {
    double sum = fractions[0] + fractions[1] + fractions[2];
    check(std::abs(sum - 1.0) < 1e-9, "stratified_split: fractions must sum to 1");
    for (double f : fractions) check(f >= 0.0, "stratified_split: fractions must be non-negative");
    int positive_splits = 0;
    for (double f : fractions)
        if (f > 0.0) ++positive_splits;

    for (int cls = 0; cls < 3; ++cls) {
        std::vector<std::string> ids;
        for (const auto& r : manifest.records)
            if (static_cast<int>(r.label) == cls) ids.push_back(r.id);
        if (ids.empty()) continue;
        check(static_cast<int>(ids.size()) >= positive_splits,
              "stratified_split: class " + to_string(static_cast<Label>(cls)) + " has " +
                  std::to_string(ids.size()) + " records but " + std::to_string(positive_splits) +
                  " splits need at least one each");
        std::sort(ids.begin(), ids.end());
        RandomSource rng(mix_seed(seed, static_cast<std::uint64_t>(cls)));
        shuffle_fisher_yates(ids, rng);
        auto alloc = allocate_by_weights({fractions[0], fractions[1], fractions[2]},
                                         static_cast<std::int64_t>(ids.size()));
        std::size_t pos = 0;
        const Split split_order[3] = {Split::Train, Split::Val, Split::Test};
        for (int s = 0; s < 3; ++s)
            for (std::int64_t k = 0; k < alloc[static_cast<std::size_t>(s)]; ++k) {
                const std::string& id = ids[pos++];
                for (auto& r : manifest.records)
                    if (r.id == id) r.split = split_order[s];
            }
    }
    return manifest;
}

AdaptationSplitSpec make_adaptation_splits(const DatasetManifest& manifest, AdaptationSplitSpec spec,
                                           std::uint64_t seed) {
    const std::int64_t n = static_cast<std::int64_t>(manifest.records.size());
    check(n > 0, "make_adaptation_splits: empty manifest");
    std::vector<double> fractions = spec.fractions;
    std::sort(fractions.begin(), fractions.end());
    for (double f : fractions) check(f >= 0.0 && f <= 1.0, "make_adaptation_splits: fraction outside [0,1]");

    // per-class shuffled orders; the per-fraction train sets are nested
    // prefixes so the learning curve is free of split-membership noise
    std::array<std::vector<std::string>, 3> class_ids;
    for (const auto& r : manifest.records) class_ids[static_cast<std::size_t>(r.label)].push_back(r.id);
    for (int cls = 0; cls < 3; ++cls) {
        std::sort(class_ids[static_cast<std::size_t>(cls)].begin(), class_ids[static_cast<std::size_t>(cls)].end());
        RandomSource rng(mix_seed(seed, static_cast<std::uint64_t>(cls) + 101));
        shuffle_fisher_yates(class_ids[static_cast<std::size_t>(cls)], rng);
    }
    std::vector<std::int64_t> counts;
    for (int cls = 0; cls < 3; ++cls)
        counts.push_back(static_cast<std::int64_t>(class_ids[static_cast<std::size_t>(cls)].size()));

    spec.splits.clear();
    std::vector<std::int64_t> prev_alloc(3, 0);
    for (double f : fractions) {
        std::int64_t target = llround(f * static_cast<double>(n));  // round half up
        auto alloc = allocate_largest_remainder(counts, target);
        // enforce nesting: allocations may never shrink as fractions grow
        for (std::size_t c = 0; c < 3; ++c) {
            while (alloc[c] < prev_alloc[c]) {
                for (std::size_t d = 0; d < 3; ++d)
                    if (alloc[d] > prev_alloc[d] && counts[c] > alloc[c]) {
                        --alloc[d];
                        ++alloc[c];
                        break;
                    }
            }
        }
        AdaptationSplitSpec::FractionSplit fsplit;
        fsplit.fraction = f;
        for (std::size_t c = 0; c < 3; ++c) {
            if (counts[c] > 0 && alloc[c] == 0 && f > 0.0)
                spec.warnings.push_back("fraction " + std::to_string(f) + " selects no " +
                                        to_string(static_cast<Label>(c)) + " images");
            for (std::int64_t k = 0; k < alloc[c]; ++k) fsplit.train_ids.push_back(class_ids[c][static_cast<std::size_t>(k)]);
            for (std::int64_t k = alloc[c]; k < counts[c]; ++k)
                fsplit.test_ids.push_back(class_ids[c][static_cast<std::size_t>(k)]);
        }
        std::sort(fsplit.train_ids.begin(), fsplit.train_ids.end());
        std::sort(fsplit.test_ids.begin(), fsplit.test_ids.end());
        spec.splits.push_back(std::move(fsplit));
        prev_alloc = alloc;
    }
    spec.fractions = fractions;
    return spec;
}

Sample preprocess_sample(const Sample& raw, const PreprocessConfig& cfg) {
    cfg.validate();
    const auto& is = raw.image.shape();
    check(is.size() == 3 && is[0] == 3 && is[1] > 0 && is[2] > 0, "preprocess_sample: degenerate image");
    check(raw.mask.rank() == 2 && raw.mask.dim(0) == is[1] && raw.mask.dim(1) == is[2],
          "preprocess_sample: mask shape differs from image");
    Sample out;
    out.label = raw.label;
    out.image = normalize_image(resize_image(raw.image, cfg.target_size, cfg.target_size, cfg.interpolation),
                                cfg.mean, cfg.stddev);
    out.mask = resize_mask(raw.mask, cfg.target_size, cfg.target_size);
    return out;
}

void augment_sample(Tensor& image, Tensor& mask, const AugmentationConfig& cfg, RandomSource& rng) {
    cfg.validate();
    const auto& is = image.shape();
    check(is.size() == 3 && mask.rank() == 2 && mask.dim(0) == is[1] && mask.dim(1) == is[2],
          "augment_sample: image/mask shape mismatch");
    const int H = is[1], W = is[2];

    if (cfg.p_hflip > 0.0 && rng.uniform() < cfg.p_hflip) {
        image = hflip_image(image);
        mask = hflip_mask(mask);
    }
    if (cfg.p_vflip > 0.0 && rng.uniform() < cfg.p_vflip) {
        image = vflip_image(image);
        mask = vflip_mask(mask);
    }
    if (cfg.p_rotate > 0.0 && rng.uniform() < cfg.p_rotate) {
        double angle = rng.uniform(-cfg.rotate_degrees, cfg.rotate_degrees);
        image = rotate_image(image, angle);
        mask = rotate_mask(mask, angle);
    }
    if (cfg.jitter_factor > 0.0) {
        double brightness = rng.uniform(1.0 - cfg.jitter_factor, 1.0 + cfg.jitter_factor);
        double contrast = rng.uniform(1.0 - cfg.jitter_factor, 1.0 + cfg.jitter_factor);
        double mean = 0.0;
        for (std::int64_t i = 0; i < image.numel(); ++i) {
            image[i] *= brightness;
            mean += image[i];
        }
        mean /= static_cast<double>(image.numel());
        for (std::int64_t i = 0; i < image.numel(); ++i)
            image[i] = std::clamp((image[i] - mean) * contrast + mean, 0.0, 1.0);
    }
    if (cfg.p_erase > 0.0 && rng.uniform() < cfg.p_erase) {
        double area = rng.uniform(cfg.erase_scale[0], cfg.erase_scale[1]) * H * W;
        double aspect = std::exp(rng.uniform(std::log(0.3), std::log(1.0 / 0.3)));
        int eh = std::min(H, std::max(1, static_cast<int>(std::lround(std::sqrt(area * aspect)))));
        int ew = std::min(W, std::max(1, static_cast<int>(std::lround(std::sqrt(area / aspect)))));
        int y0 = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(H - eh + 1)));
        int x0 = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(W - ew + 1)));
        for (int c = 0; c < is[0]; ++c)
            for (int y = y0; y < y0 + eh; ++y)
                for (int x = x0; x < x0 + ew; ++x) image.at3(c, y, x) = rng.uniform();
    }
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
    std::ofstream out(path);
    check(out.good(), "save_manifest: cannot open " + path);
    out << "# hyformer-manifest v1\n";
    out << "# id\timage_path\tmask_paths\tlabel\tsource\tsplit\n";
    for (const auto& r : manifest.records) {
        out << r.id << '\t' << r.image_path << '\t';
        for (std::size_t i = 0; i < r.mask_paths.size(); ++i) out << (i ? ";" : "") << r.mask_paths[i];
        out << '\t' << to_string(r.label) << '\t' << to_string(r.source) << '\t' << to_string(r.split) << '\n';
    }
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    check(in.good(), "load_manifest: cannot open " + path);
    DatasetManifest manifest;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string id, image_path, masks, label, source, split;
        if (!std::getline(ss, id, '\t') || !std::getline(ss, image_path, '\t') || !std::getline(ss, masks, '\t') ||
            !std::getline(ss, label, '\t') || !std::getline(ss, source, '\t') || !std::getline(ss, split, '\t'))
            throw std::runtime_error("load_manifest: malformed line: " + line);
        ImageRecord rec;
        rec.id = id;
        rec.image_path = image_path;
        std::istringstream ms(masks);
        std::string m;
        while (std::getline(ms, m, ';'))
            if (!m.empty()) rec.mask_paths.push_back(m);
        rec.label = label_from_string(label);
        rec.source = source_from_string(source);
        rec.split = split_from_string(split);
        manifest.records.push_back(std::move(rec));
    }
    return manifest;
}

namespace {
std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}
std::uint64_t fnv1a_file(std::uint64_t h, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    check(in.good(), "dataset_fingerprint: cannot read " + path);
    char buf[1 << 14];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) h = fnv1a(h, buf, static_cast<std::size_t>(in.gcount()));
    return h;
}
}  // namespace

std::uint64_t dataset_fingerprint(const DatasetManifest& manifest) {
    std::uint64_t h = 14695981039346656037ULL;
    for (const auto& r : manifest.records) {
        h = fnv1a(h, r.id.data(), r.id.size());
        std::string lab = to_string(r.label);
        h = fnv1a(h, lab.data(), lab.size());
        h = fnv1a_file(h, r.image_path);
        for (const auto& m : r.mask_paths) h = fnv1a_file(h, m);
    }
    return h;
}

Sample DiskDatasetView::load_impl(const ImageRecord& rec) const {
    Sample s;
    s.label = rec.label;
    s.image = io::load_image_rgb(rec.image_path);
    const int H = s.image.dim(1), W = s.image.dim(2);
    if (rec.source == Source::External) {
        check(!rec.mask_paths.empty(), "record " + rec.id + ": external record without mask");
        auto [mask, label] = convert_rgb_mask(io::load_image_rgb(rec.mask_paths[0]));
        s.mask = std::move(mask);
    } else if (rec.mask_paths.empty()) {
        s.mask = Tensor({H, W});
    } else {
        s.mask = io::load_mask(rec.mask_paths[0]);
        for (std::size_t i = 1; i < rec.mask_paths.size(); ++i) {
            Tensor m = io::load_mask(rec.mask_paths[i]);
            check(m.same_shape(s.mask), "record " + rec.id + ": mask size mismatch between annotation files");
            for (std::int64_t k = 0; k < m.numel(); ++k)
                s.mask[k] = (s.mask[k] == 1.0 || m[k] == 1.0) ? 1.0 : 0.0;  // pixel-wise OR
        }
    }
    check(s.mask.rank() == 2 && s.mask.dim(0) == H && s.mask.dim(1) == W,
          "record " + rec.id + ": mask shape differs from image");
    if (rec.label == Label::Normal)
        check(s.mask.sum() == 0.0, "record " + rec.id + ": normal-labelled image has non-empty mask");
    return s;
}

Sample MemoryDatasetView::load_impl(const ImageRecord& rec) const {
    auto it = samples_.find(rec.id);
    check(it != samples_.end(), "MemoryDatasetView: unknown id " + rec.id);
    return it->second;
}

}  // namespace hyformer::data
