#pragma once

#include <vector>

#include "hyformer/data.hpp"
#include "hyformer/metrics.hpp"
#include "hyformer/model.hpp"

namespace hyformer::ensemble {

using nn::Tensor;

enum class Aggregation { MeanProbs, MeanLogits };

struct EnsembleSpec {
    Aggregation aggregation = Aggregation::MeanProbs;
    void validate(std::size_t member_count) const;
};

struct EnsembleOutput {
    Tensor seg_probs;    // {N,1,H,W} member-averaged
    Tensor class_probs;  // {N,C}
    std::vector<Tensor> member_seg;    // retained for variance reporting
    std::vector<Tensor> member_class;
    Tensor seg_variance;  // {N,1,H,W} per-pixel variance across members
};

// Argmax with lowest-index tie-break.
int argmax_class(const Tensor& probs_row_major, int row, int num_classes);

EnsembleOutput ensemble_predict(const std::vector<const HyFormerNet*>& members, const Tensor& images,
                                const EnsembleSpec& spec = {});

// Per-image evaluation of a single model or an ensemble over explicit ids.
metrics::MetricsReport evaluate(const std::vector<const HyFormerNet*>& members,
                                const data::DatasetManifest& manifest, const data::DatasetView& view,
                                const std::vector<std::string>& ids, const data::PreprocessConfig& pcfg,
                                int batch_size, const EnsembleSpec& spec = {});

}  // namespace hyformer::ensemble
