#pragma once

#include "cadet/augment/augment.hpp"
#include "cadet/data/dataset.hpp"
#include "cadet/eval/metrics.hpp"
#include "cadet/train/trainer.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cadet {

/// Trains to cfg.max_iters without touching the filesystem.
ModelBundle train_model(const TrainConfig& cfg, const ModelConfig& model_cfg, const ImageStore& store,
                        std::optional<EmbedderPair> embedders);

/// Policy with exactly one op ("erase", "hflip" or "mixup") at `level`.
AugmentPolicy single_op_policy(const std::string& op, AugmentLevel level);

struct AugmentCell {
    std::string op;        // "none" for the reference run
    std::string level;     // "image", "feature" or "-"
    EvalReport report;
    double delta_auc = 0;  // relative to the reference run
};

/// The 3 ops x 2 levels grid plus an unaugmented reference, all trained from
/// `base` and evaluated on `eval_rows`. The reference is the first entry.
std::vector<AugmentCell> augment_study(const ImageStore& store, const std::optional<EmbedderPair>& embedders,
                                       const TrainConfig& base, const ModelConfig& model_cfg,
                                       const std::vector<std::int64_t>& eval_rows);

std::string format_augment_table(const std::vector<AugmentCell>& cells);

struct CamRecord {
    std::int64_t row = -1;
    double inside = 0.0;
    double outside = 0.0;
    double ratio() const { return inside / std::max(outside, 1e-12); }
};

/// Grad-CAM (fake logit) region statistics against the generator masks for
/// every row whose mask is non-empty.
std::vector<CamRecord> cam_study(ModelBundle& model, const ImageStore& store, const std::vector<std::int64_t>& rows,
                                 std::int64_t batch_size = 128);

}  // namespace cadet
