#pragma once

#include "cadet/augment/augment.hpp"
#include "cadet/core/config.hpp"
#include "cadet/core/seed.hpp"
#include "cadet/data/dataset.hpp"
#include "cadet/losses/embedders.hpp"
#include "cadet/losses/losses.hpp"
#include "cadet/model/networks.hpp"

#include <torch/torch.h>

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace cadet {

/// Ablation variants. `baseline` trains the plain detector (artifact encoder +
/// classifier, cross entropy only); `basic` adds reconstruction; `c2c` and
/// `grcc` add one constraint each; `full` uses every loss.
enum class Variant { baseline, basic, c2c, grcc, full };

Variant parse_variant(const std::string& s);
std::string to_string(Variant v);

/// Zeroes the weights a variant leaves out.
LossWeights weights_for(Variant v, const LossWeights& base);

struct TrainConfig {
    std::int64_t batch_size = 32;  // images; half as many pairs
    std::int64_t max_iters = 3000;
    double lr = 1e-3;
    std::int64_t lr_halve_every = 500;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    LossWeights weights;  // before the variant mask
    Variant variant = Variant::full;
    AugmentPolicy augment;
    bool same_identity_pairs = false;
    std::uint64_t seed = 0;
    std::int64_t checkpoint_every = 0;  // 0 = only the final checkpoint
    std::int64_t log_every = 1;
    int threads = 1;

    /// Paper-scale protocol: batch 128, 30000 iterations, halve every 5000.
    static TrainConfig paper_scale();

    LossWeights effective_weights() const { return weights_for(variant, weights); }
    void validate() const;
};

void to_json(Json& j, const TrainConfig& c);
void from_json(const Json& j, TrainConfig& c);

/// base * 0.5^floor(iter / halve_every)
double lr_at(std::int64_t iter, const TrainConfig& cfg);

struct ObjectiveOptions {
    LossWeights weights;
    bool all_terms = false;                     // compute every term regardless of weight
    const AugmentPolicy* feature_augment = nullptr;  // applied to artifact features only
    std::mt19937_64* rng = nullptr;
    bool training = true;
};

/// Forward pass of the whole framework on one batch: disentangle, reconstruct,
/// and every enabled loss. Terms with zero weight are skipped unless
/// `all_terms` is set.
LossTerms compute_loss_terms(const PairBatch& batch, ModelBundle& model, EmbedderPair* embedders,
                             const ObjectiveOptions& opts);

std::unique_ptr<torch::optim::Adam> make_optimizer(ModelBundle& model, const TrainConfig& cfg);

/// One optimization step at iteration `step`: image-level augmentation,
/// forward, backward, Adam update. Throws NumericError (with the component
/// values) if the loss is not finite.
LossBreakdown train_step(const PairBatch& batch, ModelBundle& model, torch::optim::Adam& opt,
                         const TrainConfig& cfg, EmbedderPair* embedders, std::int64_t step);

struct LogRow {
    std::int64_t iter = 0;
    LossBreakdown loss;
    double lr = 0.0;
};

std::string format_log_header();
std::string format_log_row(const LogRow& row);

/// Owns the training state for one run: model, optimizer, sampler, log.
class Trainer {
public:
    Trainer(TrainConfig cfg, ModelConfig model_cfg, const ImageStore& store, std::optional<EmbedderPair> embedders);

    LossBreakdown step();
    void run_until(std::int64_t iteration);

    std::int64_t iteration() const { return iteration_; }
    ModelBundle& model() { return model_; }
    const TrainConfig& config() const { return cfg_; }
    const std::vector<LogRow>& history() const { return history_; }

    /// Config snapshot stored in checkpoints.
    Json snapshot() const;
    void save(const std::filesystem::path& path) const;
    /// Restores model, optimizer and iteration counter from a checkpoint.
    void resume(const std::filesystem::path& path);

private:
    TrainConfig cfg_;
    ModelConfig model_cfg_;
    const ImageStore& store_;
    std::optional<EmbedderPair> embedders_;
    ModelBundle model_{nullptr};
    std::unique_ptr<torch::optim::Adam> opt_;
    PairSampler sampler_;
    std::int64_t iteration_ = 0;
    std::vector<LogRow> history_;
};

struct TrainResult {
    std::filesystem::path checkpoint;
    std::filesystem::path metrics_log;
    std::vector<LogRow> history;
};

/// Full run: trains to max_iters, writes metrics.csv, periodic checkpoints
/// and final.ckpt under `out_dir`. Throws UserError if the variant needs
/// embedders and none are given. With `resume_from`, training continues from
/// that checkpoint and log rows are appended.
TrainResult run_training(const TrainConfig& cfg, const ModelConfig& model_cfg, const ImageStore& store,
                         std::optional<EmbedderPair> embedders, const std::filesystem::path& out_dir,
                         const std::optional<std::filesystem::path>& resume_from = std::nullopt);

struct EmbedderTrainConfig {
    EmbedderConfig net;
    std::int64_t epochs = 6;
    std::int64_t batch_size = 64;
    double lr = 2e-3;
    std::uint64_t seed = 0;
};

void to_json(Json& j, const EmbedderTrainConfig& c);
void from_json(const Json& j, EmbedderTrainConfig& c);

struct PreparedEmbedders {
    EmbedderPair embedders{nullptr};
    double identity_accuracy = 0.0;    // on the held-out split
    double background_accuracy = 0.0;
};

/// Trains the identity and perceptual stand-ins on the train split content
/// labels, reports held-out accuracy on the test split and freezes both.
PreparedEmbedders prepare_embedders(const ImageStore& store, const EmbedderTrainConfig& cfg);

void save_embedders(const std::filesystem::path& path, EmbedderPair& embedders, const Json& config);
EmbedderPair load_embedders(const std::filesystem::path& path);

}  // namespace cadet
