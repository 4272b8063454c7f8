#pragma once

#include "cadet/core/config.hpp"

#include <torch/torch.h>

#include <random>
#include <string>

namespace cadet {

enum class AugmentLevel { image, feature };

struct EraseParams {
    double p = 0.5;
    double area_min = 0.02;
    double area_max = 0.33;
    double aspect_min = 0.3;
    double aspect_max = 3.3;
};

/// Which augmentations run and where. Image-level ops act on the input images
/// before disentanglement; feature-level ops act on artifact features right
/// before the classifier. Content features are never augmented.
struct AugmentPolicy {
    AugmentLevel level = AugmentLevel::image;
    bool erase = false;
    bool hflip = false;
    bool mixup = false;
    EraseParams erase_params;
    double hflip_p = 0.5;
    double mixup_p = 1.0;
    double mixup_alpha = 0.2;

    bool any() const { return erase || hflip || mixup; }
    void validate() const;
};

void to_json(Json& j, const AugmentPolicy& p);
void from_json(const Json& j, AugmentPolicy& p);
std::string describe(const AugmentPolicy& p);

/// Zeroes one axis-aligned rectangle per sample (all channels) with
/// probability p. Accepts (C,H,W) or (B,C,H,W).
torch::Tensor random_erase(const torch::Tensor& x, const EraseParams& params, std::mt19937_64& rng);

/// Reverses the width axis of each sample with probability p.
torch::Tensor horizontal_flip(const torch::Tensor& x, double p, std::mt19937_64& rng);

struct Mixed {
    torch::Tensor x;
    torch::Tensor y;
    double lambda = 1.0;
};

/// lambda * (x0, y0) + (1 - lambda) * (x1, y1).
Mixed mix_with(const torch::Tensor& x0, const torch::Tensor& x1, const torch::Tensor& y0, const torch::Tensor& y1,
               double lambda);

/// mix_with with lambda ~ Beta(alpha, alpha). Throws ConfigError if alpha <= 0.
Mixed mixup(const torch::Tensor& x0, const torch::Tensor& x1, const torch::Tensor& y0, const torch::Tensor& y1,
            double alpha, std::mt19937_64& rng);

double sample_beta(double alpha, double beta, std::mt19937_64& rng);

struct Augmented {
    torch::Tensor x;
    torch::Tensor y;
};

/// Runs the enabled ops in the order erase, flip, mixup. Mixup partners are a
/// random permutation of the batch. In eval mode (`training` false) returns
/// the inputs untouched.
Augmented apply_policy(const AugmentPolicy& policy, const torch::Tensor& x, const torch::Tensor& y,
                       std::mt19937_64& rng, bool training);

}  // namespace cadet
