#pragma once

#include "cadet/core/config.hpp"
#include "cadet/core/seed.hpp"
#include "cadet/model/networks.hpp"

#include <torch/torch.h>

#include <cstdint>

namespace cadet {

struct EmbedderConfig {
    std::int64_t width = 16;
    std::int64_t embedding_dim = 32;
    std::int64_t num_identities = 8;
    std::int64_t num_backgrounds = 8;
    Activation activation = Activation::relu;
};

void to_json(Json& j, const EmbedderConfig& c);
void from_json(const Json& j, EmbedderConfig& c);

/// Stand-in for a face-recognition network: a small CNN trained to classify
/// identity; its L2-normalized penultimate activations are the embedding.
class IdentityEmbedderImpl : public torch::nn::Module {
public:
    explicit IdentityEmbedderImpl(const EmbedderConfig& cfg);

    /// Unit-norm embedding, (B, embedding_dim).
    torch::Tensor embed(const torch::Tensor& images);
    /// Identity logits used during pre-training.
    torch::Tensor logits(const torch::Tensor& images);

private:
    torch::Tensor penultimate(const torch::Tensor& images);

    Activation act_;
    torch::nn::Conv2d c1_{nullptr}, c2_{nullptr}, c3_{nullptr};
    torch::nn::Linear proj_{nullptr}, head_{nullptr};
};
TORCH_MODULE(IdentityEmbedder);

/// Stand-in for a perceptual feature network: a small CNN trained on
/// background classification; its last conv block is the perceptual feature.
class PerceptualEmbedderImpl : public torch::nn::Module {
public:
    explicit PerceptualEmbedderImpl(const EmbedderConfig& cfg);

    /// (B, 2*width, H/4, W/4) feature map.
    torch::Tensor features(const torch::Tensor& images);
    torch::Tensor logits(const torch::Tensor& images);

private:
    Activation act_;
    torch::nn::Conv2d c1_{nullptr}, c2_{nullptr}, c3_{nullptr};
    torch::nn::Linear head_{nullptr};
};
TORCH_MODULE(PerceptualEmbedder);

/// Both content embedders. After freeze() their parameters take no gradient
/// and they stay in eval mode; gradients still flow through them to inputs.
class EmbedderPairImpl : public torch::nn::Module {
public:
    EmbedderPairImpl(const EmbedderConfig& cfg, const SeedState& seed);

    const EmbedderConfig& config() const { return cfg_; }

    void freeze();
    bool frozen() const { return frozen_; }

    IdentityEmbedder identity{nullptr};
    PerceptualEmbedder perceptual{nullptr};

private:
    EmbedderConfig cfg_;
    bool frozen_ = false;
};
TORCH_MODULE(EmbedderPair);

}  // namespace cadet
