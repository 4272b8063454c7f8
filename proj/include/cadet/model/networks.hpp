#pragma once

#include "cadet/core/config.hpp"
#include "cadet/core/seed.hpp"

#include <torch/torch.h>

#include <cstdint>
#include <optional>
#include <string>

namespace cadet {

enum class Activation { relu, silu, tanh, softplus };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);
torch::Tensor activate(const torch::Tensor& x, Activation a);

/// Backbone geometry. Encoders downsample twice (stride 4), so a 32x32 image
/// maps to a (feature_channels, 8, 8) feature map.
struct ModelConfig {
    std::int64_t image_size = 32;
    std::int64_t base_width = 16;
    std::int64_t feature_channels = 64;
    Activation activation = Activation::relu;
    double dropout = 0.0;
    bool normalize_features = true;  // per-sample RMS normalization of encoder outputs

    static constexpr std::int64_t kStride = 4;
    std::int64_t feature_size() const { return image_size / kStride; }

    void validate() const;
};

void to_json(Json& j, const ModelConfig& c);
void from_json(const Json& j, ModelConfig& c);

/// Front part of the backbone: image (B,3,H,W) -> feature map (B,n,H/4,W/4).
/// Used for both the content and the artifact encoder.
class EncoderImpl : public torch::nn::Module {
public:
    explicit EncoderImpl(const ModelConfig& cfg);

    torch::Tensor forward(const torch::Tensor& images);
    /// Activations after the first downsampling stage, for visualization.
    torch::Tensor forward_mid(const torch::Tensor& images);

private:
    Activation act_;
    bool normalize_;
    torch::nn::Conv2d stem_{nullptr}, down1_{nullptr}, res1_{nullptr}, down2_{nullptr}, res2_{nullptr};
};
TORCH_MODULE(Encoder);

/// Mirror of the encoder: nearest-neighbour upsampling + conv, tanh head.
class DecoderImpl : public torch::nn::Module {
public:
    explicit DecoderImpl(const ModelConfig& cfg);
    torch::Tensor forward(const torch::Tensor& z);

private:
    Activation act_;
    torch::nn::Conv2d in_{nullptr}, up1_{nullptr}, up2_{nullptr}, out_{nullptr};
};
TORCH_MODULE(Decoder);

/// Back part of the backbone: feature map -> 2-class logits (index 1 = fake).
class ClassifierImpl : public torch::nn::Module {
public:
    explicit ClassifierImpl(const ModelConfig& cfg);
    torch::Tensor forward(const torch::Tensor& features);

    /// Dropout masks are drawn from this generator while training. Without
    /// one, dropout is skipped.
    void set_dropout_generator(std::optional<at::Generator> gen) { dropout_gen_ = std::move(gen); }

private:
    Activation act_;
    double dropout_;
    std::optional<at::Generator> dropout_gen_;
    torch::nn::Conv2d block_{nullptr}, down_{nullptr};
    torch::nn::Linear head_{nullptr};
};
TORCH_MODULE(Classifier);

enum class EncoderKind { content, artifact };

/// Content encoder, artifact encoder, decoder and classifier. The two encoders
/// share an architecture but never parameters.
class ModelBundleImpl : public torch::nn::Module {
public:
    ModelBundleImpl(const ModelConfig& cfg, const SeedState& seed);

    const ModelConfig& config() const { return cfg_; }

    torch::Tensor encode(const torch::Tensor& images, EncoderKind which);
    torch::Tensor decode(const torch::Tensor& z);
    torch::Tensor classify(const torch::Tensor& artifact_features);

    /// The unsplit detector: classifier over the artifact encoder.
    torch::Tensor detect(const torch::Tensor& images) { return classify(encode(images, EncoderKind::artifact)); }

    Encoder content_encoder{nullptr};
    Encoder artifact_encoder{nullptr};
    Decoder decoder{nullptr};
    Classifier classifier{nullptr};

private:
    ModelConfig cfg_;
};
TORCH_MODULE(ModelBundle);

/// He (fan-in) normal initialization of every conv/linear weight, zero biases,
/// drawn in parameter-registration order from `gen`.
void he_init(torch::nn::Module& module, at::Generator& gen);

/// FNV-1a over the raw bytes of every parameter and buffer, in registration order.
std::uint64_t parameter_checksum(const torch::nn::Module& module);

std::int64_t parameter_count(const torch::nn::Module& module);

}  // namespace cadet
