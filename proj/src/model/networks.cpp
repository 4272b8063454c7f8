#include "cadet/model/networks.hpp"

#include "cadet/error.hpp"

#include <cmath>

namespace cadet {

namespace nn = torch::nn;

Activation parse_activation(const std::string& name)
{
    if (name == "relu") return Activation::relu;
    if (name == "silu") return Activation::silu;
    if (name == "tanh") return Activation::tanh;
    if (name == "softplus") return Activation::softplus;
    throw ConfigError("unknown activation: " + name);
}

std::string to_string(Activation a)
{
    switch (a) {
    case Activation::relu: return "relu";
    case Activation::silu: return "silu";
    case Activation::tanh: return "tanh";
    case Activation::softplus: return "softplus";
    }
    return "relu";
}

torch::Tensor activate(const torch::Tensor& x, Activation a)
{
    switch (a) {
    case Activation::relu: return torch::relu(x);
    case Activation::silu: return torch::silu(x);
    case Activation::tanh: return torch::tanh(x);
    case Activation::softplus: return torch::softplus(x);
    }
    return x;
}

void ModelConfig::validate() const
{
    if (image_size <= 0 || image_size % kStride != 0) {
        throw ConfigError("model.image_size must be a positive multiple of 4");
    }
    if (base_width < 1 || feature_channels < 1) throw ConfigError("model widths must be >= 1");
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("model.dropout must be in [0,1)");
}

void to_json(Json& j, const ModelConfig& c)
{
    j = Json{{"image_size", c.image_size},
             {"base_width", c.base_width},
             {"feature_channels", c.feature_channels},
             {"activation", to_string(c.activation)},
             {"dropout", c.dropout},
             {"normalize_features", c.normalize_features}};
}

void from_json(const Json& j, ModelConfig& c)
{
    c.image_size = j.value("image_size", c.image_size);
    c.base_width = j.value("base_width", c.base_width);
    c.feature_channels = j.value("feature_channels", c.feature_channels);
    c.activation = parse_activation(j.value("activation", to_string(c.activation)));
    c.dropout = j.value("dropout", c.dropout);
    c.normalize_features = j.value("normalize_features", c.normalize_features);
    c.validate();
}

namespace {
nn::Conv2d conv3(std::int64_t in, std::int64_t out, std::int64_t stride = 1)
{
    return nn::Conv2d(nn::Conv2dOptions(in, out, 3).stride(stride).padding(1));
}

torch::Tensor upsample2(const torch::Tensor& x)
{
    return torch::nn::functional::interpolate(
        x, torch::nn::functional::InterpolateFuncOptions()
               .scale_factor(std::vector<double>{2.0, 2.0})
               .mode(torch::kNearest));
}

void check_images(const torch::Tensor& images, std::int64_t size)
{
    if (images.dim() != 4) throw ShapeError("encode: expected (B,3,H,W) images");
    if (images.size(1) != 3) {
        throw ShapeError("encode: expected 3 channels, got " + std::to_string(images.size(1)));
    }
    if (images.size(2) != size || images.size(3) != size) {
        throw ShapeError("encode: expected " + std::to_string(size) + "x" + std::to_string(size) + " images");
    }
}

void check_features(const torch::Tensor& f, const ModelConfig& cfg, const char* what)
{
    if (f.dim() != 4 || f.size(1) != cfg.feature_channels || f.size(2) != cfg.feature_size() ||
        f.size(3) != cfg.feature_size()) {
        std::ostringstream os;
        os << what << ": expected (B," << cfg.feature_channels << "," << cfg.feature_size() << ","
           << cfg.feature_size() << ") features, got " << f.sizes();
        throw ShapeError(os.str());
    }
}
}  // namespace

EncoderImpl::EncoderImpl(const ModelConfig& cfg) : act_(cfg.activation), normalize_(cfg.normalize_features)
{
    const auto w = cfg.base_width;
    const auto n = cfg.feature_channels;
    stem_ = register_module("stem", conv3(3, w));
    down1_ = register_module("down1", conv3(w, 2 * w, 2));
    res1_ = register_module("res1", conv3(2 * w, 2 * w));
    down2_ = register_module("down2", conv3(2 * w, n, 2));
    res2_ = register_module("res2", conv3(n, n));
}

torch::Tensor EncoderImpl::forward_mid(const torch::Tensor& images)
{
    auto x = activate(stem_(images), act_);
    x = activate(down1_(x), act_);
    return activate(x + res1_(x), act_);
}

torch::Tensor EncoderImpl::forward(const torch::Tensor& images)
{
    auto x = activate(down2_(forward_mid(images)), act_);
    // No activation on the output: content and artifact features are signed
    // and get summed before decoding.
    x = x + res2_(x);
    if (!normalize_) return x;
    // Fixed per-sample scale, so distances between features cannot be
    // shrunk by shrinking the features.
    return x * torch::rsqrt(x.square().mean({1, 2, 3}, true) + 1e-6);
}

DecoderImpl::DecoderImpl(const ModelConfig& cfg) : act_(cfg.activation)
{
    const auto w = cfg.base_width;
    in_ = register_module("entry", conv3(cfg.feature_channels, 2 * w));
    up1_ = register_module("up1", conv3(2 * w, w));
    up2_ = register_module("up2", conv3(w, w));
    out_ = register_module("out", conv3(w, 3));
}

torch::Tensor DecoderImpl::forward(const torch::Tensor& z)
{
    auto y = activate(in_(z), act_);
    y = activate(up1_(upsample2(y)), act_);
    y = activate(up2_(upsample2(y)), act_);
    return torch::tanh(out_(y));
}

ClassifierImpl::ClassifierImpl(const ModelConfig& cfg) : act_(cfg.activation), dropout_(cfg.dropout)
{
    const auto n = cfg.feature_channels;
    block_ = register_module("block", conv3(n, n));
    down_ = register_module("down", conv3(n, 2 * n, 2));
    head_ = register_module("head", nn::Linear(2 * n, 2));
}

torch::Tensor ClassifierImpl::forward(const torch::Tensor& features)
{
    auto y = activate(features + block_(features), act_);
    y = activate(down_(y), act_);
    y = y.mean({2, 3});
    if (is_training() && dropout_ > 0.0 && dropout_gen_) {
        auto keep = torch::empty_like(y).bernoulli_(1.0 - dropout_, *dropout_gen_);
        y = y * keep / (1.0 - dropout_);
    }
    return head_(y);
}

ModelBundleImpl::ModelBundleImpl(const ModelConfig& cfg, const SeedState& seed) : cfg_(cfg)
{
    cfg_.validate();
    content_encoder = register_module("content_encoder", Encoder(cfg_));
    artifact_encoder = register_module("artifact_encoder", Encoder(cfg_));
    decoder = register_module("decoder", Decoder(cfg_));
    classifier = register_module("classifier", Classifier(cfg_));
    auto gen = seed.torch_generator(Stream::init);
    he_init(*this, gen);
}

torch::Tensor ModelBundleImpl::encode(const torch::Tensor& images, EncoderKind which)
{
    check_images(images, cfg_.image_size);
    return which == EncoderKind::content ? content_encoder(images) : artifact_encoder(images);
}

torch::Tensor ModelBundleImpl::decode(const torch::Tensor& z)
{
    check_features(z, cfg_, "decode");
    return decoder(z);
}

torch::Tensor ModelBundleImpl::classify(const torch::Tensor& artifact_features)
{
    check_features(artifact_features, cfg_, "classify");
    return classifier(artifact_features);
}

void he_init(torch::nn::Module& module, at::Generator& gen)
{
    torch::NoGradGuard no_grad;
    for (auto& item : module.named_parameters(/*recurse=*/true)) {
        auto& p = item.value();
        const auto& name = item.key();
        if (name.size() >= 4 && name.compare(name.size() - 4, 4, "bias") == 0) {
            p.zero_();
        } else {
            const double fan_in = static_cast<double>(p.numel() / p.size(0));
            p.normal_(0.0, std::sqrt(2.0 / fan_in), gen);
        }
    }
}

std::uint64_t parameter_checksum(const torch::nn::Module& module)
{
    std::uint64_t h = 1469598103934665603ULL;
    auto feed = [&h](const torch::Tensor& t) {
        const auto c = t.detach().contiguous().cpu();
        const auto* bytes = static_cast<const unsigned char*>(c.data_ptr());
        const auto n = c.numel() * c.element_size();
        for (std::int64_t i = 0; i < n; ++i) {
            h ^= bytes[i];
            h *= 1099511628211ULL;
        }
    };
    for (const auto& p : module.parameters(true)) feed(p);
    for (const auto& b : module.buffers(true)) feed(b);
    return h;
}

std::int64_t parameter_count(const torch::nn::Module& module)
{
    std::int64_t n = 0;
    for (const auto& p : module.parameters(true)) n += p.numel();
    return n;
}

}  // namespace cadet
