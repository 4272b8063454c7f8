#include "cadet/losses/embedders.hpp"

#include "cadet/error.hpp"

namespace cadet {

namespace nn = torch::nn;

void to_json(Json& j, const EmbedderConfig& c)
{
    j = Json{{"width", c.width},
             {"embedding_dim", c.embedding_dim},
             {"num_identities", c.num_identities},
             {"num_backgrounds", c.num_backgrounds},
             {"activation", to_string(c.activation)}};
}

void from_json(const Json& j, EmbedderConfig& c)
{
    c.width = j.value("width", c.width);
    c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
    c.num_identities = j.value("num_identities", c.num_identities);
    c.num_backgrounds = j.value("num_backgrounds", c.num_backgrounds);
    c.activation = parse_activation(j.value("activation", to_string(c.activation)));
    if (c.width < 1 || c.embedding_dim < 1 || c.num_identities < 2 || c.num_backgrounds < 2) {
        throw ConfigError("embedders: widths must be >= 1 and vocabularies >= 2");
    }
}

namespace {
nn::Conv2d conv3(std::int64_t in, std::int64_t out, std::int64_t stride = 1)
{
    return nn::Conv2d(nn::Conv2dOptions(in, out, 3).stride(stride).padding(1));
}
}  // namespace

IdentityEmbedderImpl::IdentityEmbedderImpl(const EmbedderConfig& cfg) : act_(cfg.activation)
{
    const auto w = cfg.width;
    c1_ = register_module("c1", conv3(3, w));
    c2_ = register_module("c2", conv3(w, 2 * w, 2));
    c3_ = register_module("c3", conv3(2 * w, 2 * w, 2));
    proj_ = register_module("proj", nn::Linear(2 * w, cfg.embedding_dim));
    head_ = register_module("head", nn::Linear(cfg.embedding_dim, cfg.num_identities));
}

torch::Tensor IdentityEmbedderImpl::penultimate(const torch::Tensor& images)
{
    auto x = activate(c1_(images), act_);
    x = activate(c2_(x), act_);
    x = activate(c3_(x), act_);
    return proj_(x.mean({2, 3}));
}

torch::Tensor IdentityEmbedderImpl::embed(const torch::Tensor& images)
{
    return torch::nn::functional::normalize(penultimate(images),
                                            torch::nn::functional::NormalizeFuncOptions().dim(1).eps(1e-12));
}

torch::Tensor IdentityEmbedderImpl::logits(const torch::Tensor& images)
{
    return head_(penultimate(images));
}

PerceptualEmbedderImpl::PerceptualEmbedderImpl(const EmbedderConfig& cfg) : act_(cfg.activation)
{
    const auto w = cfg.width;
    c1_ = register_module("c1", conv3(3, w));
    c2_ = register_module("c2", conv3(w, 2 * w, 2));
    c3_ = register_module("c3", conv3(2 * w, 2 * w, 2));
    head_ = register_module("head", nn::Linear(2 * w, cfg.num_backgrounds));
}

torch::Tensor PerceptualEmbedderImpl::features(const torch::Tensor& images)
{
    auto x = activate(c1_(images), act_);
    x = activate(c2_(x), act_);
    return activate(c3_(x), act_);
}

torch::Tensor PerceptualEmbedderImpl::logits(const torch::Tensor& images)
{
    return head_(features(images).mean({2, 3}));
}

EmbedderPairImpl::EmbedderPairImpl(const EmbedderConfig& cfg, const SeedState& seed) : cfg_(cfg)
{
    identity = register_module("identity", IdentityEmbedder(cfg_));
    perceptual = register_module("perceptual", PerceptualEmbedder(cfg_));
    auto gen = seed.torch_generator(Stream::embedder);
    he_init(*this, gen);
}

void EmbedderPairImpl::freeze()
{
    for (auto& p : parameters()) p.set_requires_grad(false);
    eval();
    frozen_ = true;
}

}  // namespace cadet
