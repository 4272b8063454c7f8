#pragma once

#include "cadet/core/seed.hpp"
#include "cadet/data/dataset.hpp"
#include "cadet/data/synthetic.hpp"
#include "cadet/disentangle/pair.hpp"
#include "cadet/losses/embedders.hpp"
#include "cadet/model/networks.hpp"

#include <torch/torch.h>

#include <filesystem>
#include <string>

namespace cadet::testing {

inline ModelConfig tiny_model(std::int64_t image_size = 16, Activation act = Activation::relu)
{
    ModelConfig c;
    c.image_size = image_size;
    c.base_width = 4;
    c.feature_channels = 8;
    c.activation = act;
    return c;
}

inline EmbedderConfig tiny_embedders(Activation act = Activation::relu)
{
    EmbedderConfig c;
    c.width = 4;
    c.embedding_dim = 8;
    c.num_identities = 4;
    c.num_backgrounds = 4;
    c.activation = act;
    return c;
}

inline torch::Tensor random_images(std::int64_t n, std::int64_t size, std::uint64_t seed,
                                   torch::ScalarType dtype = torch::kFloat32)
{
    auto gen = SeedState(seed).torch_generator(Stream::data);
    return torch::tanh(torch::randn({n, 3, size, size}, gen, torch::kFloat64)).to(dtype);
}

/// `pairs` random pairs, real first.
inline PairBatch random_batch(std::int64_t pairs, std::int64_t size, std::uint64_t seed,
                              torch::ScalarType dtype = torch::kFloat32)
{
    PairBatch b;
    b.img0 = random_images(pairs, size, seed, dtype);
    b.img1 = random_images(pairs, size, seed + 7919, dtype);
    b.y0 = torch::zeros({pairs}, dtype);
    b.y1 = torch::ones({pairs}, dtype);
    b.identity0 = torch::arange(pairs) % 4;
    b.identity1 = (torch::arange(pairs) + 1) % 4;
    b.background0 = torch::arange(pairs) % 4;
    b.background1 = (torch::arange(pairs) + 2) % 4;
    return b;
}

/// Small unbiased dataset rendered in memory.
inline DataSpec small_spec(std::int64_t train = 64, std::int64_t test = 32, std::uint64_t seed = 0)
{
    DataSpec s;
    s.train_count = train;
    s.test_count = test;
    s.num_identities = 4;
    s.num_backgrounds = 4;
    s.seed = seed;
    return s;
}

inline std::filesystem::path temp_dir(const std::string& name)
{
    auto p = std::filesystem::temp_directory_path() / ("cadet_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace cadet::testing
