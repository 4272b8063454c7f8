#include "cadet/core/seed.hpp"

#include <ATen/CPUGeneratorImpl.h>

namespace cadet {

std::string_view stream_name(Stream s)
{
    switch (s) {
    case Stream::data: return "data";
    case Stream::init: return "init";
    case Stream::augment: return "augment";
    case Stream::pairing: return "pairing";
    case Stream::dropout: return "dropout";
    case Stream::probe: return "probe";
    case Stream::embedder: return "embedder";
    case Stream::viz: return "viz";
    }
    return "unknown";
}

std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t SeedState::derive(Stream s, std::uint64_t index) const
{
    const auto tag = static_cast<std::uint64_t>(s) * 0xD1B54A32D192ED03ULL;
    return mix64(mix64(mix64(master_) ^ tag) + index);
}

at::Generator SeedState::torch_generator(Stream s, std::uint64_t index) const
{
    return at::make_generator<at::CPUGeneratorImpl>(derive(s, index));
}

}  // namespace cadet
