#pragma once

#include <ATen/core/Generator.h>

#include <cstdint>
#include <random>
#include <string_view>

namespace cadet {

/// Named random streams. Every consumer of randomness draws from exactly one of
/// these; there is no global RNG.
enum class Stream : std::uint64_t {
    data = 1,
    init = 2,
    augment = 3,
    pairing = 4,
    dropout = 5,
    probe = 6,
    embedder = 7,
    viz = 8,
};

std::string_view stream_name(Stream s);

/// splitmix64 finalizer; used to derive independent sub-seeds.
std::uint64_t mix64(std::uint64_t x);

/// Master seed plus the derivation rule for per-stream, per-index sub-seeds.
/// Sub-seeds are pure functions of (master, stream, index), so any step of a
/// run can re-create its draws without carrying generator state around.
class SeedState {
public:
    explicit SeedState(std::uint64_t master = 0) : master_(master) {}

    std::uint64_t master() const noexcept { return master_; }

    std::uint64_t derive(Stream s, std::uint64_t index = 0) const;

    std::mt19937_64 engine(Stream s, std::uint64_t index = 0) const
    {
        return std::mt19937_64(derive(s, index));
    }

    at::Generator torch_generator(Stream s, std::uint64_t index = 0) const;

    friend bool operator==(const SeedState&, const SeedState&) = default;

private:
    std::uint64_t master_;
};

}  // namespace cadet
