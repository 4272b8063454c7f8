#pragma once

#include "cadet/core/config.hpp"

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>

namespace cadet {

inline constexpr std::int64_t kCheckpointVersion = 1;

/// Everything in a checkpoint except the tensors themselves.
struct CheckpointMeta {
    std::int64_t version = kCheckpointVersion;
    std::string kind;  // "model" or "embedders"
    Json config;       // effective config snapshot
    std::uint64_t seed = 0;
    std::int64_t iteration = 0;
};

/// Writes a single archive with the metadata, every parameter/buffer of
/// `module` under its canonical name, and (optionally) optimizer state.
void save_checkpoint(const std::filesystem::path& path, const CheckpointMeta& meta,
                     const torch::nn::Module& module, const torch::optim::Optimizer* optimizer = nullptr);

/// Reads metadata only. Throws UserError if the file is missing or not a
/// checkpoint of a supported version.
CheckpointMeta read_checkpoint_meta(const std::filesystem::path& path);

/// Restores tensors into an already constructed `module` (and optimizer).
CheckpointMeta load_checkpoint(const std::filesystem::path& path, torch::nn::Module& module,
                               torch::optim::Optimizer* optimizer = nullptr);

}  // namespace cadet
