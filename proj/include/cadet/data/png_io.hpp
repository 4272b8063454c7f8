#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace cadet {

/// 8-bit interleaved raster (HWC). channels is 1 (gray) or 3 (RGB).
struct Raster {
    int width = 0;
    int height = 0;
    int channels = 3;
    std::vector<std::uint8_t> pixels;

    Raster() = default;
    Raster(int w, int h, int c) : width(w), height(h), channels(c), pixels(static_cast<std::size_t>(w * h * c), 0) {}

    std::uint8_t& at(int x, int y, int c) { return pixels[static_cast<std::size_t>((y * width + x) * channels + c)]; }
    std::uint8_t at(int x, int y, int c) const
    {
        return pixels[static_cast<std::size_t>((y * width + x) * channels + c)];
    }
};

void write_png(const std::filesystem::path& path, const Raster& raster);

/// Reads any PNG and converts it to `channels` (1 or 3) 8-bit channels.
Raster read_png(const std::filesystem::path& path, int channels = 3);

}  // namespace cadet
