#include "cadet/data/png_io.hpp"

#include "cadet/error.hpp"

#include <png.h>

#include <cstring>

namespace cadet {

void write_png(const std::filesystem::path& path, const Raster& raster)
{
    if (raster.channels != 1 && raster.channels != 3) throw UserError("write_png: channels must be 1 or 3");
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(raster.width);
    image.height = static_cast<png_uint_32>(raster.height);
    image.format = raster.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&image, path.c_str(), 0, raster.pixels.data(), 0, nullptr)) {
        throw UserError("cannot write PNG " + path.string() + ": " + image.message);
    }
}

Raster read_png(const std::filesystem::path& path, int channels)
{
    if (channels != 1 && channels != 3) throw UserError("read_png: channels must be 1 or 3");
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str())) {
        throw UserError("cannot read PNG " + path.string() + ": " + image.message);
    }
    image.format = channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    Raster r(static_cast<int>(image.width), static_cast<int>(image.height), channels);
    if (!png_image_finish_read(&image, nullptr, r.pixels.data(), 0, nullptr)) {
        png_image_free(&image);
        throw UserError("cannot decode PNG " + path.string() + ": " + image.message);
    }
    return r;
}

}  // namespace cadet
