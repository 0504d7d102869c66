#pragma once

// Requires linking libpng (PNG::PNG).

#include "errors.hpp"
#include "rasterizer.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <vector>

namespace bodyfit {

/// Reads a square PNG as a silhouette; colour images are converted to luminance and
/// values scaled to [0, 1].
inline SilhouetteImage read_png(const std::filesystem::path& path)
{
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
        throw IoError(path.string() + ": " + image.message);
    }
    image.format = PNG_FORMAT_GRAY;
    std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        const std::string message = image.message;
        png_image_free(&image);
        throw IoError(path.string() + ": " + message);
    }
    if (image.width != image.height) {
        throw IoError(path.string() + ": silhouette images must be square, got " + std::to_string(image.width) + "x" +
                      std::to_string(image.height));
    }
    SilhouetteImage img;
    img.resolution = static_cast<int>(image.width);
    img.pixels.resize(buffer.size());
    for (std::size_t i = 0; i < buffer.size(); ++i) img.pixels[i] = buffer[i] / 255.0;
    return img;
}

/// 8-bit grayscale PNG writer, used for exporting silhouettes.
inline void write_png(const SilhouetteImage& img, const std::filesystem::path& path)
{
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.resolution);
    image.height = static_cast<png_uint_32>(img.resolution);
    image.format = PNG_FORMAT_GRAY;
    std::vector<png_byte> buffer(img.pixels.size());
    for (std::size_t i = 0; i < buffer.size(); ++i) {
        buffer[i] = static_cast<png_byte>(std::lround(std::clamp(img.pixels[i], 0.0, 1.0) * 255.0));
    }
    if (!png_image_write_to_file(&image, path.string().c_str(), 0, buffer.data(), 0, nullptr)) {
        throw IoError(path.string() + ": " + image.message);
    }
}

} // namespace bodyfit
