#pragma once

#include "errors.hpp"
#include "io_util.hpp"
#include "rasterizer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

namespace bodyfit {

/// Binary 8-bit PGM (P5); coverage 0..1 maps to 0..255.
inline std::string format_pgm(const SilhouetteImage& img)
{
    std::string out = "P5\n" + std::to_string(img.resolution) + " " + std::to_string(img.resolution) + "\n255\n";
    out.reserve(out.size() + img.size());
    for (double v : img.pixels) out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
    return out;
}

inline void write_pgm(const SilhouetteImage& img, const std::filesystem::path& path) { write_text_file(path, format_pgm(img)); }

/// Reads a square grayscale PGM (P2 ASCII or P5 binary, maxval up to 65535) as coverage.
inline SilhouetteImage read_pgm(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    auto fail = [&](const std::string& what) -> IoError { return IoError(path.string() + ": " + what); };
    auto next_token = [&]() {
        while (pos < data.size()) {
            if (data[pos] == '#') {
                while (pos < data.size() && data[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(data[pos]))) {
                ++pos;
            } else {
                break;
            }
        }
        const std::size_t start = pos;
        while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
        if (start == pos) throw fail("truncated PGM header");
        return data.substr(start, pos - start);
    };
    const std::string magic = next_token();
    if (magic != "P2" && magic != "P5") throw fail("not a PGM file (magic '" + magic + "')");
    int width = 0, height = 0, maxval = 0;
    try {
        width = std::stoi(next_token());
        height = std::stoi(next_token());
        maxval = std::stoi(next_token());
    } catch (const std::logic_error&) {
        throw fail("malformed PGM header");
    }
    if (width <= 0 || width != height) throw fail("silhouette images must be square");
    if (maxval <= 0 || maxval > 65535) throw fail("invalid PGM maxval");

    SilhouetteImage img;
    img.resolution = width;
    img.pixels.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
    if (magic == "P2") {
        for (auto& px : img.pixels) {
            int v = 0;
            try {
                v = std::stoi(next_token());
            } catch (const std::logic_error&) {
                throw fail("malformed PGM pixel");
            }
            px = static_cast<double>(v) / maxval;
        }
    } else {
        ++pos;  // single whitespace after maxval
        const std::size_t bytes = maxval < 256 ? 1 : 2;
        if (data.size() < pos + img.pixels.size() * bytes) throw fail("truncated PGM pixel data");
        for (std::size_t i = 0; i < img.pixels.size(); ++i) {
            unsigned v = static_cast<unsigned char>(data[pos + i * bytes]);
            if (bytes == 2) v = (v << 8) | static_cast<unsigned char>(data[pos + i * bytes + 1]);
            img.pixels[i] = static_cast<double>(v) / maxval;
        }
    }
    return img;
}

} // namespace bodyfit
