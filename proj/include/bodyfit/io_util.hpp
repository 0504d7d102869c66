#pragma once

#include "errors.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <string>

namespace bodyfit {

/// Appends the shortest decimal representation that round-trips to x.
inline void append_number(std::string& out, double x)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    out.append(buf, ptr);
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

} // namespace bodyfit
