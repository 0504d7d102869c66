#pragma once

// Wavefront OBJ subset: `v x y z` and `f i j k [l ...]` records, 1-based (or negative,
// relative) indices, `#` comments. Texture/normal references (`f 1/2/3`) are accepted and
// ignored. Polygons are fan-triangulated on load.

#include "errors.hpp"
#include "io_util.hpp"
#include "mesh.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace bodyfit {

namespace detail {

inline std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split_ws(std::string_view s)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

inline bool parse_double(std::string_view tok, double& out)
{
    // from_chars does not accept a leading '+'
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return ec == std::errc{} && ptr == tok.data() + tok.size();
}

inline bool parse_long(std::string_view tok, long& out)
{
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return ec == std::errc{} && ptr == tok.data() + tok.size();
}

struct ObjRecords {
    std::vector<Eigen::Vector3d> vertices;
    std::vector<Eigen::Vector3i> triangles;
};

inline ObjRecords parse_obj(std::istream& in, const std::string& name)
{
    ObjRecords rec;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sv = line;
        if (const auto hash = sv.find('#'); hash != std::string_view::npos) sv = sv.substr(0, hash);
        sv = trim(sv);
        if (sv.empty()) continue;
        const auto tokens = split_ws(sv);
        if (tokens[0] == "v") {
            if (tokens.size() < 4) throw ParseError(name, lineno, "vertex record needs 3 coordinates");
            Eigen::Vector3d p;
            for (int k = 0; k < 3; ++k) {
                if (!parse_double(tokens[1 + k], p[k]) || !std::isfinite(p[k])) {
                    throw ParseError(name, lineno, "invalid coordinate '" + std::string(tokens[1 + k]) + "'");
                }
            }
            rec.vertices.push_back(p);
        } else if (tokens[0] == "f") {
            if (tokens.size() < 4) throw ParseError(name, lineno, "face record needs at least 3 indices");
            std::vector<int> idx;
            for (std::size_t t = 1; t < tokens.size(); ++t) {
                auto tok = tokens[t];
                if (const auto slash = tok.find('/'); slash != std::string_view::npos) tok = tok.substr(0, slash);
                long raw = 0;
                if (!parse_long(tok, raw)) {
                    throw ParseError(name, lineno, "invalid face index '" + std::string(tokens[t]) + "'");
                }
                const long count = static_cast<long>(rec.vertices.size());
                long zero_based = 0;
                if (raw > 0) {
                    zero_based = raw - 1;
                } else if (raw < 0) {
                    zero_based = count + raw;
                } else {
                    throw ParseError(name, lineno, "face index 0 is invalid (OBJ indices are 1-based)");
                }
                if (zero_based < 0 || zero_based >= count) {
                    throw ParseError(name, lineno, "face index " + std::to_string(raw) + " out of range");
                }
                idx.push_back(static_cast<int>(zero_based));
            }
            for (std::size_t k = 1; k + 1 < idx.size(); ++k) rec.triangles.emplace_back(idx[0], idx[k], idx[k + 1]);
        }
        // other record types (vn, vt, o, g, usemtl, ...) are ignored
    }
    return rec;
}

} // namespace detail

inline TriMesh read_obj(std::istream& in, const std::string& name = "<stream>")
{
    auto rec = detail::parse_obj(in, name);
    Points V(static_cast<Eigen::Index>(rec.vertices.size()), 3);
    for (std::size_t i = 0; i < rec.vertices.size(); ++i) V.row(static_cast<Eigen::Index>(i)) = rec.vertices[i].transpose();
    Faces F(static_cast<Eigen::Index>(rec.triangles.size()), 3);
    for (std::size_t i = 0; i < rec.triangles.size(); ++i) F.row(static_cast<Eigen::Index>(i)) = rec.triangles[i].transpose();
    return TriMesh(std::move(V), std::move(F));
}

/// Loads a triangle mesh; throws ParseError (with line), DegenerateFaceError or IoError.
inline TriMesh load_mesh(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    return read_obj(in, path.string());
}

/// Loads only the `v` records of an OBJ file (contact point sets).
inline Points load_points(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    auto rec = detail::parse_obj(in, path.string());
    Points P(static_cast<Eigen::Index>(rec.vertices.size()), 3);
    for (std::size_t i = 0; i < rec.vertices.size(); ++i) P.row(static_cast<Eigen::Index>(i)) = rec.vertices[i].transpose();
    return P;
}

/// Shortest round-trip formatting; output is byte-deterministic for equal inputs.
inline std::string format_obj(const Points& V, const Faces& F)
{
    std::string out;
    out.reserve(static_cast<std::size_t>(V.rows() * 48 + F.rows() * 24));
    for (Eigen::Index i = 0; i < V.rows(); ++i) {
        out += "v";
        for (int k = 0; k < 3; ++k) {
            out += ' ';
            append_number(out, V(i, k));
        }
        out += '\n';
    }
    for (Eigen::Index f = 0; f < F.rows(); ++f) {
        out += "f " + std::to_string(F(f, 0) + 1) + ' ' + std::to_string(F(f, 1) + 1) + ' ' +
               std::to_string(F(f, 2) + 1) + '\n';
    }
    return out;
}

inline void write_mesh(const Points& V, const Faces& F, const std::filesystem::path& path)
{
    write_text_file(path, format_obj(V, F));
}

inline void write_mesh(const TriMesh& mesh, const std::filesystem::path& path)
{
    write_mesh(mesh.vertices(), mesh.faces(), path);
}

inline void write_points(const Points& P, const std::filesystem::path& path)
{
    write_text_file(path, format_obj(P, Faces(0, 3)));
}

} // namespace bodyfit
