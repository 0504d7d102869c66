#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bodyfit {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Violated precondition on an argument (index out of range, wrong size, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed input; line is 1-based, 0 when the problem is not tied to a line.
class ParseError : public Error {
public:
    ParseError(std::string file, std::size_t line, const std::string& what)
        : Error(file + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + what), file_(std::move(file)), line_(line)
    {}

    const std::string& file() const noexcept { return file_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string file_;
    std::size_t line_;
};

class DegenerateFaceError : public Error {
public:
    explicit DegenerateFaceError(std::vector<std::size_t> faces)
        : Error(describe(faces)), faces_(std::move(faces))
    {}

    const std::vector<std::size_t>& faces() const noexcept { return faces_; }

private:
    static std::string describe(const std::vector<std::size_t>& faces)
    {
        std::string s = "degenerate faces (" + std::to_string(faces.size()) + "):";
        const std::size_t shown = std::min<std::size_t>(faces.size(), 16);
        for (std::size_t i = 0; i < shown; ++i) s += " " + std::to_string(faces[i]);
        if (shown < faces.size()) s += " ...";
        return s;
    }

    std::vector<std::size_t> faces_;
};

/// The Poisson system has more than one connected component.
class DisconnectedMeshError : public Error {
public:
    DisconnectedMeshError(std::size_t components, std::size_t smallest_size, std::size_t smallest_vertex)
        : Error("mesh has " + std::to_string(components) + " connected components; smallest has " +
                std::to_string(smallest_size) + " vertices and contains vertex " +
                std::to_string(smallest_vertex)),
          smallest_size_(smallest_size), smallest_vertex_(smallest_vertex)
    {}

    std::size_t smallest_size() const noexcept { return smallest_size_; }
    std::size_t smallest_vertex() const noexcept { return smallest_vertex_; }

private:
    std::size_t smallest_size_;
    std::size_t smallest_vertex_;
};

class SignUndecidableError : public Error {
public:
    explicit SignUndecidableError(std::vector<std::size_t> points)
        : Error("signed distance sign undecidable at " + std::to_string(points.size()) +
                " query point(s), first index " + std::to_string(points.empty() ? 0 : points.front())),
          points_(std::move(points))
    {}

    const std::vector<std::size_t>& points() const noexcept { return points_; }

private:
    std::vector<std::size_t> points_;
};

/// A loss term evaluated to NaN or infinity during optimization.
class NonFiniteLossError : public Error {
public:
    NonFiniteLossError(int iteration, std::string term)
        : Error("non-finite loss at iteration " + std::to_string(iteration) + " in term '" + term + "'"),
          iteration_(iteration), term_(std::move(term))
    {}

    int iteration() const noexcept { return iteration_; }
    const std::string& term() const noexcept { return term_; }

private:
    int iteration_;
    std::string term_;
};

/// Wraps a component failure with the name of the loss term that raised it.
class TermError : public Error {
public:
    TermError(std::string term, const std::string& what)
        : Error("in term '" + term + "': " + what), term_(std::move(term))
    {}

    const std::string& term() const noexcept { return term_; }

private:
    std::string term_;
};

} // namespace bodyfit
