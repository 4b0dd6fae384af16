#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace modelgate {

class PathSyntaxError : public std::runtime_error {
  public:
    PathSyntaxError(std::string message, std::size_t offset)
        : std::runtime_error(std::move(message)), offset_(offset) {}
    std::size_t offset() const { return offset_; }

  private:
    std::size_t offset_;
};

struct Wildcard {
    friend bool operator==(Wildcard, Wildcard) = default;
};

/// One step of a path: an object member name, an array index, or `*`.
///
/// A token made only of digits (no leading zero unless it is "0") parses as
/// an Index. Resolving an Index against an object looks up the member whose
/// name is the decimal text, so `/a/0` works for both shapes.
using PathSegment = std::variant<std::string, std::size_t, Wildcard>;

/// Slash-separated path with `~0` / `~1` escaping; the empty path is the root.
class PathExpr {
  public:
    PathExpr() = default;
    explicit PathExpr(std::vector<PathSegment> segments) : segments_(std::move(segments)) {}

    const std::vector<PathSegment>& segments() const { return segments_; }
    bool empty() const { return segments_.empty(); }
    std::size_t size() const { return segments_.size(); }
    bool has_wildcard() const;
    std::size_t wildcard_count() const;

    PathExpr child(std::string key) const;
    PathExpr child(std::size_t index) const;
    PathExpr wildcard() const;
    PathExpr parent() const;

    /// Canonical serialized form; empty string for the root.
    std::string to_string() const;

    friend bool operator==(const PathExpr&, const PathExpr&) = default;

  private:
    std::vector<PathSegment> segments_;
};

/// Parses the path language. Throws PathSyntaxError on an empty segment, a
/// missing leading slash, or a malformed `~` escape.
PathExpr parse_path(std::string_view text);

std::string escape_path_token(std::string_view token);

}  // namespace modelgate
