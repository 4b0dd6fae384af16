#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace modelgate {

class PatternError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Conservative regular-expression subset for schema `pattern`.
///
/// Supported: literals, `.`, classes `[...]` / `[^...]` with ranges,
/// `\d \w \s` and their negations, anchors `^ $`, grouping `(...)` and
/// `(?:...)`, alternation, `* + ?` and bounded `{n}`, `{n,}`, `{n,m}`.
/// Backreferences and lookaround are rejected. Matching runs over code
/// points in time linear in the input (Pike VM), unanchored as in
/// ECMA-262 `test()`.
class Pattern {
  public:
    static Pattern compile(std::string_view source);

    bool search(std::string_view utf8_text) const;
    const std::string& source() const { return source_; }

    struct Range {
        char32_t lo;
        char32_t hi;
    };
    enum class Op : std::uint8_t { Set, Split, Jump, Begin, End, Match };
    struct Inst {
        Op op;
        std::uint32_t x = 0;     // Split/Jump target, Set: first range index
        std::uint32_t y = 0;     // Split second target, Set: range count
    };

  private:
    std::string source_;
    std::vector<Inst> program_;
    std::vector<Range> ranges_;
    friend class PatternCompiler;
};

}  // namespace modelgate
