#pragma once

#include <concepts>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "modelgate/decimal.hpp"
#include "modelgate/path.hpp"

namespace modelgate {

class Value;
struct Member;
using Array = std::vector<Value>;
/// Object members in source order. Duplicate names are kept; lookups use
/// the last occurrence.
using Object = std::vector<Member>;

enum class ValueKind { Null, Bool, Number, String, Array, Object };

const char* kind_name(ValueKind k);

class TypeError : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

class Value {
  public:
    Value() = default;
    Value(std::nullptr_t) {}
    Value(bool b) : v_(b) {}
    Value(Decimal d) : v_(std::move(d)) {}
    template <std::integral T>
        requires(!std::same_as<T, bool>)
    Value(T n) : v_(Decimal(static_cast<std::int64_t>(n))) {}
    Value(std::string s) : v_(std::move(s)) {}
    Value(std::string_view s) : v_(std::string(s)) {}
    Value(const char* s) : v_(std::string(s)) {}
    Value(Array a) : v_(std::move(a)) {}
    Value(Object o) : v_(std::move(o)) {}

    static Value object(std::initializer_list<Member> members);
    static Value array(std::initializer_list<Value> items);
    static Value empty_object() { return Value(Object{}); }
    static Value empty_array() { return Value(Array{}); }

    ValueKind kind() const { return static_cast<ValueKind>(v_.index()); }
    bool is_null() const { return kind() == ValueKind::Null; }
    bool is_bool() const { return kind() == ValueKind::Bool; }
    bool is_number() const { return kind() == ValueKind::Number; }
    bool is_string() const { return kind() == ValueKind::String; }
    bool is_array() const { return kind() == ValueKind::Array; }
    bool is_object() const { return kind() == ValueKind::Object; }

    bool as_bool() const;
    const Decimal& as_number() const;
    const std::string& as_string() const;
    const Array& as_array() const;
    Array& as_array();
    const Object& as_object() const;
    Object& as_object();

    /// Last member named `name`, or nullptr. Null for non-objects.
    const Value* find(std::string_view name) const;
    bool contains(std::string_view name) const { return find(name) != nullptr; }
    /// Throws TypeError when absent.
    const Value& at(std::string_view name) const;

    /// Replaces the last member named `name`, or appends one.
    Value& set(std::string name, Value v);
    void push_back(Value v);

    std::string get_string(std::string_view name, std::string fallback = {}) const;

    friend bool operator==(const Value&, const Value&) = default;

  private:
    std::variant<std::monostate, bool, Decimal, std::string, Array, Object> v_;
};

struct Member {
    std::string name;
    Value value;
    friend bool operator==(const Member&, const Member&) = default;
};

/// JSON equality: numbers by value, objects by name set with last-wins.
bool json_equal(const Value& a, const Value& b);

struct Diagnostic {
    std::string kind;  // currently only "duplicate_key"
    PathExpr path;
    std::size_t line = 0;
    std::size_t column = 0;
    std::string message;
};

struct Document {
    Value root;
    std::string source_name;
    std::vector<Diagnostic> diagnostics;
};

class ParseError : public std::runtime_error {
  public:
    ParseError(std::size_t line, std::size_t column, std::string message);
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }
    const std::string& detail() const { return detail_; }

  private:
    std::size_t line_;
    std::size_t column_;
    std::string detail_;
};

class EncodingError : public ParseError {
  public:
    using ParseError::ParseError;
};

/// RFC 8259 parser. Numbers keep their exact decimal value; duplicate member
/// names are reported in Document::diagnostics.
Document parse_document(std::string_view text, std::string source_name = {});

/// Compact (indent < 0) or indented serialization. Deterministic.
std::string serialize(const Value& v, int indent = -1);
std::string quote_string(std::string_view s);

struct Match {
    PathExpr path;  // concrete, wildcard-free
    const Value* value;
};

/// All locations addressed by `path`, in document order. Wildcards fan out
/// over array elements only; missing keys yield no match.
std::vector<Match> resolve_path(const Value& root, const PathExpr& path);
inline std::vector<Match> resolve_path(const Document& doc, const PathExpr& path) {
    return resolve_path(doc.root, path);
}

/// Single-location lookup on a wildcard-free path.
const Value* lookup(const Value& root, const PathExpr& path);

/// Number of Unicode code points in a UTF-8 string.
std::size_t utf8_length(std::string_view s);
/// Decodes UTF-8 to code points; assumes already-validated input.
std::u32string utf8_decode(std::string_view s);

}  // namespace modelgate
