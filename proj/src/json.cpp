#include "modelgate/json.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <unordered_map>

namespace modelgate {

const char* kind_name(ValueKind k) {
    switch (k) {
        case ValueKind::Null: return "null";
        case ValueKind::Bool: return "boolean";
        case ValueKind::Number: return "number";
        case ValueKind::String: return "string";
        case ValueKind::Array: return "array";
        case ValueKind::Object: return "object";
    }
    return "?";
}

Value Value::object(std::initializer_list<Member> members) { return Value(Object(members)); }
Value Value::array(std::initializer_list<Value> items) { return Value(Array(items)); }

namespace {
[[noreturn]] void type_error(const char* want, ValueKind got) {
    throw TypeError(std::string("expected ") + want + ", got " + kind_name(got));
}
}  // namespace

bool Value::as_bool() const {
    if (!is_bool()) type_error("boolean", kind());
    return std::get<bool>(v_);
}
const Decimal& Value::as_number() const {
    if (!is_number()) type_error("number", kind());
    return std::get<Decimal>(v_);
}
const std::string& Value::as_string() const {
    if (!is_string()) type_error("string", kind());
    return std::get<std::string>(v_);
}
const Array& Value::as_array() const {
    if (!is_array()) type_error("array", kind());
    return std::get<Array>(v_);
}
Array& Value::as_array() {
    if (!is_array()) type_error("array", kind());
    return std::get<Array>(v_);
}
const Object& Value::as_object() const {
    if (!is_object()) type_error("object", kind());
    return std::get<Object>(v_);
}
Object& Value::as_object() {
    if (!is_object()) type_error("object", kind());
    return std::get<Object>(v_);
}

const Value* Value::find(std::string_view name) const {
    if (!is_object()) return nullptr;
    const auto& members = std::get<Object>(v_);
    for (auto it = members.rbegin(); it != members.rend(); ++it) {
        if (it->name == name) return &it->value;
    }
    return nullptr;
}

const Value& Value::at(std::string_view name) const {
    const Value* v = find(name);
    if (!v) throw TypeError("missing member '" + std::string(name) + "'");
    return *v;
}

Value& Value::set(std::string name, Value v) {
    auto& members = as_object();
    for (auto it = members.rbegin(); it != members.rend(); ++it) {
        if (it->name == name) {
            it->value = std::move(v);
            return it->value;
        }
    }
    members.push_back(Member{std::move(name), std::move(v)});
    return members.back().value;
}

void Value::push_back(Value v) { as_array().push_back(std::move(v)); }

std::string Value::get_string(std::string_view name, std::string fallback) const {
    const Value* v = find(name);
    if (v && v->is_string()) return v->as_string();
    return fallback;
}

bool json_equal(const Value& a, const Value& b) {
    if (a.kind() != b.kind()) return false;
    switch (a.kind()) {
        case ValueKind::Null: return true;
        case ValueKind::Bool: return a.as_bool() == b.as_bool();
        case ValueKind::Number: return a.as_number() == b.as_number();
        case ValueKind::String: return a.as_string() == b.as_string();
        case ValueKind::Array: {
            const auto& x = a.as_array();
            const auto& y = b.as_array();
            if (x.size() != y.size()) return false;
            for (std::size_t i = 0; i < x.size(); ++i) {
                if (!json_equal(x[i], y[i])) return false;
            }
            return true;
        }
        case ValueKind::Object: {
            std::map<std::string_view, const Value*> xa, ya;
            for (const auto& m : a.as_object()) xa[m.name] = &m.value;
            for (const auto& m : b.as_object()) ya[m.name] = &m.value;
            if (xa.size() != ya.size()) return false;
            for (const auto& [k, v] : xa) {
                auto it = ya.find(k);
                if (it == ya.end() || !json_equal(*v, *it->second)) return false;
            }
            return true;
        }
    }
    return false;
}

ParseError::ParseError(std::size_t line, std::size_t column, std::string message)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
      line_(line),
      column_(column),
      detail_(std::move(message)) {}

namespace {

constexpr int kMaxDepth = 512;

// Returns the byte offset of the first invalid sequence, or npos.
std::size_t find_invalid_utf8(std::string_view s) {
    std::size_t i = 0;
    const auto n = s.size();
    while (i < n) {
        const auto c = static_cast<unsigned char>(s[i]);
        if (c < 0x80) {
            ++i;
            continue;
        }
        std::size_t len;
        char32_t cp;
        if ((c & 0xE0) == 0xC0) {
            len = 2;
            cp = c & 0x1F;
        } else if ((c & 0xF0) == 0xE0) {
            len = 3;
            cp = c & 0x0F;
        } else if ((c & 0xF8) == 0xF0) {
            len = 4;
            cp = c & 0x07;
        } else {
            return i;
        }
        if (i + len > n) return i;
        for (std::size_t k = 1; k < len; ++k) {
            const auto cc = static_cast<unsigned char>(s[i + k]);
            if ((cc & 0xC0) != 0x80) return i;
            cp = (cp << 6) | (cc & 0x3F);
        }
        const char32_t min_for_len[] = {0, 0, 0x80, 0x800, 0x10000};
        if (cp < min_for_len[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return i;
        i += len;
    }
    return std::string_view::npos;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

class Parser {
  public:
    Parser(std::string_view text, Document& doc) : text_(text), doc_(doc) {}

    Value parse_root() {
        skip_ws();
        PathExpr root;
        Value v = parse_value(root, 0);
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected trailing content");
        return v;
    }

  private:
    [[noreturn]] void fail(const std::string& message) const { fail_at(pos_, message); }

    [[noreturn]] void fail_at(std::size_t offset, const std::string& message) const {
        auto [line, col] = position(offset);
        throw ParseError(line, col, message);
    }

    std::pair<std::size_t, std::size_t> position(std::size_t offset) const {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i < offset && i < text_.size(); ++i) {
            if (text_[i] == '\n') {
                ++line;
                col = 1;
            } else if ((static_cast<unsigned char>(text_[i]) & 0xC0) != 0x80) {
                ++col;
            }
        }
        return {line, col};
    }

    bool at_end() const { return pos_ >= text_.size(); }
    char peek() const { return at_end() ? '\0' : text_[pos_]; }

    void skip_ws() {
        while (!at_end()) {
            const char c = text_[pos_];
            if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
                ++pos_;
            } else {
                break;
            }
        }
    }

    void expect(char c) {
        if (peek() != c) {
            if (at_end()) fail(std::string("unexpected end of input, expected '") + c + "'");
            fail(std::string("expected '") + c + "'");
        }
        ++pos_;
    }

    Value parse_value(const PathExpr& path, int depth) {
        if (depth > kMaxDepth) fail("nesting too deep");
        if (at_end()) fail("unexpected end of input");
        switch (peek()) {
            case '{': return parse_object(path, depth);
            case '[': return parse_array(path, depth);
            case '"': return Value(parse_string());
            case 't': literal("true"); return Value(true);
            case 'f': literal("false"); return Value(false);
            case 'n': literal("null"); return Value(nullptr);
            default: break;
        }
        if (peek() == '-' || (peek() >= '0' && peek() <= '9')) return parse_number();
        fail(std::string("unexpected character '") + peek() + "'");
    }

    void literal(std::string_view word) {
        if (text_.substr(pos_, word.size()) != word) fail("invalid literal");
        pos_ += word.size();
    }

    Value parse_number() {
        const std::size_t start = pos_;
        if (peek() == '-') ++pos_;
        auto digits = [&] {
            const std::size_t s = pos_;
            while (!at_end() && text_[pos_] >= '0' && text_[pos_] <= '9') ++pos_;
            return pos_ - s;
        };
        if (peek() == '0') {
            ++pos_;
        } else if (digits() == 0) {
            fail("invalid number");
        }
        if (peek() == '.') {
            ++pos_;
            if (digits() == 0) fail("invalid number: missing fraction digits");
        }
        if (peek() == 'e' || peek() == 'E') {
            ++pos_;
            if (peek() == '+' || peek() == '-') ++pos_;
            if (digits() == 0) fail("invalid number: missing exponent digits");
        }
        auto d = Decimal::try_parse(text_.substr(start, pos_ - start));
        if (!d) fail_at(start, "number out of supported range");
        return Value(std::move(*d));
    }

    unsigned hex4() {
        if (pos_ + 4 > text_.size()) fail("truncated \\u escape");
        unsigned v = 0;
        for (int i = 0; i < 4; ++i) {
            const char c = text_[pos_++];
            v <<= 4;
            if (c >= '0' && c <= '9') {
                v |= static_cast<unsigned>(c - '0');
            } else if (c >= 'a' && c <= 'f') {
                v |= static_cast<unsigned>(c - 'a' + 10);
            } else if (c >= 'A' && c <= 'F') {
                v |= static_cast<unsigned>(c - 'A' + 10);
            } else {
                fail("invalid \\u escape");
            }
        }
        return v;
    }

    std::string parse_string() {
        expect('"');
        std::string out;
        while (true) {
            if (at_end()) fail("unterminated string");
            const char c = text_[pos_];
            if (c == '"') {
                ++pos_;
                return out;
            }
            if (static_cast<unsigned char>(c) < 0x20) fail("control character in string");
            if (c != '\\') {
                out += c;
                ++pos_;
                continue;
            }
            ++pos_;
            if (at_end()) fail("unterminated escape");
            const char e = text_[pos_++];
            switch (e) {
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                case '/': out += '/'; break;
                case 'b': out += '\b'; break;
                case 'f': out += '\f'; break;
                case 'n': out += '\n'; break;
                case 'r': out += '\r'; break;
                case 't': out += '\t'; break;
                case 'u': {
                    char32_t cp = hex4();
                    if (cp >= 0xD800 && cp <= 0xDBFF) {
                        if (text_.substr(pos_, 2) != "\\u") fail("unpaired surrogate escape");
                        pos_ += 2;
                        const char32_t lo = hex4();
                        if (lo < 0xDC00 || lo > 0xDFFF) fail("invalid low surrogate escape");
                        cp = 0x10000 + ((cp - 0xD800) << 10) + (lo - 0xDC00);
                    } else if (cp >= 0xDC00 && cp <= 0xDFFF) {
                        fail("unpaired surrogate escape");
                    }
                    append_utf8(out, cp);
                    break;
                }
                default: fail("invalid escape");
            }
        }
    }

    Value parse_array(const PathExpr& path, int depth) {
        expect('[');
        Array items;
        skip_ws();
        if (peek() == ']') {
            ++pos_;
            return Value(std::move(items));
        }
        while (true) {
            skip_ws();
            items.push_back(parse_value(path.child(items.size()), depth + 1));
            skip_ws();
            if (peek() == ',') {
                ++pos_;
                continue;
            }
            expect(']');
            return Value(std::move(items));
        }
    }

    Value parse_object(const PathExpr& path, int depth) {
        expect('{');
        Object members;
        std::unordered_map<std::string, int> seen;
        skip_ws();
        if (peek() == '}') {
            ++pos_;
            return Value(std::move(members));
        }
        while (true) {
            skip_ws();
            const std::size_t key_pos = pos_;
            if (peek() != '"') fail(at_end() ? "unexpected end of input" : "expected member name");
            std::string name = parse_string();
            if (seen[name]++ > 0) {
                auto [line, col] = position(key_pos);
                doc_.diagnostics.push_back(Diagnostic{"duplicate_key", path.child(name), line, col,
                                                      "duplicate member name '" + name + "'"});
            }
            skip_ws();
            expect(':');
            skip_ws();
            Value v = parse_value(path.child(name), depth + 1);
            members.push_back(Member{std::move(name), std::move(v)});
            skip_ws();
            if (peek() == ',') {
                ++pos_;
                continue;
            }
            expect('}');
            return Value(std::move(members));
        }
    }

    std::string_view text_;
    Document& doc_;
    std::size_t pos_ = 0;
};

void serialize_into(std::string& out, const Value& v, int indent, int level) {
    auto newline = [&](int lvl) {
        if (indent < 0) return;
        out += '\n';
        out.append(static_cast<std::size_t>(indent * lvl), ' ');
    };
    switch (v.kind()) {
        case ValueKind::Null: out += "null"; return;
        case ValueKind::Bool: out += v.as_bool() ? "true" : "false"; return;
        case ValueKind::Number: out += v.as_number().to_string(); return;
        case ValueKind::String: out += quote_string(v.as_string()); return;
        case ValueKind::Array: {
            const auto& a = v.as_array();
            out += '[';
            for (std::size_t i = 0; i < a.size(); ++i) {
                if (i) out += ',';
                newline(level + 1);
                serialize_into(out, a[i], indent, level + 1);
            }
            if (!a.empty()) newline(level);
            out += ']';
            return;
        }
        case ValueKind::Object: {
            const auto& o = v.as_object();
            out += '{';
            for (std::size_t i = 0; i < o.size(); ++i) {
                if (i) out += ',';
                newline(level + 1);
                out += quote_string(o[i].name);
                out += indent < 0 ? ":" : ": ";
                serialize_into(out, o[i].value, indent, level + 1);
            }
            if (!o.empty()) newline(level);
            out += '}';
            return;
        }
    }
}

void resolve_into(const Value& node, const std::vector<PathSegment>& segs, std::size_t i, PathExpr& prefix,
                  std::vector<Match>& out) {
    if (i == segs.size()) {
        out.push_back(Match{prefix, &node});
        return;
    }
    const auto& seg = segs[i];
    auto descend = [&](const Value& child, PathSegment concrete) {
        auto extended = prefix.segments();
        extended.push_back(std::move(concrete));
        PathExpr np(std::move(extended));
        resolve_into(child, segs, i + 1, np, out);
    };
    if (std::holds_alternative<Wildcard>(seg)) {
        if (!node.is_array()) return;
        const auto& a = node.as_array();
        for (std::size_t k = 0; k < a.size(); ++k) descend(a[k], k);
        return;
    }
    if (const auto* idx = std::get_if<std::size_t>(&seg)) {
        if (node.is_array()) {
            if (*idx < node.as_array().size()) descend(node.as_array()[*idx], *idx);
        } else if (const Value* m = node.find(std::to_string(*idx))) {
            descend(*m, *idx);
        }
        return;
    }
    const auto& key = std::get<std::string>(seg);
    if (const Value* m = node.find(key)) descend(*m, key);
}

}  // namespace

Document parse_document(std::string_view text, std::string source_name) {
    if (const auto bad = find_invalid_utf8(text); bad != std::string_view::npos) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i < bad; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else if ((static_cast<unsigned char>(text[i]) & 0xC0) != 0x80) {
                ++col;
            }
        }
        throw EncodingError(line, col, "invalid UTF-8 sequence");
    }
    Document doc;
    doc.source_name = std::move(source_name);
    Parser p(text, doc);
    doc.root = p.parse_root();
    return doc;
}

std::string quote_string(std::string_view s) {
    std::string out;
    out.reserve(s.size() + 2);
    out += '"';
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\b': out += "\\b"; break;
            case '\f': out += "\\f"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", static_cast<unsigned>(static_cast<unsigned char>(c)));
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    out += '"';
    return out;
}

std::string serialize(const Value& v, int indent) {
    std::string out;
    serialize_into(out, v, indent, 0);
    return out;
}

std::vector<Match> resolve_path(const Value& root, const PathExpr& path) {
    std::vector<Match> out;
    PathExpr prefix;
    resolve_into(root, path.segments(), 0, prefix, out);
    return out;
}

const Value* lookup(const Value& root, const PathExpr& path) {
    auto matches = resolve_path(root, path);
    if (matches.size() != 1) return nullptr;
    return matches.front().value;
}

std::size_t utf8_length(std::string_view s) {
    return static_cast<std::size_t>(
        std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

std::u32string utf8_decode(std::string_view s) {
    std::u32string out;
    std::size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        char32_t cp;
        std::size_t len;
        if (c < 0x80) {
            cp = c;
            len = 1;
        } else if ((c & 0xE0) == 0xC0) {
            cp = c & 0x1F;
            len = 2;
        } else if ((c & 0xF0) == 0xE0) {
            cp = c & 0x0F;
            len = 3;
        } else {
            cp = c & 0x07;
            len = 4;
        }
        for (std::size_t k = 1; k < len && i + k < s.size(); ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
        out.push_back(cp);
        i += len;
    }
    return out;
}

}  // namespace modelgate
