#include "modelgate/schema.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <set>
#include <unordered_map>

namespace modelgate {

const char* to_string(CompileErrorKind k) {
    switch (k) {
        case CompileErrorKind::DanglingRef: return "dangling_ref";
        case CompileErrorKind::Cycle: return "cycle";
        case CompileErrorKind::UnsupportedKeyword: return "unsupported_keyword";
        case CompileErrorKind::InconsistentBounds: return "inconsistent_bounds";
        case CompileErrorKind::MalformedKeyword: return "malformed_keyword";
    }
    return "?";
}

namespace {

std::string summarize(const std::vector<CompileIssue>& issues) {
    std::string msg = "schema compile failed:";
    for (const auto& i : issues) {
        msg += " [" + std::string(to_string(i.kind)) + " at '" + i.path + "': " + i.message + "]";
    }
    return msg;
}

}  // namespace

CompileError::CompileError(std::vector<CompileIssue> issues)
    : std::runtime_error(summarize(issues)), issues_(std::move(issues)) {}

struct CompiledSchema::Impl {
    Value source;
    std::deque<SchemaRule> rules;
    const SchemaRule* root = nullptr;
    std::vector<std::string> warnings;
};

const SchemaRule& CompiledSchema::root() const { return *impl_->root; }
const std::vector<std::string>& CompiledSchema::warnings() const { return impl_->warnings; }
const Value& CompiledSchema::source() const { return impl_->source; }

namespace {

const std::set<std::string, std::less<>> kSupported = {
    "type",      "properties", "required",  "additionalProperties", "items",    "enum",
    "const",     "minimum",    "maximum",   "exclusiveMinimum",     "exclusiveMaximum",
    "minLength", "maxLength",  "pattern",   "minItems",             "maxItems", "default",
    "$defs",     "definitions", "$ref",     "allOf",                "anyOf",    "oneOf",
    "format"};

// Annotation-only keywords carry no validation semantics and are accepted.
const std::set<std::string, std::less<>> kAnnotations = {"$schema",  "$id",      "$comment",  "title",
                                                         "description", "examples", "deprecated", "readOnly",
                                                         "writeOnly"};

std::optional<unsigned> type_bit(std::string_view name) {
    if (name == "null") return kTypeNull;
    if (name == "boolean") return kTypeBoolean;
    if (name == "integer") return kTypeInteger;
    if (name == "number") return kTypeNumber;
    if (name == "string") return kTypeString;
    if (name == "array") return kTypeArray;
    if (name == "object") return kTypeObject;
    return std::nullopt;
}

std::string join_pointer(const std::string& base, std::string_view token) {
    return base + "/" + escape_path_token(token);
}

class Compiler {
  public:
    Compiler(const Value& source, const CompileOptions& options, CompiledSchema::Impl& out)
        : source_(source), options_(options), out_(out) {}

    void run() {
        out_.root = compile_at("");
        // Resolving refs may compile new nodes, which may add new refs.
        while (!pending_refs_.empty()) {
            auto batch = std::move(pending_refs_);
            pending_refs_.clear();
            for (auto* rule : batch) resolve_ref(*rule);
        }
        if (issues_.empty()) detect_cycles();
        if (!issues_.empty()) throw CompileError(std::move(issues_));
    }

  private:
    void issue(CompileErrorKind kind, std::string path, std::string message) {
        issues_.push_back(CompileIssue{kind, std::move(path), std::move(message)});
    }

    const Value* value_at_pointer(const std::string& pointer) const {
        if (pointer.empty()) return &source_;
        try {
            return lookup(source_, parse_path(pointer));
        } catch (const PathSyntaxError&) {
            return nullptr;
        }
    }

    SchemaRule* compile_at(const std::string& location) {
        if (auto it = by_location_.find(location); it != by_location_.end()) return it->second;
        const Value* node = value_at_pointer(location);
        out_.rules.emplace_back();
        SchemaRule* rule = &out_.rules.back();
        rule->location = location;
        by_location_[location] = rule;
        if (!node) {
            issue(CompileErrorKind::DanglingRef, location, "no schema at this location");
            return rule;
        }
        fill(*rule, *node);
        return rule;
    }

    std::optional<Decimal> number_kw(const Value& v, const std::string& path) {
        if (!v.is_number()) {
            issue(CompileErrorKind::MalformedKeyword, path, "expected a number");
            return std::nullopt;
        }
        return v.as_number();
    }

    std::optional<std::size_t> count_kw(const Value& v, const std::string& path) {
        if (!v.is_number() || !v.as_number().is_integer() || v.as_number().is_negative() ||
            !v.as_number().to_int64()) {
            issue(CompileErrorKind::MalformedKeyword, path, "expected a non-negative integer");
            return std::nullopt;
        }
        return static_cast<std::size_t>(*v.as_number().to_int64());
    }

    std::vector<const SchemaRule*> rule_list(const Value& v, const std::string& path) {
        std::vector<const SchemaRule*> out;
        if (!v.is_array() || v.as_array().empty()) {
            issue(CompileErrorKind::MalformedKeyword, path, "expected a non-empty array of schemas");
            return out;
        }
        for (std::size_t i = 0; i < v.as_array().size(); ++i) out.push_back(compile_at(path + "/" + std::to_string(i)));
        return out;
    }

    void fill(SchemaRule& rule, const Value& node) {
        const std::string& at = rule.location;
        if (node.is_bool()) {
            rule.constant = node.as_bool();
            return;
        }
        if (!node.is_object()) {
            issue(CompileErrorKind::MalformedKeyword, at, "schema must be an object or boolean");
            return;
        }
        std::set<std::string, std::less<>> seen;
        // Iterate in reverse so last-wins duplicates are handled once.
        const auto& members = node.as_object();
        for (auto it = members.rbegin(); it != members.rend(); ++it) {
            const std::string& kw = it->name;
            if (!seen.insert(kw).second) continue;
            const Value& v = it->value;
            const std::string kw_path = join_pointer(at, kw);
            if (kAnnotations.count(kw)) continue;
            if (!kSupported.count(kw)) {
                if (options_.lenient) {
                    out_.warnings.push_back("unsupported keyword ignored at '" + kw_path + "'");
                } else {
                    issue(CompileErrorKind::UnsupportedKeyword, kw_path, "keyword '" + kw + "' is not supported");
                }
                continue;
            }
            apply_keyword(rule, kw, v, kw_path);
        }
        check_bounds(rule);
    }

    void apply_keyword(SchemaRule& rule, const std::string& kw, const Value& v, const std::string& path) {
        if (kw == "type") {
            unsigned mask = 0;
            auto add = [&](const Value& t) {
                std::optional<unsigned> bit;
                if (t.is_string()) bit = type_bit(t.as_string());
                if (!bit) {
                    issue(CompileErrorKind::MalformedKeyword, path, "unknown type name");
                    return;
                }
                mask |= *bit;
            };
            if (v.is_array()) {
                if (v.as_array().empty()) issue(CompileErrorKind::MalformedKeyword, path, "empty type list");
                for (const auto& t : v.as_array()) add(t);
            } else {
                add(v);
            }
            rule.types = mask;
        } else if (kw == "properties") {
            if (!v.is_object()) {
                issue(CompileErrorKind::MalformedKeyword, path, "expected an object");
                return;
            }
            std::set<std::string, std::less<>> names;
            for (const auto& m : v.as_object()) names.insert(m.name);
            for (const auto& name : names) rule.properties.emplace_back(name, compile_at(join_pointer(path, name)));
        } else if (kw == "required") {
            if (!v.is_array()) {
                issue(CompileErrorKind::MalformedKeyword, path, "expected an array of strings");
                return;
            }
            std::set<std::string> unique;
            for (const auto& n : v.as_array()) {
                if (!n.is_string()) {
                    issue(CompileErrorKind::MalformedKeyword, path, "expected an array of strings");
                    return;
                }
                if (unique.insert(n.as_string()).second) rule.required.push_back(n.as_string());
            }
        } else if (kw == "additionalProperties") {
            if (!v.is_bool()) {
                issue(CompileErrorKind::UnsupportedKeyword, path, "only boolean additionalProperties is supported");
                return;
            }
            rule.additional_properties = v.as_bool();
        } else if (kw == "items") {
            if (v.is_array()) {
                issue(CompileErrorKind::UnsupportedKeyword, path, "tuple-form items is not supported");
                return;
            }
            rule.items = compile_at(path);
        } else if (kw == "enum") {
            if (!v.is_array() || v.as_array().empty()) {
                issue(CompileErrorKind::MalformedKeyword, path, "expected a non-empty array");
                return;
            }
            rule.enum_values = v.as_array();
        } else if (kw == "const") {
            rule.const_value = v;
        } else if (kw == "minimum") {
            rule.minimum = number_kw(v, path);
        } else if (kw == "maximum") {
            rule.maximum = number_kw(v, path);
        } else if (kw == "exclusiveMinimum") {
            rule.exclusive_minimum = number_kw(v, path);
        } else if (kw == "exclusiveMaximum") {
            rule.exclusive_maximum = number_kw(v, path);
        } else if (kw == "minLength") {
            rule.min_length = count_kw(v, path);
        } else if (kw == "maxLength") {
            rule.max_length = count_kw(v, path);
        } else if (kw == "minItems") {
            rule.min_items = count_kw(v, path);
        } else if (kw == "maxItems") {
            rule.max_items = count_kw(v, path);
        } else if (kw == "pattern") {
            if (!v.is_string()) {
                issue(CompileErrorKind::MalformedKeyword, path, "expected a string");
                return;
            }
            try {
                rule.pattern = Pattern::compile(v.as_string());
            } catch (const PatternError& e) {
                issue(CompileErrorKind::MalformedKeyword, path, std::string("pattern: ") + e.what());
            }
        } else if (kw == "default") {
            rule.default_value = v;
        } else if (kw == "$defs" || kw == "definitions") {
            if (!v.is_object()) {
                issue(CompileErrorKind::MalformedKeyword, path, "expected an object");
                return;
            }
            std::set<std::string, std::less<>> names;
            for (const auto& m : v.as_object()) names.insert(m.name);
            for (const auto& name : names) compile_at(join_pointer(path, name));
        } else if (kw == "$ref") {
            if (!v.is_string()) {
                issue(CompileErrorKind::MalformedKeyword, path, "expected a string");
                return;
            }
            rule.ref_target = v.as_string();
            pending_refs_.push_back(&rule);
        } else if (kw == "allOf") {
            rule.all_of = rule_list(v, path);
        } else if (kw == "anyOf") {
            rule.any_of = rule_list(v, path);
        } else if (kw == "oneOf") {
            rule.one_of = rule_list(v, path);
        } else if (kw == "format") {
            if (!v.is_string()) {
                issue(CompileErrorKind::MalformedKeyword, path, "expected a string");
                return;
            }
            rule.format = v.as_string();
            if (v.as_string() != "date-time")
                out_.warnings.push_back("format '" + v.as_string() + "' at '" + path + "' is annotation-only");
        }
    }

    void check_bounds(const SchemaRule& r) {
        auto bad = [&](const char* what) {
            issue(CompileErrorKind::InconsistentBounds, r.location, what);
        };
        if (r.minimum && r.maximum && *r.minimum > *r.maximum) bad("minimum exceeds maximum");
        if (r.exclusive_minimum && r.exclusive_maximum && *r.exclusive_minimum >= *r.exclusive_maximum)
            bad("exclusiveMinimum not below exclusiveMaximum");
        if (r.min_items && r.max_items && *r.min_items > *r.max_items) bad("minItems exceeds maxItems");
        if (r.min_length && r.max_length && *r.min_length > *r.max_length) bad("minLength exceeds maxLength");
    }

    void resolve_ref(SchemaRule& rule) {
        const std::string ref_path = join_pointer(rule.location, "$ref");
        const std::string& target = rule.ref_target;
        if (target.empty() || target[0] != '#') {
            issue(CompileErrorKind::UnsupportedKeyword, ref_path, "only internal '#...' references are supported");
            return;
        }
        const std::string pointer = target.substr(1);
        if (!pointer.empty() && pointer[0] != '/') {
            issue(CompileErrorKind::UnsupportedKeyword, ref_path, "anchor references are not supported");
            return;
        }
        const Value* node = value_at_pointer(pointer);
        if (!node) {
            issue(CompileErrorKind::DanglingRef, ref_path, "reference '" + target + "' does not resolve");
            return;
        }
        // Canonicalize so that "#/a/0" and an equivalent spelling share a node.
        std::string canonical = pointer.empty() ? std::string() : parse_path(pointer).to_string();
        rule.ref = compile_at(canonical);
    }

    // Any cycle in the rule graph passes through a $ref edge, since plain
    // keyword nesting is a tree.
    void detect_cycles() {
        enum class Color { White, Grey, Black };
        std::unordered_map<const SchemaRule*, Color> color;
        std::function<void(const SchemaRule*)> visit = [&](const SchemaRule* r) {
            color[r] = Color::Grey;
            auto step = [&](const SchemaRule* child) {
                if (!child) return;
                const auto c = color[child];
                if (c == Color::Grey) {
                    issue(CompileErrorKind::Cycle, r->location, "reference cycle through '" + child->location + "'");
                } else if (c == Color::White) {
                    visit(child);
                }
            };
            for (const auto& [_, p] : r->properties) step(p);
            step(r->items);
            for (auto* s : r->all_of) step(s);
            for (auto* s : r->any_of) step(s);
            for (auto* s : r->one_of) step(s);
            step(r->ref);
            color[r] = Color::Black;
        };
        for (const auto& r : out_.rules) {
            if (color[&r] == Color::White) visit(&r);
            if (!issues_.empty()) return;
        }
    }

    const Value& source_;
    const CompileOptions& options_;
    CompiledSchema::Impl& out_;
    std::unordered_map<std::string, SchemaRule*> by_location_;
    std::vector<SchemaRule*> pending_refs_;
    std::vector<CompileIssue> issues_;
};

bool type_matches(unsigned mask, const Value& v) {
    switch (v.kind()) {
        case ValueKind::Null: return mask & kTypeNull;
        case ValueKind::Bool: return mask & kTypeBoolean;
        case ValueKind::Number:
            return (mask & kTypeNumber) || ((mask & kTypeInteger) && v.as_number().is_integer());
        case ValueKind::String: return mask & kTypeString;
        case ValueKind::Array: return mask & kTypeArray;
        case ValueKind::Object: return mask & kTypeObject;
    }
    return false;
}

std::string type_list(unsigned mask) {
    static const char* names[] = {"null", "boolean", "integer", "number", "string", "array", "object"};
    std::string out;
    for (unsigned i = 0; i < 7; ++i) {
        if (mask & (1u << i)) {
            if (!out.empty()) out += ", ";
            out += names[i];
        }
    }
    return out;
}

class Validator {
  public:
    explicit Validator(std::vector<ValidationError>& errors) : errors_(errors) {}

    void check(const SchemaRule& r, const Value& inst, const PathExpr& at) {
        auto fail = [&](const std::string& keyword, std::string message, PathExpr where) {
            errors_.push_back(ValidationError{std::move(where), keyword, std::move(message),
                                              join_pointer(r.location, keyword)});
        };
        if (r.constant) {
            if (!*r.constant) {
                errors_.push_back(ValidationError{at, "false", "schema 'false' admits no value", r.location});
            }
            return;
        }
        if (r.types && !type_matches(*r.types, inst)) {
            fail("type", std::string("expected ") + type_list(*r.types) + ", got " + kind_name(inst.kind()), at);
        }
        if (r.enum_values) {
            const bool found = std::any_of(r.enum_values->begin(), r.enum_values->end(),
                                           [&](const Value& e) { return json_equal(e, inst); });
            if (!found) fail("enum", "value is not one of the enumerated values", at);
        }
        if (r.const_value && !json_equal(*r.const_value, inst)) fail("const", "value differs from const", at);

        if (inst.is_number()) {
            const Decimal& n = inst.as_number();
            if (r.minimum && n < *r.minimum) fail("minimum", n.to_string() + " < " + r.minimum->to_string(), at);
            if (r.maximum && n > *r.maximum) fail("maximum", n.to_string() + " > " + r.maximum->to_string(), at);
            if (r.exclusive_minimum && n <= *r.exclusive_minimum)
                fail("exclusiveMinimum", n.to_string() + " <= " + r.exclusive_minimum->to_string(), at);
            if (r.exclusive_maximum && n >= *r.exclusive_maximum)
                fail("exclusiveMaximum", n.to_string() + " >= " + r.exclusive_maximum->to_string(), at);
        }
        if (inst.is_string()) {
            const auto& s = inst.as_string();
            const auto len = utf8_length(s);
            if (r.min_length && len < *r.min_length)
                fail("minLength", "length " + std::to_string(len) + " < " + std::to_string(*r.min_length), at);
            if (r.max_length && len > *r.max_length)
                fail("maxLength", "length " + std::to_string(len) + " > " + std::to_string(*r.max_length), at);
            if (r.pattern && !r.pattern->search(s)) fail("pattern", "does not match /" + r.pattern->source() + "/", at);
            if (r.format && *r.format == "date-time" && !is_rfc3339_date_time(s))
                fail("format", "not an RFC 3339 date-time", at);
        }
        if (inst.is_array()) {
            const auto& a = inst.as_array();
            if (r.min_items && a.size() < *r.min_items)
                fail("minItems", std::to_string(a.size()) + " items < " + std::to_string(*r.min_items), at);
            if (r.max_items && a.size() > *r.max_items)
                fail("maxItems", std::to_string(a.size()) + " items > " + std::to_string(*r.max_items), at);
            if (r.items) {
                for (std::size_t i = 0; i < a.size(); ++i) check(*r.items, a[i], at.child(i));
            }
        }
        if (inst.is_object()) {
            for (const auto& name : r.required) {
                if (!inst.contains(name)) fail("required", "missing required member '" + name + "'", at);
            }
            std::set<std::string_view> visited;
            const auto& members = inst.as_object();
            for (auto it = members.rbegin(); it != members.rend(); ++it) {
                if (!visited.insert(it->name).second) continue;
                const SchemaRule* prop = nullptr;
                for (const auto& [name, rule] : r.properties) {
                    if (name == it->name) prop = rule;
                }
                if (prop) {
                    check(*prop, it->value, at.child(it->name));
                } else if (r.additional_properties && !*r.additional_properties) {
                    fail("additionalProperties", "member '" + it->name + "' is not allowed", at.child(it->name));
                }
            }
        }
        for (const auto* s : r.all_of) check(*s, inst, at);
        if (!r.any_of.empty()) {
            const auto n = count_passing(r.any_of, inst, at);
            if (n == 0) fail("anyOf", "no alternative matched", at);
        }
        if (!r.one_of.empty()) {
            const auto n = count_passing(r.one_of, inst, at);
            if (n != 1) fail("oneOf", std::to_string(n) + " alternatives matched, expected exactly 1", at);
        }
        if (r.ref) check(*r.ref, inst, at);
    }

  private:
    std::size_t count_passing(const std::vector<const SchemaRule*>& rules, const Value& inst, const PathExpr& at) {
        std::size_t n = 0;
        for (const auto* s : rules) {
            std::vector<ValidationError> scratch;
            Validator(scratch).check(*s, inst, at);
            if (scratch.empty()) ++n;
        }
        return n;
    }

    std::vector<ValidationError>& errors_;
};

int digits_at(std::string_view s, std::size_t pos, std::size_t n) {
    if (pos + n > s.size()) return -1;
    int v = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const char c = s[pos + i];
        if (c < '0' || c > '9') return -1;
        v = v * 10 + (c - '0');
    }
    return v;
}

}  // namespace

bool is_rfc3339_date_time(std::string_view s) {
    // YYYY-MM-DDTHH:MM:SS[.frac](Z|+HH:MM|-HH:MM)
    if (s.size() < 20) return false;
    const int year = digits_at(s, 0, 4), month = digits_at(s, 5, 2), day = digits_at(s, 8, 2);
    const int hour = digits_at(s, 11, 2), minute = digits_at(s, 14, 2), second = digits_at(s, 17, 2);
    if (year < 0 || month < 1 || month > 12 || day < 1 || hour < 0 || hour > 23 || minute < 0 || minute > 59 ||
        second < 0 || second > 60)
        return false;
    if (s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != 't') || s[13] != ':' || s[16] != ':') return false;
    static const int days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
    const int max_day = days[month - 1] + (month == 2 && leap ? 1 : 0);
    if (day > max_day) return false;
    std::size_t pos = 19;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        const std::size_t start = pos;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
        if (pos == start) return false;
    }
    if (pos >= s.size()) return false;
    if (s[pos] == 'Z' || s[pos] == 'z') return pos + 1 == s.size();
    if (s[pos] != '+' && s[pos] != '-') return false;
    if (pos + 6 != s.size() || s[pos + 3] != ':') return false;
    const int oh = digits_at(s, pos + 1, 2), om = digits_at(s, pos + 4, 2);
    return oh >= 0 && oh <= 23 && om >= 0 && om <= 59;
}

CompiledSchema compile_schema(const Document& schema_doc, const CompileOptions& options) {
    auto impl = std::make_shared<CompiledSchema::Impl>();
    impl->source = schema_doc.root;
    Compiler compiler(impl->source, options, *impl);
    compiler.run();
    return CompiledSchema(std::move(impl));
}

ValidationReport CompiledSchema::validate(const Value& instance) const {
    ValidationReport report;
    Validator(report.errors).check(*impl_->root, instance, PathExpr{});
    report.pass = report.errors.empty();
    return report;
}

std::vector<DefaultEntry> CompiledSchema::list_defaults() const {
    std::vector<DefaultEntry> out;
    // (rule, instance path pattern, is the member mandatory in its parent)
    std::function<void(const SchemaRule&, const PathExpr&, bool)> walk = [&](const SchemaRule& r, const PathExpr& at,
                                                                            bool mandatory) {
        if (r.default_value) out.push_back(DefaultEntry{at, *r.default_value, mandatory, join_pointer(r.location, "default")});
        for (const auto& [name, child] : r.properties) {
            const bool req = std::find(r.required.begin(), r.required.end(), name) != r.required.end();
            walk(*child, at.child(name), req);
        }
        if (r.items) walk(*r.items, at.wildcard(), false);
        for (auto* s : r.all_of) walk(*s, at, mandatory);
        for (auto* s : r.any_of) walk(*s, at, mandatory);
        for (auto* s : r.one_of) walk(*s, at, mandatory);
        if (r.ref) walk(*r.ref, at, mandatory);
    };
    walk(*impl_->root, PathExpr{}, false);
    return out;
}

Value ValidationReport::to_json() const {
    Array errs;
    for (const auto& e : errors) {
        errs.push_back(Value::object({{"instance_path", e.instance_path.to_string()},
                                      {"keyword", e.keyword},
                                      {"message", e.message},
                                      {"schema_path", e.schema_path}}));
    }
    return Value::object({{"verdict", pass ? "PASS" : "FAIL"}, {"errors", Value(std::move(errs))}});
}

ValidationReport ValidationReport::from_json(const Value& v) {
    ValidationReport r;
    r.pass = v.at("verdict").as_string() == "PASS";
    for (const auto& e : v.at("errors").as_array()) {
        r.errors.push_back(ValidationError{parse_path(e.at("instance_path").as_string()), e.at("keyword").as_string(),
                                           e.at("message").as_string(), e.at("schema_path").as_string()});
    }
    return r;
}

}  // namespace modelgate
