#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "modelgate/json.hpp"
#include "modelgate/regex.hpp"

namespace modelgate {

enum class CompileErrorKind { DanglingRef, Cycle, UnsupportedKeyword, InconsistentBounds, MalformedKeyword };

const char* to_string(CompileErrorKind k);

struct CompileIssue {
    CompileErrorKind kind;
    std::string path;  // JSON pointer into the schema document
    std::string message;
};

class CompileError : public std::runtime_error {
  public:
    explicit CompileError(std::vector<CompileIssue> issues);
    const std::vector<CompileIssue>& issues() const { return issues_; }

  private:
    std::vector<CompileIssue> issues_;
};

enum TypeMask : unsigned {
    kTypeNull = 1u << 0,
    kTypeBoolean = 1u << 1,
    kTypeInteger = 1u << 2,
    kTypeNumber = 1u << 3,
    kTypeString = 1u << 4,
    kTypeArray = 1u << 5,
    kTypeObject = 1u << 6,
};

/// One compiled schema node. Child pointers are owned by the CompiledSchema.
struct SchemaRule {
    std::string location;  // JSON pointer of this node in the schema document
    std::optional<bool> constant;  // boolean schema `true` / `false`

    std::optional<unsigned> types;
    std::vector<std::pair<std::string, const SchemaRule*>> properties;
    std::vector<std::string> required;
    std::optional<bool> additional_properties;
    const SchemaRule* items = nullptr;
    std::optional<std::vector<Value>> enum_values;
    std::optional<Value> const_value;
    std::optional<Decimal> minimum, maximum, exclusive_minimum, exclusive_maximum;
    std::optional<std::size_t> min_length, max_length, min_items, max_items;
    std::optional<Pattern> pattern;
    std::optional<Value> default_value;
    std::vector<const SchemaRule*> all_of, any_of, one_of;
    const SchemaRule* ref = nullptr;
    std::string ref_target;
    std::optional<std::string> format;
};

struct CompileOptions {
    /// Unsupported keywords become warnings instead of errors.
    bool lenient = false;
};

struct ValidationError {
    PathExpr instance_path;
    std::string keyword;
    std::string message;
    std::string schema_path;
};

struct ValidationReport {
    bool pass = true;
    std::vector<ValidationError> errors;

    Value to_json() const;
    static ValidationReport from_json(const Value& v);
};

struct DefaultEntry {
    PathExpr path;  // property path pattern; `*` stands for any array element
    Value value;
    bool on_required = false;  // default attached to a mandatory member
    std::string schema_path;
};

/// Immutable compiled schema; cheap to copy and safe to share across threads.
class CompiledSchema {
  public:
    const SchemaRule& root() const;
    const std::vector<std::string>& warnings() const;
    const Value& source() const;

    ValidationReport validate(const Value& instance) const;
    ValidationReport validate(const Document& instance) const { return validate(instance.root); }
    std::vector<DefaultEntry> list_defaults() const;

    struct Impl;

  private:
    explicit CompiledSchema(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<const Impl> impl_;
    friend CompiledSchema compile_schema(const Document&, const CompileOptions&);
};

/// Compiles the supported keyword subset. All internal `$ref`s are resolved
/// here; dangling refs, ref cycles, inconsistent bounds and (unless lenient)
/// unsupported keywords throw CompileError listing every offending location.
CompiledSchema compile_schema(const Document& schema_doc, const CompileOptions& options = {});

/// RFC 3339 `date-time` check used by the `format` keyword.
bool is_rfc3339_date_time(std::string_view s);

}  // namespace modelgate
