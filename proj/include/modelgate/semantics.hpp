#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "modelgate/json.hpp"

namespace modelgate {

// ---------------------------------------------------------------- units

class UnitTableError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class UnknownUnitError : public std::runtime_error {
  public:
    explicit UnknownUnitError(const std::string& symbol)
        : std::runtime_error("unknown unit '" + symbol + "'"), symbol_(symbol) {}
    const std::string& symbol() const { return symbol_; }

  private:
    std::string symbol_;
};

struct Quantity {
    Decimal value;
    std::string unit;
    friend bool operator==(const Quantity&, const Quantity&) = default;
};

struct UnitEntry {
    std::string dimension;
    Decimal scale_to_base;
};

class UnitTable {
  public:
    /// power, energy, time and currency with metric prefixes.
    static UnitTable default_table();

    const UnitEntry* find(const std::string& symbol) const;
    bool contains(const std::string& symbol) const { return find(symbol) != nullptr; }
    const UnitEntry& at(const std::string& symbol) const;
    const std::string& base_of(const std::string& dimension) const;
    std::vector<std::string> dimensions() const;
    std::vector<std::string> symbols_of(const std::string& dimension) const;

    Quantity normalize(const Quantity& q) const;
    /// Re-expresses `q` in `unit`; throws UnitTableError across dimensions.
    Quantity convert(const Quantity& q, const std::string& unit) const;

    /// {dimension: {base, units: {symbol: scale}}}
    Value to_json() const;

  private:
    friend UnitTable load_unit_table(const Value& root);
    std::map<std::string, UnitEntry> entries_;
    std::map<std::string, std::string> bases_;
};

UnitTable load_unit_table(const Value& root);
inline UnitTable load_unit_table(const Document& doc) { return load_unit_table(doc.root); }

// ---------------------------------------------------------------- rules

enum class RuleOp { Within, LessEqual, GreaterEqual, Equal, InSet };
enum class Quantifier { ForAll, Exists };

const char* to_string(RuleOp op);
const char* to_string(Quantifier q);

/// Fixed symbol, or a path to a field holding the symbol.
struct UnitSource {
    std::optional<std::string> symbol;
    std::optional<PathExpr> path;
};

/// A bound is read from the request (`path`) or given literally (`literal`).
struct Operand {
    std::optional<PathExpr> path;
    std::optional<Value> literal;
    std::optional<UnitSource> unit;
};

struct SemanticRule {
    std::string id;
    std::string description;
    PathExpr subject;
    Quantifier quantifier = Quantifier::ForAll;
    RuleOp op = RuleOp::Within;
    std::optional<Operand> lower;
    std::optional<Operand> upper;
    std::optional<Operand> rhs;
    std::optional<UnitSource> unit;
};

struct SemanticRuleSet {
    std::vector<SemanticRule> rules;
};

class RuleError : public std::runtime_error {
  public:
    RuleError(std::string rule_id, std::string path, const std::string& message);
    const std::string& rule_id() const { return rule_id_; }
    const std::string& path() const { return path_; }

  private:
    std::string rule_id_;
    std::string path_;
};

/// Array of rule objects with members id, description, subject, quantifier,
/// op, lower, upper, rhs and unit. Wildcards in bound and unit paths are
/// bound, left to right, to the indices matched by the subject's wildcards.
SemanticRuleSet parse_rules(const Value& root, const UnitTable& table);
inline SemanticRuleSet parse_rules(const Document& doc, const UnitTable& table) {
    return parse_rules(doc.root, table);
}

enum class Outcome { Pass, Fail, Inapplicable };
const char* to_string(Outcome o);

/// A value as observed, normalized to the base unit when a unit applies.
struct Observed {
    Value value;
    std::optional<std::string> unit;
};

struct Finding {
    std::string rule_id;
    std::string subject_path;
    std::optional<Observed> observed;
    std::vector<std::pair<std::string, Observed>> bounds;  // role -> value
    Outcome outcome = Outcome::Pass;
    std::string note;
};

struct SemanticReport {
    bool pass = true;
    std::vector<Finding> findings;

    Value to_json() const;
    static SemanticReport from_json(const Value& v);
};

SemanticReport evaluate_rules(const SemanticRuleSet& rules, const Value& request, const Value& response,
                              const UnitTable& table);
inline SemanticReport evaluate_rules(const SemanticRuleSet& rules, const Document& request,
                                     const Document& response, const UnitTable& table) {
    return evaluate_rules(rules, request.root, response.root, table);
}

// ----------------------------------------------------------- uniqueness

struct DuplicateId {
    Value id;
    std::vector<std::string> instances;
};

struct UniquenessReport {
    bool pass = true;
    std::vector<DuplicateId> duplicates;
    std::vector<std::string> missing;  // instances without an id

    Value to_json() const;
};

/// Instances are named by Document::source_name, or "#<index>" when unnamed.
/// Throws std::invalid_argument when `id_path` contains a wildcard.
UniquenessReport check_instance_uniqueness(const std::vector<Document>& instances, const PathExpr& id_path);

}  // namespace modelgate
