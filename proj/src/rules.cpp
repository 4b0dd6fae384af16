#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

#include "modelgate/semantics.hpp"

namespace modelgate {

const char* to_string(RuleOp op) {
    switch (op) {
        case RuleOp::Within: return "within";
        case RuleOp::LessEqual: return "<=";
        case RuleOp::GreaterEqual: return ">=";
        case RuleOp::Equal: return "==";
        case RuleOp::InSet: return "in_set";
    }
    return "?";
}

const char* to_string(Quantifier q) { return q == Quantifier::ForAll ? "forall" : "exists"; }

const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::Pass: return "PASS";
        case Outcome::Fail: return "FAIL";
        case Outcome::Inapplicable: return "INAPPLICABLE";
    }
    return "?";
}

RuleError::RuleError(std::string rule_id, std::string path, const std::string& message)
    : std::runtime_error(path + ": " + message), rule_id_(std::move(rule_id)), path_(std::move(path)) {}

namespace {

// ---------------------------------------------------------------- parsing

class RuleParser {
  public:
    RuleParser(const UnitTable& table, std::string id, std::string at) : table_(table), id_(std::move(id)), at_(std::move(at)) {}

    [[noreturn]] void fail(const std::string& where, const std::string& msg) const {
        throw RuleError(id_, at_ + where, msg);
    }

    PathExpr path(const Value& v, const std::string& where) const {
        if (!v.is_string()) fail(where, "path must be a string");
        try {
            return parse_path(v.as_string());
        } catch (const PathSyntaxError& e) {
            fail(where, std::string("bad path: ") + e.what());
        }
    }

    UnitSource unit(const Value& v, const std::string& where) const {
        UnitSource u;
        if (v.is_string()) {
            if (!table_.contains(v.as_string())) fail(where, "unknown unit '" + v.as_string() + "'");
            u.symbol = v.as_string();
        } else if (v.is_object() && v.find("path") && v.as_object().size() == 1) {
            u.path = path(v.at("path"), where + "/path");
        } else {
            fail(where, "unit must be a symbol or {\"path\": ...}");
        }
        return u;
    }

    Operand operand(const Value& v, const std::string& where) const {
        if (!v.is_object()) fail(where, "operand must be an object with 'path' or 'value'");
        Operand o;
        for (const auto& [name, member] : v.as_object()) {
            if (name == "path") {
                o.path = path(member, where + "/path");
            } else if (name == "value") {
                o.literal = member;
            } else if (name == "unit") {
                o.unit = unit(member, where + "/unit");
            } else {
                fail(where + "/" + escape_path_token(name), "unknown operand member");
            }
        }
        if (o.path.has_value() == o.literal.has_value()) fail(where, "operand needs exactly one of 'path' or 'value'");
        return o;
    }

  private:
    const UnitTable& table_;
    std::string id_;
    std::string at_;
};

std::size_t max_wildcards(const SemanticRule& r) {
    std::size_t n = 0;
    auto visit_unit = [&](const std::optional<UnitSource>& u) {
        if (u && u->path) n = std::max(n, u->path->wildcard_count());
    };
    for (const auto* o : {&r.lower, &r.upper, &r.rhs}) {
        if (!*o) continue;
        if ((*o)->path) n = std::max(n, (*o)->path->wildcard_count());
        visit_unit((*o)->unit);
    }
    visit_unit(r.unit);
    return n;
}

}  // namespace

SemanticRuleSet parse_rules(const Value& root, const UnitTable& table) {
    if (!root.is_array()) throw RuleError("", "", "rule file must be a JSON array");
    SemanticRuleSet set;
    std::set<std::string> ids;
    const auto& items = root.as_array();
    for (std::size_t i = 0; i < items.size(); ++i) {
        const std::string at = "/" + std::to_string(i);
        const Value& obj = items[i];
        if (!obj.is_object()) throw RuleError("", at, "rule must be an object");
        const Value* id = obj.find("id");
        if (!id || !id->is_string() || id->as_string().empty()) throw RuleError("", at + "/id", "rule needs a non-empty id");
        RuleParser p(table, id->as_string(), at);
        SemanticRule r;
        r.id = id->as_string();
        if (!ids.insert(r.id).second) p.fail("/id", "duplicate rule id '" + r.id + "'");

        bool has_subject = false, has_op = false;
        for (const auto& [name, v] : obj.as_object()) {
            const std::string where = "/" + escape_path_token(name);
            if (name == "id") continue;
            if (name == "description") {
                if (!v.is_string()) p.fail(where, "description must be a string");
                r.description = v.as_string();
            } else if (name == "subject") {
                r.subject = p.path(v, where);
                has_subject = true;
            } else if (name == "quantifier") {
                const std::string q = v.is_string() ? v.as_string() : "";
                if (q == "forall" || q == "FORALL") {
                    r.quantifier = Quantifier::ForAll;
                } else if (q == "exists" || q == "EXISTS") {
                    r.quantifier = Quantifier::Exists;
                } else {
                    p.fail(where, "quantifier must be forall or exists");
                }
            } else if (name == "op") {
                static const std::map<std::string, RuleOp> ops = {{"within", RuleOp::Within},
                                                                  {"<=", RuleOp::LessEqual},
                                                                  {">=", RuleOp::GreaterEqual},
                                                                  {"==", RuleOp::Equal},
                                                                  {"in_set", RuleOp::InSet}};
                auto it = v.is_string() ? ops.find(v.as_string()) : ops.end();
                if (it == ops.end()) p.fail(where, "op must be one of within, <=, >=, ==, in_set");
                r.op = it->second;
                has_op = true;
            } else if (name == "lower") {
                r.lower = p.operand(v, where);
            } else if (name == "upper") {
                r.upper = p.operand(v, where);
            } else if (name == "rhs") {
                r.rhs = p.operand(v, where);
            } else if (name == "unit") {
                r.unit = p.unit(v, where);
            } else {
                p.fail(where, "unknown rule member '" + name + "'");
            }
        }
        if (!has_subject) p.fail("", "rule needs a subject");
        if (!has_op) p.fail("", "rule needs an op");
        if (r.op == RuleOp::Within) {
            if (!r.lower || !r.upper) p.fail("", "'within' needs both lower and upper");
            if (r.rhs) p.fail("/rhs", "'within' takes lower and upper, not rhs");
        } else {
            if (!r.rhs) p.fail("", std::string("'") + to_string(r.op) + "' needs rhs");
            if (r.lower || r.upper) p.fail("", std::string("'") + to_string(r.op) + "' takes rhs only");
        }
        if (r.op == RuleOp::InSet && r.rhs->literal && !r.rhs->literal->is_array()) {
            p.fail("/rhs/value", "in_set needs an array");
        }
        if (max_wildcards(r) > r.subject.wildcard_count()) {
            p.fail("", "bound or unit path has more wildcards than the subject");
        }
        // Literal numeric operands with fixed units must share the subject's dimension when both are fixed.
        if (r.unit && r.unit->symbol) {
            const auto& dim = table.at(*r.unit->symbol).dimension;
            for (const auto* o : {&r.lower, &r.upper, &r.rhs}) {
                if (*o && (*o)->unit && (*o)->unit->symbol && table.at(*(*o)->unit->symbol).dimension != dim) {
                    p.fail("", "operand unit dimension differs from subject unit dimension");
                }
            }
        }
        set.rules.push_back(std::move(r));
    }
    return set;
}

// ------------------------------------------------------------- evaluation

namespace {

// Replaces the wildcards of `p`, left to right, with `binding`.
PathExpr bind(const PathExpr& p, const std::vector<std::size_t>& binding) {
    std::vector<PathSegment> segs;
    std::size_t k = 0;
    for (const auto& s : p.segments()) {
        if (std::holds_alternative<Wildcard>(s)) {
            segs.emplace_back(binding.at(k++));
        } else {
            segs.push_back(s);
        }
    }
    return PathExpr(std::move(segs));
}

std::vector<std::size_t> wildcard_binding(const PathExpr& query, const PathExpr& concrete) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < query.size(); ++i) {
        if (std::holds_alternative<Wildcard>(query.segments()[i])) {
            out.push_back(std::get<std::size_t>(concrete.segments()[i]));
        }
    }
    return out;
}

struct Resolved {
    Value value;
    std::optional<std::string> unit;  // raw symbol
};

struct Problem {
    std::string note;
};

// Unit symbol from a UnitSource, read from `doc` when it is a path.
std::variant<std::optional<std::string>, Problem> resolve_unit(const std::optional<UnitSource>& src, const Value& doc,
                                                               const std::vector<std::size_t>& binding) {
    if (!src) return std::optional<std::string>{};
    if (src->symbol) return src->symbol;
    const auto matches = resolve_path(doc, bind(*src->path, binding));
    if (matches.size() != 1) return Problem{"ambiguous/missing unit at " + bind(*src->path, binding).to_string()};
    if (!matches[0].value->is_string()) return Problem{"unit field is not a string"};
    return std::optional<std::string>{matches[0].value->as_string()};
}

std::variant<Resolved, Problem> resolve_operand(const Operand& o, const Value& request,
                                                const std::vector<std::size_t>& binding) {
    Resolved r;
    if (o.literal) {
        r.value = *o.literal;
    } else {
        const auto p = bind(*o.path, binding);
        const auto matches = resolve_path(request, p);
        if (matches.size() != 1) return Problem{"ambiguous/missing bound at " + p.to_string()};
        r.value = *matches[0].value;
    }
    auto u = resolve_unit(o.unit, request, binding);
    if (auto* pr = std::get_if<Problem>(&u)) return *pr;
    r.unit = std::get<std::optional<std::string>>(u);
    return r;
}

// A comparable scalar: a normalized quantity, a bare number, or any other value.
struct Norm {
    Value value;
    std::optional<std::string> unit;
    std::string dimension;
};

std::variant<Norm, Problem> normalize_value(const Value& v, const std::optional<std::string>& unit,
                                            const UnitTable& table) {
    if (!unit) return Norm{v, std::nullopt, {}};
    const UnitEntry* e = table.find(*unit);
    if (!e) return Problem{"unknown unit '" + *unit + "'"};
    if (!v.is_number()) return Problem{"value with unit '" + *unit + "' is not a number"};
    const auto q = table.normalize({v.as_number(), *unit});
    return Norm{Value(q.value), q.unit, e->dimension};
}

Observed observed_of(const Norm& n) { return {n.value, n.unit}; }

// Compares a subject against one bound; returns a failure note or nothing.
std::optional<std::string> compare(const Norm& subject, const Norm& bound, RuleOp op, const std::string& role) {
    if (subject.unit.has_value() != bound.unit.has_value()) {
        return std::string("unit missing on ") + (subject.unit ? role : std::string("subject"));
    }
    if (subject.unit && subject.dimension != bound.dimension) {
        return "dimension mismatch: " + subject.dimension + " vs " + bound.dimension;
    }
    if (op == RuleOp::Equal) {
        if (json_equal(subject.value, bound.value)) return std::nullopt;
        return "not equal to " + role;
    }
    if (!subject.value.is_number() || !bound.value.is_number()) return std::string("non-numeric comparison");
    const auto& a = subject.value.as_number();
    const auto& b = bound.value.as_number();
    const bool at_most = role == "upper" || op == RuleOp::LessEqual;
    if (at_most ? a <= b : a >= b) return std::nullopt;
    return std::string(at_most ? "above " : "below ") + role;
}

void evaluate_rule(const SemanticRule& rule, const Value& request, const Value& response, const UnitTable& table,
                   std::vector<Finding>& out) {
    const auto matches = resolve_path(response, rule.subject);
    if (matches.empty()) {
        Finding f;
        f.rule_id = rule.id;
        f.subject_path = rule.subject.to_string();
        if (rule.quantifier == Quantifier::ForAll) {
            f.outcome = Outcome::Inapplicable;
            f.note = "vacuous: no subject matches";
        } else {
            f.outcome = Outcome::Fail;
            f.note = "no subject matches";
        }
        out.push_back(std::move(f));
        return;
    }
    const std::size_t first = out.size();
    for (const auto& m : matches) {
        Finding f;
        f.rule_id = rule.id;
        f.subject_path = m.path.to_string();
        f.outcome = Outcome::Fail;
        const auto binding = wildcard_binding(rule.subject, m.path);

        auto unit = resolve_unit(rule.unit, response, binding);
        if (auto* pr = std::get_if<Problem>(&unit)) {
            f.observed = Observed{*m.value, std::nullopt};
            f.note = pr->note;
            out.push_back(std::move(f));
            continue;
        }
        auto subj = normalize_value(*m.value, std::get<std::optional<std::string>>(unit), table);
        if (auto* pr = std::get_if<Problem>(&subj)) {
            f.observed = Observed{*m.value, std::get<std::optional<std::string>>(unit)};
            f.note = pr->note;
            out.push_back(std::move(f));
            continue;
        }
        const Norm& s = std::get<Norm>(subj);
        f.observed = observed_of(s);

        std::vector<std::pair<std::string, const Operand*>> operands;
        if (rule.lower) operands.emplace_back("lower", &*rule.lower);
        if (rule.upper) operands.emplace_back("upper", &*rule.upper);
        if (rule.rhs) operands.emplace_back("rhs", &*rule.rhs);

        std::vector<std::string> failures;
        for (const auto& [role, op] : operands) {
            auto resolved = resolve_operand(*op, request, binding);
            if (auto* pr = std::get_if<Problem>(&resolved)) {
                failures.push_back(pr->note);
                continue;
            }
            const auto& rv = std::get<Resolved>(resolved);
            if (rule.op == RuleOp::InSet) {
                if (!rv.value.is_array()) {
                    failures.push_back("in_set bound is not an array");
                    continue;
                }
                f.bounds.emplace_back(role, Observed{rv.value, rv.unit});
                bool found = false;
                std::string last_problem;
                for (const auto& candidate : rv.value.as_array()) {
                    auto cn = normalize_value(candidate, rv.unit, table);
                    if (auto* pr = std::get_if<Problem>(&cn)) {
                        last_problem = pr->note;
                        continue;
                    }
                    auto note = compare(s, std::get<Norm>(cn), RuleOp::Equal, role);
                    if (!note) {
                        found = true;
                        break;
                    }
                    if (note->rfind("not equal", 0) != 0) last_problem = *note;
                }
                if (!found) failures.push_back(last_problem.empty() ? "not in set" : "not in set (" + last_problem + ")");
                continue;
            }
            auto bn = normalize_value(rv.value, rv.unit, table);
            if (auto* pr = std::get_if<Problem>(&bn)) {
                f.bounds.emplace_back(role, Observed{rv.value, rv.unit});
                failures.push_back(pr->note);
                continue;
            }
            f.bounds.emplace_back(role, observed_of(std::get<Norm>(bn)));
            if (auto note = compare(s, std::get<Norm>(bn), rule.op, role)) failures.push_back(*note);
        }
        if (failures.empty()) {
            f.outcome = Outcome::Pass;
        } else {
            for (std::size_t i = 0; i < failures.size(); ++i) f.note += (i ? "; " : "") + failures[i];
        }
        out.push_back(std::move(f));
    }
    if (rule.quantifier == Quantifier::Exists) {
        const auto witness = std::find_if(out.begin() + static_cast<long>(first), out.end(),
                                          [](const Finding& f) { return f.outcome == Outcome::Pass; });
        if (witness != out.end()) {
            const std::string w = witness->subject_path;
            for (auto it = out.begin() + static_cast<long>(first); it != out.end(); ++it) {
                if (it->outcome == Outcome::Fail) {
                    it->outcome = Outcome::Inapplicable;
                    it->note += (it->note.empty() ? "" : "; ") + std::string("exists: satisfied at ") + w;
                }
            }
        }
    }
}

Value observed_json(const Observed& o) {
    Value v = Value::object({{"value", o.value}});
    if (o.unit) v.set("unit", *o.unit);
    return v;
}

Observed observed_from(const Value& v) {
    Observed o;
    o.value = v.at("value");
    if (const Value* u = v.find("unit")) o.unit = u->as_string();
    return o;
}

}  // namespace

SemanticReport evaluate_rules(const SemanticRuleSet& rules, const Value& request, const Value& response,
                              const UnitTable& table) {
    SemanticReport report;
    for (const auto& r : rules.rules) evaluate_rule(r, request, response, table, report.findings);
    report.pass = std::none_of(report.findings.begin(), report.findings.end(),
                               [](const Finding& f) { return f.outcome == Outcome::Fail; });
    return report;
}

Value SemanticReport::to_json() const {
    Value list = Value::empty_array();
    for (const auto& f : findings) {
        Value item = Value::object({{"rule_id", f.rule_id}, {"subject_path", f.subject_path}});
        item.set("observed", f.observed ? observed_json(*f.observed) : Value());
        Value bounds = Value::empty_object();
        for (const auto& [role, o] : f.bounds) bounds.set(role, observed_json(o));
        item.set("bounds", std::move(bounds));
        item.set("outcome", to_string(f.outcome));
        item.set("note", f.note);
        list.push_back(std::move(item));
    }
    return Value::object({{"verdict", pass ? "PASS" : "FAIL"}, {"findings", std::move(list)}});
}

SemanticReport SemanticReport::from_json(const Value& v) {
    SemanticReport r;
    r.pass = v.at("verdict").as_string() == "PASS";
    for (const auto& item : v.at("findings").as_array()) {
        Finding f;
        f.rule_id = item.at("rule_id").as_string();
        f.subject_path = item.at("subject_path").as_string();
        if (const Value* o = item.find("observed"); o && !o->is_null()) f.observed = observed_from(*o);
        if (const Value* b = item.find("bounds")) {
            for (const auto& [role, o] : b->as_object()) f.bounds.emplace_back(role, observed_from(o));
        }
        const auto& outcome = item.at("outcome").as_string();
        f.outcome = outcome == "PASS" ? Outcome::Pass : outcome == "FAIL" ? Outcome::Fail : Outcome::Inapplicable;
        f.note = item.get_string("note");
        r.findings.push_back(std::move(f));
    }
    return r;
}

// ------------------------------------------------------------- uniqueness

UniquenessReport check_instance_uniqueness(const std::vector<Document>& instances, const PathExpr& id_path) {
    if (id_path.has_wildcard()) throw std::invalid_argument("id path must not contain wildcards");
    UniquenessReport report;
    // Keyed by canonical serialization so that 1 and 1.0 collide.
    std::map<std::string, std::size_t> seen;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const std::string name =
            instances[i].source_name.empty() ? "#" + std::to_string(i) : instances[i].source_name;
        const Value* id = lookup(instances[i].root, id_path);
        if (!id || id->is_null()) {
            report.missing.push_back(name);
            continue;
        }
        const std::string key = serialize(*id);
        auto [it, fresh] = seen.emplace(key, report.duplicates.size());
        if (fresh) report.duplicates.push_back({*id, {}});
        report.duplicates[it->second].instances.push_back(name);
    }
    std::erase_if(report.duplicates, [](const DuplicateId& d) { return d.instances.size() < 2; });
    report.pass = report.duplicates.empty() && report.missing.empty();
    return report;
}

Value UniquenessReport::to_json() const {
    Value dups = Value::empty_array();
    for (const auto& d : duplicates) {
        Value names = Value::empty_array();
        for (const auto& n : d.instances) names.push_back(n);
        dups.push_back(Value::object({{"id", d.id}, {"instances", std::move(names)}}));
    }
    Value miss = Value::empty_array();
    for (const auto& m : missing) miss.push_back(m);
    return Value::object(
        {{"verdict", pass ? "PASS" : "FAIL"}, {"duplicates", std::move(dups)}, {"missing", std::move(miss)}});
}

}  // namespace modelgate
