#include <set>

#include "modelgate/semantics.hpp"

namespace modelgate {

namespace detail {
std::string_view default_units_text();
}

UnitTable UnitTable::default_table() {
    static const UnitTable table = load_unit_table(parse_document(detail::default_units_text(), "units.json"));
    return table;
}

UnitTable load_unit_table(const Value& root) {
    if (!root.is_object()) throw UnitTableError("unit table must be an object of dimensions");
    UnitTable t;
    std::set<std::string> dims;
    for (const auto& [dim, spec] : root.as_object()) {
        if (!dims.insert(dim).second) throw UnitTableError("duplicate dimension '" + dim + "'");
        if (!spec.is_object()) throw UnitTableError("dimension '" + dim + "' must be an object");
        const Value* units = spec.find("units");
        if (!units || !units->is_object()) throw UnitTableError("dimension '" + dim + "' lacks a units object");
        std::vector<std::string> bases;
        for (const auto& [sym, scale] : units->as_object()) {
            if (sym.empty()) throw UnitTableError("empty unit symbol in '" + dim + "'");
            if (!scale.is_number() || scale.as_number().sign() <= 0) {
                throw UnitTableError("unit '" + sym + "' needs a positive scale");
            }
            if (!t.entries_.emplace(sym, UnitEntry{dim, scale.as_number()}).second) {
                throw UnitTableError("duplicate unit symbol '" + sym + "'");
            }
            if (scale.as_number() == Decimal(1)) bases.push_back(sym);
        }
        if (bases.empty()) throw UnitTableError("dimension '" + dim + "' has no base unit (scale 1)");
        if (bases.size() > 1) {
            throw UnitTableError("dimension '" + dim + "' has several base units: " + bases[0] + ", " + bases[1]);
        }
        if (const Value* b = spec.find("base")) {
            if (!b->is_string() || b->as_string() != bases[0]) {
                throw UnitTableError("dimension '" + dim + "' declares a base that is not its scale-1 unit");
            }
        }
        t.bases_[dim] = bases[0];
    }
    return t;
}

const UnitEntry* UnitTable::find(const std::string& symbol) const {
    auto it = entries_.find(symbol);
    return it == entries_.end() ? nullptr : &it->second;
}

const UnitEntry& UnitTable::at(const std::string& symbol) const {
    if (const auto* e = find(symbol)) return *e;
    throw UnknownUnitError(symbol);
}

const std::string& UnitTable::base_of(const std::string& dimension) const {
    auto it = bases_.find(dimension);
    if (it == bases_.end()) throw UnitTableError("unknown dimension '" + dimension + "'");
    return it->second;
}

std::vector<std::string> UnitTable::dimensions() const {
    std::vector<std::string> out;
    for (const auto& [d, b] : bases_) out.push_back(d);
    return out;
}

std::vector<std::string> UnitTable::symbols_of(const std::string& dimension) const {
    std::vector<std::string> out;
    for (const auto& [s, e] : entries_) {
        if (e.dimension == dimension) out.push_back(s);
    }
    return out;
}

Quantity UnitTable::normalize(const Quantity& q) const {
    const auto& e = at(q.unit);
    return {q.value * e.scale_to_base, base_of(e.dimension)};
}

Quantity UnitTable::convert(const Quantity& q, const std::string& unit) const {
    const auto& from = at(q.unit);
    const auto& to = at(unit);
    if (from.dimension != to.dimension) {
        throw UnitTableError("cannot convert " + from.dimension + " to " + to.dimension);
    }
    return {q.value * from.scale_to_base / to.scale_to_base, unit};
}

Value UnitTable::to_json() const {
    Value out = Value::empty_object();
    for (const auto& [dim, base] : bases_) {
        Value units = Value::empty_object();
        for (const auto& sym : symbols_of(dim)) units.set(sym, entries_.at(sym).scale_to_base);
        out.set(dim, Value::object({{"base", base}, {"units", std::move(units)}}));
    }
    return out;
}

}  // namespace modelgate
