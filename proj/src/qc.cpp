#include "modelgate/qc.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace modelgate {

namespace detail {
std::string_view default_registry_text();
}

const char* to_string(ModelKind k) { return k == ModelKind::IM ? "IM" : "DM"; }

ModelKind model_kind_from(std::string_view s) {
    if (s == "IM") return ModelKind::IM;
    if (s == "DM") return ModelKind::DM;
    throw DomainError("invalid_kind", "model kind must be IM or DM, got '" + std::string(s) + "'");
}

const char* to_string(DefectStatus s) {
    switch (s) {
        case DefectStatus::Open: return "open";
        case DefectStatus::Resolved: return "resolved";
        case DefectStatus::Rejected: return "rejected";
    }
    return "?";
}

namespace {

DefectStatus defect_status_from(const std::string& s) {
    if (s == "open") return DefectStatus::Open;
    if (s == "resolved") return DefectStatus::Resolved;
    if (s == "rejected") return DefectStatus::Rejected;
    throw DomainError("invalid_status", "unknown defect status '" + s + "'");
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

// ------------------------------------------------------------- registry

Registry load_registry(const Value& root) {
    if (!root.is_array()) throw RegistryError("registry must be a JSON array");
    Registry r;
    std::set<std::string> ids;
    for (const auto& item : root.as_array()) {
        if (!item.is_object()) throw RegistryError("registry entries must be objects");
        QualityCharacteristic qc;
        qc.id = item.get_string("id");
        if (qc.id.empty()) throw RegistryError("registry entry without id");
        if (!ids.insert(qc.id).second) throw RegistryError("duplicate QC id '" + qc.id + "'");
        qc.name = item.get_string("name", qc.id);
        qc.question = item.get_string("question");
        qc.notes = item.get_string("notes");
        const std::string origin = item.get_string("origin", "literature");
        if (origin == "literature") {
            qc.origin = QcOrigin::Literature;
        } else if (origin == "observation") {
            qc.origin = QcOrigin::Observation;
        } else {
            throw RegistryError("QC '" + qc.id + "': origin must be literature or observation");
        }
        const Value* applies = item.find("applies_to");
        if (!applies || !applies->is_array() || applies->as_array().empty()) {
            throw RegistryError("QC '" + qc.id + "': applies_to must be a non-empty array");
        }
        bool im = false;
        for (const auto& k : applies->as_array()) {
            if (!k.is_string()) throw RegistryError("QC '" + qc.id + "': applies_to holds non-strings");
            if (k.as_string() == "IM") {
                im = true;
            } else if (k.as_string() == "DM") {
                qc.applies_to_dm = true;
            } else {
                throw RegistryError("QC '" + qc.id + "': unknown model kind '" + k.as_string() + "'");
            }
        }
        if (!im) throw RegistryError("QC '" + qc.id + "' must apply to IM");
        r.qcs_.push_back(std::move(qc));
    }
    return r;
}

const Registry& default_registry() {
    static const Registry r = load_registry(parse_document(detail::default_registry_text(), "registry.json"));
    return r;
}

const QualityCharacteristic* Registry::find(std::string_view id) const {
    auto it = std::find_if(qcs_.begin(), qcs_.end(), [&](const auto& q) { return q.id == id; });
    return it == qcs_.end() ? nullptr : &*it;
}

Value Registry::to_json() const {
    Value out = Value::empty_array();
    for (const auto& q : qcs_) {
        Value applies = Value::array({"IM"});
        if (q.applies_to_dm) applies.push_back("DM");
        out.push_back(Value::object({{"id", q.id},
                                     {"name", q.name},
                                     {"question", q.question},
                                     {"applies_to", std::move(applies)},
                                     {"origin", q.origin == QcOrigin::Literature ? "literature" : "observation"},
                                     {"notes", q.notes}}));
    }
    return out;
}

// ------------------------------------------------------------ selection

bool QCSelection::includes(std::string_view qc_id) const {
    return std::find(included.begin(), included.end(), qc_id) != included.end();
}

Value QCSelection::to_json() const {
    Value inc = Value::empty_array();
    for (const auto& id : included) inc.push_back(id);
    Value exc = Value::empty_array();
    for (const auto& e : excluded) exc.push_back(Value::object({{"qc_id", e.qc_id}, {"rationale", e.rationale}}));
    return Value::object({{"included", std::move(inc)}, {"excluded", std::move(exc)}});
}

QCSelection QCSelection::from_json(const Value& v) {
    QCSelection s;
    for (const auto& id : v.at("included").as_array()) s.included.push_back(id.as_string());
    for (const auto& e : v.at("excluded").as_array()) {
        s.excluded.push_back({e.at("qc_id").as_string(), e.at("rationale").as_string()});
    }
    return s;
}

QCSelection select_qcs(const Registry& registry, const std::vector<Exclusion>& exclusions) {
    QCSelection s;
    std::set<std::string> excluded;
    for (const auto& e : exclusions) {
        if (!registry.find(e.qc_id)) throw DomainError("unknown_qc", "unknown QC '" + e.qc_id + "'");
        if (e.rationale.find_first_not_of(" \t\r\n") == std::string::npos) {
            throw DomainError("missing_rationale", "excluding '" + e.qc_id + "' needs a rationale");
        }
        if (!excluded.insert(e.qc_id).second) {
            throw DomainError("duplicate_exclusion", "QC '" + e.qc_id + "' excluded twice");
        }
        s.excluded.push_back(e);
    }
    for (const auto& q : registry.all()) {
        if (!excluded.count(q.id)) s.included.push_back(q.id);
    }
    return s;
}

void check_selection(const Registry& registry, const QCSelection& s) {
    std::multiset<std::string> seen(s.included.begin(), s.included.end());
    for (const auto& e : s.excluded) {
        if (e.rationale.empty()) throw DomainError("invalid_selection", "exclusion of '" + e.qc_id + "' lacks a rationale");
        seen.insert(e.qc_id);
    }
    std::multiset<std::string> expected;
    for (const auto& q : registry.all()) expected.insert(q.id);
    if (seen != expected) throw DomainError("invalid_selection", "selection does not partition the registry");
}

// -------------------------------------------------------------- defects

Value Defect::to_json() const {
    Value v = Value::object({{"id", id},
                             {"qc_id", qc_id},
                             {"model_id", model_id},
                             {"locator", locator},
                             {"description", description},
                             {"status", to_string(status)},
                             {"created_at", created_at}});
    v.set("resolved_in_model_version", resolved_in_model_version ? Value(*resolved_in_model_version) : Value());
    v.set("resolution_note", resolution_note);
    return v;
}

Defect Defect::from_json(const Value& v) {
    Defect d;
    d.id = v.get_string("id");
    d.qc_id = v.at("qc_id").as_string();
    d.model_id = v.at("model_id").as_string();
    d.locator = v.get_string("locator");
    d.description = v.get_string("description");
    d.status = defect_status_from(v.get_string("status", "open"));
    d.created_at = v.get_string("created_at");
    if (const Value* r = v.find("resolved_in_model_version"); r && r->is_number()) {
        d.resolved_in_model_version = r->as_number().to_int64();
    }
    d.resolution_note = v.get_string("resolution_note");
    return d;
}

const Defect& QualityMatrix::open_defect(Defect draft, const Registry& registry, const QCSelection& selection,
                                         const ModelInfo& model) {
    if (!registry.find(draft.qc_id)) throw DomainError("unknown_qc", "unknown QC '" + draft.qc_id + "'");
    if (!selection.includes(draft.qc_id)) {
        throw DomainError("qc_not_selected", "QC '" + draft.qc_id + "' is not part of the selection");
    }
    if (model.kind == ModelKind::DM && !draft.locator.empty()) {
        try {
            parse_path(draft.locator);
        } catch (const PathSyntaxError& e) {
            throw DomainError("bad_locator", "data-model locator must be a path: " + std::string(e.what()));
        }
    }
    draft.id = "D" + std::to_string(next_id_++);
    draft.model_id = model.id;
    draft.status = DefectStatus::Open;
    draft.resolved_in_model_version.reset();
    draft.resolution_note.clear();
    defects_.push_back(std::move(draft));
    return defects_.back();
}

Defect& QualityMatrix::mutable_find(const std::string& id) {
    auto it = std::find_if(defects_.begin(), defects_.end(), [&](const Defect& d) { return d.id == id; });
    if (it == defects_.end()) throw DomainError("not_found", "no defect '" + id + "'");
    return *it;
}

const Defect* QualityMatrix::find(std::string_view id) const {
    auto it = std::find_if(defects_.begin(), defects_.end(), [&](const Defect& d) { return d.id == id; });
    return it == defects_.end() ? nullptr : &*it;
}

const Defect& QualityMatrix::resolve_defect(const std::string& id, std::int64_t model_version, std::string note) {
    Defect& d = mutable_find(id);
    if (d.status != DefectStatus::Open) {
        throw DomainError("illegal_transition", "defect " + id + " is " + to_string(d.status) + ", not open");
    }
    d.status = DefectStatus::Resolved;
    d.resolved_in_model_version = model_version;
    d.resolution_note = std::move(note);
    return d;
}

const Defect& QualityMatrix::reject_defect(const std::string& id, std::string reason) {
    Defect& d = mutable_find(id);
    if (d.status != DefectStatus::Open) {
        throw DomainError("illegal_transition", "defect " + id + " is " + to_string(d.status) + ", not open");
    }
    d.status = DefectStatus::Rejected;
    d.resolution_note = std::move(reason);
    return d;
}

void QualityMatrix::add_rating(QCRating r, const Registry& registry) {
    if (!registry.find(r.qc_id)) throw DomainError("unknown_qc", "unknown QC '" + r.qc_id + "'");
    if (r.rating < 1 || r.rating > 5) throw DomainError("invalid_rating", "rating must be between 1 and 5");
    ratings_.push_back(std::move(r));
}

std::size_t QualityMatrix::open_count(std::string_view model_id) const {
    return static_cast<std::size_t>(std::count_if(defects_.begin(), defects_.end(), [&](const Defect& d) {
        return d.model_id == model_id && d.status == DefectStatus::Open;
    }));
}

std::string QualityMatrix::to_csv(const Registry& registry, const QCSelection& selection,
                                  const std::vector<ModelInfo>& models) const {
    std::ostringstream out;
    out << "qc";
    for (const auto& m : models) out << ',' << csv_field(m.id);
    out << '\n';
    for (const auto& q : registry.all()) {
        out << csv_field(q.id);
        for (const auto& m : models) {
            out << ',';
            if (!selection.includes(q.id)) {
                out << '-';
            } else if (!q.applies_to(m.kind)) {
                out << "n/a";
            } else {
                std::size_t open = 0, resolved = 0;
                for (const auto& d : defects_) {
                    if (d.qc_id != q.id || d.model_id != m.id) continue;
                    open += d.status == DefectStatus::Open;
                    resolved += d.status == DefectStatus::Resolved;
                }
                out << open << '/' << resolved;
            }
        }
        out << '\n';
    }
    return out.str();
}

Value QualityMatrix::to_json() const {
    Value defects = Value::empty_array();
    for (const auto& d : defects_) defects.push_back(d.to_json());
    Value ratings = Value::empty_array();
    for (const auto& r : ratings_) {
        ratings.push_back(
            Value::object({{"qc_id", r.qc_id}, {"model_id", r.model_id}, {"rating", r.rating}, {"rater", r.rater}}));
    }
    return Value::object({{"next_id", next_id_}, {"defects", std::move(defects)}, {"ratings", std::move(ratings)}});
}

QualityMatrix QualityMatrix::from_json(const Value& v) {
    QualityMatrix m;
    m.next_id_ = v.at("next_id").as_number().to_int64().value_or(1);
    for (const auto& d : v.at("defects").as_array()) m.defects_.push_back(Defect::from_json(d));
    for (const auto& r : v.at("ratings").as_array()) {
        m.ratings_.push_back({r.at("qc_id").as_string(), r.at("model_id").as_string(),
                              static_cast<int>(r.at("rating").as_number().to_int64().value_or(0)),
                              r.get_string("rater")});
    }
    return m;
}

GateVerdict gate_quality(const QualityMatrix& matrix, const QCSelection& selection, const Registry& registry,
                         ModelKind kind, std::string_view model_id) {
    GateVerdict v;
    for (const auto& q : registry.all()) {
        if (!selection.includes(q.id) || !q.applies_to(kind)) continue;
        const bool open = std::any_of(matrix.defects().begin(), matrix.defects().end(), [&](const Defect& d) {
            return d.qc_id == q.id && d.model_id == model_id && d.status == DefectStatus::Open;
        });
        if (open) v.blocking.push_back(q.id);
    }
    v.pass = v.blocking.empty();
    return v;
}

}  // namespace modelgate
