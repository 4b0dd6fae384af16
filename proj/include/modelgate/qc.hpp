#pragma once

#include <optional>
#include <string>
#include <vector>

#include "modelgate/errors.hpp"
#include "modelgate/json.hpp"

namespace modelgate {

enum class ModelKind { IM, DM };
const char* to_string(ModelKind k);
ModelKind model_kind_from(std::string_view s);  // throws DomainError

enum class QcOrigin { Literature, Observation };

struct QualityCharacteristic {
    std::string id;
    std::string name;
    std::string question;
    bool applies_to_dm = false;  // every QC applies to IMs
    QcOrigin origin = QcOrigin::Literature;
    std::string notes;

    bool applies_to(ModelKind k) const { return k == ModelKind::IM || applies_to_dm; }
};

class RegistryError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class Registry {
  public:
    const std::vector<QualityCharacteristic>& all() const { return qcs_; }
    const QualityCharacteristic* find(std::string_view id) const;
    std::size_t size() const { return qcs_.size(); }
    Value to_json() const;

  private:
    friend Registry load_registry(const Value& root);
    std::vector<QualityCharacteristic> qcs_;
};

/// JSON array of {id, name, question, applies_to: ["IM","DM"], origin, notes}.
Registry load_registry(const Value& root);
inline Registry load_registry(const Document& doc) { return load_registry(doc.root); }

/// The shipped 21-entry registry.
const Registry& default_registry();

// ------------------------------------------------------------ selection

struct Exclusion {
    std::string qc_id;
    std::string rationale;
};

struct QCSelection {
    std::vector<std::string> included;  // registry order
    std::vector<Exclusion> excluded;

    bool includes(std::string_view qc_id) const;
    Value to_json() const;
    static QCSelection from_json(const Value& v);
};

/// Throws DomainError "unknown_qc", "missing_rationale" or "duplicate_exclusion".
QCSelection select_qcs(const Registry& registry, const std::vector<Exclusion>& exclusions);

/// Throws DomainError "invalid_selection" unless `s` partitions the registry.
void check_selection(const Registry& registry, const QCSelection& s);

// -------------------------------------------------------------- defects

enum class DefectStatus { Open, Resolved, Rejected };
const char* to_string(DefectStatus s);

struct Defect {
    std::string id;
    std::string qc_id;
    std::string model_id;
    std::string locator;  // path for DMs, free text for IMs
    std::string description;
    DefectStatus status = DefectStatus::Open;
    std::string created_at;
    std::optional<std::int64_t> resolved_in_model_version;
    std::string resolution_note;

    Value to_json() const;
    static Defect from_json(const Value& v);
};

struct QCRating {
    std::string qc_id;
    std::string model_id;
    int rating = 0;
    std::string rater;
};

struct ModelInfo {
    std::string id;
    ModelKind kind = ModelKind::IM;
};

/// The quality-issues matrix: defects and advisory ratings per (QC, model).
class QualityMatrix {
  public:
    /// Assigns the next id ("D1", "D2", ...) and returns the stored defect.
    /// Throws DomainError "unknown_qc", "qc_not_selected", "bad_locator".
    const Defect& open_defect(Defect draft, const Registry& registry, const QCSelection& selection,
                              const ModelInfo& model);
    /// Throws DomainError "not_found" or "illegal_transition".
    const Defect& resolve_defect(const std::string& id, std::int64_t model_version, std::string note = {});
    const Defect& reject_defect(const std::string& id, std::string reason);

    /// Throws DomainError "invalid_rating" outside 1..5.
    void add_rating(QCRating r, const Registry& registry);

    const std::vector<Defect>& defects() const { return defects_; }
    const std::vector<QCRating>& ratings() const { return ratings_; }
    const Defect* find(std::string_view id) const;
    std::size_t open_count(std::string_view model_id) const;

    /// Rows are QCs, columns models; cells "open/resolved", "-" when the QC
    /// is excluded, "n/a" when it does not apply to the model kind.
    std::string to_csv(const Registry& registry, const QCSelection& selection,
                       const std::vector<ModelInfo>& models) const;

    Value to_json() const;
    static QualityMatrix from_json(const Value& v);

  private:
    Defect& mutable_find(const std::string& id);
    std::vector<Defect> defects_;
    std::vector<QCRating> ratings_;
    std::int64_t next_id_ = 1;
};

struct GateVerdict {
    bool pass = true;
    std::vector<std::string> blocking;  // QC ids with at least one open defect
};

GateVerdict gate_quality(const QualityMatrix& matrix, const QCSelection& selection, const Registry& registry,
                         ModelKind kind, std::string_view model_id);

}  // namespace modelgate
