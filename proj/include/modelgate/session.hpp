#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "modelgate/clock.hpp"
#include "modelgate/harness.hpp"
#include "modelgate/qc.hpp"
#include "modelgate/workflow.hpp"

namespace modelgate {

struct UseCaseActor {
    std::string name;
    std::string role;
};

struct UseCaseSystem {
    std::string id;
    std::string name;
    std::string description;
};

struct InformationObject {
    std::string name;
    std::string model_id;
};

struct ScenarioStep {
    std::string from_system;
    std::string to_system;
    std::string payload_model_id;
    std::string description;
};

struct UseCaseSpec {
    std::string name;
    std::string scope;
    std::vector<UseCaseActor> actors;
    std::vector<UseCaseSystem> systems;
    std::vector<InformationObject> information_objects;
    std::vector<ScenarioStep> scenario_steps;

    Value to_json() const;
    static UseCaseSpec from_json(const Value& v);  // DomainError "invalid_use_case"
};

/// Skeleton use-case document with every field present.
Value use_case_template();

struct Participant {
    std::string id;
    std::string name;
    std::string stakeholder_group;
    bool is_model_developer = false;
    bool is_chair = false;
};

struct ModelArtifact {
    std::string id;
    ModelKind kind = ModelKind::IM;
    std::string name;
    std::int64_t version = 1;
    std::string location;
};

/// Everything captured in Phase 1.
struct SessionInit {
    std::string id;
    UseCaseSpec use_case;
    std::vector<Participant> participants;
    std::vector<ModelArtifact> models;  // one IM and one DM

    Value to_json() const;
    static SessionInit from_json(const Value& v);
};

struct AuditEvent {
    std::int64_t seq = 0;
    std::string ts;
    std::string actor;
    std::string type;
    Value payload;
    Value result;  // outcome computed when the event was applied

    Value to_json() const;
    static AuditEvent from_json(const Value& v);
};

struct RunRecord {
    TestRun run;
    std::int64_t im_version = 0;
    std::int64_t dm_version = 0;
};

/// An evaluation session: the workflow core plus the data each step
/// produces. Every mutation goes through apply() and is appended to the
/// audit log; replay() rebuilds the same session from that log.
class Session {
  public:
    /// Throws DomainError "invalid_use_case", "invalid_participants",
    /// "invalid_models" or "invalid_id".
    static Session start(const SessionInit& init, const Registry& registry, const UnitTable& units,
                         Clock clock = system_micros, const std::string& actor = "system");

    /// Re-applies every event and checks each recomputed result against the
    /// recorded one. Throws DomainError "replay_mismatch" on divergence.
    static Session replay(const std::vector<AuditEvent>& events, const Registry& registry, const UnitTable& units,
                          Clock clock = system_micros);

    /// Event types: the workflow events, defect_opened, defect_resolved,
    /// defect_rejected, rating_added, test_case_added, run_recorded,
    /// finding_classified. Throws DomainError; "revision_conflict" when
    /// `expected_revision` is set and differs from revision().
    const AuditEvent& apply(const std::string& type, const Value& payload, const std::string& actor,
                            std::optional<std::int64_t> expected_revision = std::nullopt);

    const std::string& id() const { return init_.id; }
    std::int64_t revision() const { return static_cast<std::int64_t>(audit_.size()); }
    const Snapshot& workflow() const { return snapshot_; }
    const std::vector<AuditEvent>& audit() const { return audit_; }
    const QualityMatrix& matrix() const { return matrix_; }
    const std::optional<QCSelection>& selection() const { return selection_; }
    const Registry& registry() const { return registry_; }
    const std::vector<ModelArtifact>& models() const { return init_.models; }
    const ModelArtifact& model(ModelKind kind) const;
    /// Accepts "IM", "DM" or an artifact id. Throws DomainError "unknown_model".
    const ModelArtifact& resolve_model(std::string_view ref) const;

    const std::vector<TestCase>& tests() const { return tests_; }
    const TestCase& test_case(std::string_view id) const;  // DomainError "not_found"
    const std::vector<RunRecord>& runs() const { return runs_; }
    const RunRecord& run(std::string_view id) const;  // DomainError "not_found"
    std::string next_run_id() const;

    /// Event type names accepted in the current state.
    std::vector<std::string> legal_events() const;
    /// Per model: would the QC gate pass now, and which QCs block it.
    Value gate_preview() const;

    /// Full snapshot (session.json).
    Value to_json() const;

  private:
    Session() = default;
    Value dispatch(const std::string& type, const Value& payload, const std::string& ts);
    Value advance(EventKind kind, const Value& payload);
    Phase3Outcome phase3_outcome() const;
    bool run_is_current(const RunRecord& r) const;
    ModelArtifact& mutable_model(std::string_view ref);

    SessionInit init_;
    Registry registry_;
    UnitTable units_;
    Clock clock_;
    Snapshot snapshot_;
    std::optional<QCSelection> selection_;
    QualityMatrix matrix_;
    std::vector<TestCase> tests_;
    std::vector<RunRecord> runs_;
    std::string last_completed_run_;
    std::string test_application_;
    std::string test_method_;
    std::vector<AuditEvent> audit_;
    std::int64_t last_micros_ = 0;
};

/// A defect candidate found mechanically while reviewing data-model
/// samples (step 6d).
struct DefectSuggestion {
    std::string qc_id;
    std::string locator;
    std::string description;
    std::string source;  // "duplicate_key", "uniqueness", "required_default"
};

/// Duplicate keys in a sample map to singularity, duplicate or missing
/// instance ids to instance_uniqueness, and defaults on required members
/// to essentialness.
std::vector<DefectSuggestion> review_data_model(const std::vector<Document>& samples,
                                                const std::optional<PathExpr>& id_path,
                                                const CompiledSchema* schema = nullptr);

}  // namespace modelgate
