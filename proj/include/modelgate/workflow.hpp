#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "modelgate/errors.hpp"
#include "modelgate/json.hpp"
#include "modelgate/qc.hpp"

namespace modelgate {

enum class StateId {
    P1_DEFINE_USECASE,
    P1_IDENTIFY_PARTICIPANTS,
    P2_PLAN_REVIEW,
    P2_SELECT_QCS,
    P2_CHOOSE_MODEL,
    P2_REVIEW_IM,
    P2_REVIEW_DM,
    P2_QC_GATE,
    P2_IMPLEMENT_CHANGES,
    P2_BOTH_DONE_GATE,
    P3_SELECT_TEST_APP,
    P3_SELECT_TEST_TYPE,
    P3_DEFINE_TEST_METHOD,
    P3_CONDUCT_TEST,
    P3_APP_DEFECT_GATE,
    P3_MODEL_DEFECT_GATE,
    P3_FIX_APP,
    P3_FIX_MODEL,
    DONE,
};
inline constexpr int kStateCount = 19;

const char* to_string(StateId s);
StateId state_from(std::string_view name);  // throws DomainError
/// Step label in the approach's numbering: "1", "D5", "6i", "14a", ...
const char* step_label(StateId s);
int phase_of(StateId s);  // 1, 2, 3; DONE counts as 3
bool is_decision(StateId s);

enum class ModelStatus { Pending, Passed, Stale };
const char* to_string(ModelStatus s);
ModelStatus model_status_from(std::string_view s);

enum class EventKind {
    ReviewPlanned,
    QcsSelected,
    ModelChosen,
    ReviewDone,
    GateEvaluated,
    ChangesImplemented,
    TestAppSelected,
    TestTypeSelected,
    MethodDefined,
    TestCompleted,
    DefectsClassified,
    FixesDone,
};
const char* to_string(EventKind k);
EventKind event_kind_from(std::string_view name);  // throws DomainError

enum class TestType { Formal, InformalSimplified, InformalConceptual };
const char* to_string(TestType t);
TestType test_type_from(std::string_view s);

/// Result of the model-defect decision after a test round.
enum class Phase3Outcome { ModelDefects, Done, Continue };
const char* to_string(Phase3Outcome o);
Phase3Outcome phase3_outcome_from(std::string_view s);

/// An event with every decision input already resolved.
struct CoreEvent {
    EventKind kind = EventKind::ReviewPlanned;
    ModelKind model = ModelKind::IM;             // ModelChosen, ChangesImplemented
    bool gate_pass = false;                      // GateEvaluated at the QC gate
    Phase3Outcome outcome = Phase3Outcome::Continue;  // GateEvaluated at the model-defect gate
    int app_defects = 0;                         // DefectsClassified
    int model_defects = 0;
    TestType test_type = TestType::InformalSimplified;
};

std::string describe(const CoreEvent& e);

struct Snapshot {
    StateId state = StateId::P2_PLAN_REVIEW;
    std::array<ModelStatus, 2> status{ModelStatus::Pending, ModelStatus::Pending};  // IM, DM
    std::optional<ModelKind> current;  // model under review
    std::optional<TestType> test_type;
    int last_model_defects = 0;
    std::map<StateId, int> iterations;  // entries per state

    ModelStatus status_of(ModelKind k) const { return status[static_cast<int>(k)]; }
    friend bool operator==(const Snapshot&, const Snapshot&) = default;

    Value to_json() const;
    static Snapshot from_json(const Value& v);
};

/// Snapshot of a freshly started session (Phase 1 captured).
Snapshot initial_snapshot();

/// Applies `e`; throws DomainError "illegal_transition" or "gate_violation".
Snapshot transition(const Snapshot& s, const CoreEvent& e);

/// Every event accepted in `s`, with each decision outcome enumerated.
std::vector<CoreEvent> enabled_events(const Snapshot& s);

/// Machine-readable description of states, steps and events.
Value workflow_description();

// ----------------------------------------------------------- model check

struct ModelCheckResult {
    std::size_t states_explored = 0;
    std::size_t transitions = 0;
    std::size_t done_paths = 0;
    int depth = 0;
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

/// Explores every event sequence in which no state is entered more than
/// `depth` times and checks: no deadlock outside DONE; Phase 3 only with
/// both models passed; IM reviewed first; every path to DONE passes the QC
/// gate for IM and DM and completes a test; a changed model passes the QC
/// gate again before DONE.
ModelCheckResult model_check(int depth);

}  // namespace modelgate
