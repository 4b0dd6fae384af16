#include "modelgate/workflow.hpp"

#include <functional>
#include <set>

namespace modelgate {

namespace {

struct StateInfo {
    StateId id;
    const char* name;
    const char* step;
    int phase;
    bool decision;
};

constexpr StateInfo kStates[] = {
    {StateId::P1_DEFINE_USECASE, "P1_DEFINE_USECASE", "1", 1, false},
    {StateId::P1_IDENTIFY_PARTICIPANTS, "P1_IDENTIFY_PARTICIPANTS", "2", 1, false},
    {StateId::P2_PLAN_REVIEW, "P2_PLAN_REVIEW", "3", 2, false},
    {StateId::P2_SELECT_QCS, "P2_SELECT_QCS", "4", 2, false},
    {StateId::P2_CHOOSE_MODEL, "P2_CHOOSE_MODEL", "D5", 2, true},
    {StateId::P2_REVIEW_IM, "P2_REVIEW_IM", "6i", 2, false},
    {StateId::P2_REVIEW_DM, "P2_REVIEW_DM", "6d", 2, false},
    {StateId::P2_QC_GATE, "P2_QC_GATE", "D7", 2, true},
    {StateId::P2_IMPLEMENT_CHANGES, "P2_IMPLEMENT_CHANGES", "8", 2, false},
    {StateId::P2_BOTH_DONE_GATE, "P2_BOTH_DONE_GATE", "D9", 2, true},
    {StateId::P3_SELECT_TEST_APP, "P3_SELECT_TEST_APP", "10", 3, false},
    {StateId::P3_SELECT_TEST_TYPE, "P3_SELECT_TEST_TYPE", "11", 3, false},
    {StateId::P3_DEFINE_TEST_METHOD, "P3_DEFINE_TEST_METHOD", "12", 3, false},
    {StateId::P3_CONDUCT_TEST, "P3_CONDUCT_TEST", "13", 3, false},
    {StateId::P3_APP_DEFECT_GATE, "P3_APP_DEFECT_GATE", "D14a", 3, true},
    {StateId::P3_MODEL_DEFECT_GATE, "P3_MODEL_DEFECT_GATE", "D14m", 3, true},
    {StateId::P3_FIX_APP, "P3_FIX_APP", "15a", 3, false},
    {StateId::P3_FIX_MODEL, "P3_FIX_MODEL", "15m", 3, false},
    {StateId::DONE, "DONE", "done", 3, false},
};

const StateInfo& info(StateId s) { return kStates[static_cast<int>(s)]; }

constexpr const char* kEventNames[] = {"review_planned",  "qcs_selected",       "model_chosen",  "review_done",
                                       "gate_evaluated",  "changes_implemented", "test_app_selected",
                                       "test_type_selected", "method_defined",   "test_completed",
                                       "defects_classified", "fixes_done"};

[[noreturn]] void illegal(const Snapshot& s, const CoreEvent& e, const std::string& why = {}) {
    throw DomainError("illegal_transition", std::string("event ") + describe(e) + " not allowed in " +
                                                to_string(s.state) + (why.empty() ? "" : ": " + why));
}

bool both_passed(const Snapshot& s) {
    return s.status[0] == ModelStatus::Passed && s.status[1] == ModelStatus::Passed;
}

bool may_change_models(StateId s) {
    return s == StateId::P2_PLAN_REVIEW || s == StateId::P2_SELECT_QCS || s == StateId::P2_CHOOSE_MODEL ||
           s == StateId::P2_IMPLEMENT_CHANGES || s == StateId::P3_FIX_MODEL;
}

}  // namespace

const char* to_string(StateId s) { return info(s).name; }
const char* step_label(StateId s) { return info(s).step; }
int phase_of(StateId s) { return info(s).phase; }
bool is_decision(StateId s) { return info(s).decision; }

StateId state_from(std::string_view name) {
    for (const auto& i : kStates) {
        if (name == i.name) return i.id;
    }
    throw DomainError("invalid_state", "unknown state '" + std::string(name) + "'");
}

const char* to_string(ModelStatus s) {
    switch (s) {
        case ModelStatus::Pending: return "pending";
        case ModelStatus::Passed: return "passed";
        case ModelStatus::Stale: return "stale";
    }
    return "?";
}

ModelStatus model_status_from(std::string_view s) {
    if (s == "pending") return ModelStatus::Pending;
    if (s == "passed") return ModelStatus::Passed;
    if (s == "stale") return ModelStatus::Stale;
    throw DomainError("invalid_status", "unknown model status '" + std::string(s) + "'");
}

const char* to_string(EventKind k) { return kEventNames[static_cast<int>(k)]; }

EventKind event_kind_from(std::string_view name) {
    for (int i = 0; i < 12; ++i) {
        if (name == kEventNames[i]) return static_cast<EventKind>(i);
    }
    throw DomainError("unknown_event", "unknown event '" + std::string(name) + "'");
}

const char* to_string(TestType t) {
    switch (t) {
        case TestType::Formal: return "formal";
        case TestType::InformalSimplified: return "informal_simplified";
        case TestType::InformalConceptual: return "informal_conceptual";
    }
    return "?";
}

TestType test_type_from(std::string_view s) {
    for (auto t : {TestType::Formal, TestType::InformalSimplified, TestType::InformalConceptual}) {
        if (s == to_string(t)) return t;
    }
    throw DomainError("invalid_test_type", "test type must be formal, informal_simplified or informal_conceptual");
}

const char* to_string(Phase3Outcome o) {
    switch (o) {
        case Phase3Outcome::ModelDefects: return "model_defects";
        case Phase3Outcome::Done: return "done";
        case Phase3Outcome::Continue: return "continue";
    }
    return "?";
}

Phase3Outcome phase3_outcome_from(std::string_view s) {
    for (auto o : {Phase3Outcome::ModelDefects, Phase3Outcome::Done, Phase3Outcome::Continue}) {
        if (s == to_string(o)) return o;
    }
    throw DomainError("invalid_outcome", "unknown outcome '" + std::string(s) + "'");
}

std::string describe(const CoreEvent& e) {
    std::string out = to_string(e.kind);
    switch (e.kind) {
        case EventKind::ModelChosen:
        case EventKind::ChangesImplemented: out += std::string("(") + to_string(e.model) + ")"; break;
        case EventKind::TestTypeSelected: out += std::string("(") + to_string(e.test_type) + ")"; break;
        case EventKind::DefectsClassified:
            out += "(app=" + std::to_string(e.app_defects) + ",model=" + std::to_string(e.model_defects) + ")";
            break;
        default: break;
    }
    return out;
}

Value Snapshot::to_json() const {
    Value it = Value::empty_object();
    for (const auto& [state, n] : iterations) it.set(modelgate::to_string(state), n);
    return Value::object({{"state", modelgate::to_string(state)},
                          {"step", step_label(state)},
                          {"model_status", Value::object({{"IM", modelgate::to_string(status[0])},
                                                          {"DM", modelgate::to_string(status[1])}})},
                          {"current_model", current ? Value(modelgate::to_string(*current)) : Value()},
                          {"test_type", test_type ? Value(modelgate::to_string(*test_type)) : Value()},
                          {"last_model_defects", last_model_defects},
                          {"iteration_count", std::move(it)}});
}

Snapshot Snapshot::from_json(const Value& v) {
    Snapshot s;
    s.state = state_from(v.at("state").as_string());
    s.status[0] = model_status_from(v.at("model_status").at("IM").as_string());
    s.status[1] = model_status_from(v.at("model_status").at("DM").as_string());
    if (const Value* c = v.find("current_model"); c && c->is_string()) s.current = model_kind_from(c->as_string());
    if (const Value* t = v.find("test_type"); t && t->is_string()) s.test_type = test_type_from(t->as_string());
    s.last_model_defects = static_cast<int>(v.at("last_model_defects").as_number().to_int64().value_or(0));
    for (const auto& [name, n] : v.at("iteration_count").as_object()) {
        s.iterations[state_from(name)] = static_cast<int>(n.as_number().to_int64().value_or(0));
    }
    return s;
}

Snapshot initial_snapshot() {
    Snapshot s;
    s.iterations[StateId::P1_DEFINE_USECASE] = 1;
    s.iterations[StateId::P1_IDENTIFY_PARTICIPANTS] = 1;
    s.iterations[StateId::P2_PLAN_REVIEW] = 1;
    return s;
}

Snapshot transition(const Snapshot& s, const CoreEvent& e) {
    Snapshot n = s;
    auto go = [&](StateId to) { n.state = to; };
    const auto k = e.kind;
    const int m = static_cast<int>(e.model);

    if (k == EventKind::ChangesImplemented) {
        if (!may_change_models(s.state)) illegal(s, e, "models change only while planning, in step 8 or in 15m");
        if (n.status[m] == ModelStatus::Passed) n.status[m] = ModelStatus::Stale;
        if (s.state == StateId::P2_IMPLEMENT_CHANGES) go(StateId::P2_CHOOSE_MODEL);
    } else {
        switch (s.state) {
            case StateId::P2_PLAN_REVIEW:
                if (k != EventKind::ReviewPlanned) illegal(s, e);
                go(StateId::P2_SELECT_QCS);
                break;
            case StateId::P2_SELECT_QCS:
                if (k != EventKind::QcsSelected) illegal(s, e);
                go(StateId::P2_CHOOSE_MODEL);
                break;
            case StateId::P2_CHOOSE_MODEL:
                if (k != EventKind::ModelChosen) illegal(s, e);
                if (s.status[m] == ModelStatus::Passed) illegal(s, e, "model already passed");
                if (e.model == ModelKind::DM && s.status[0] != ModelStatus::Passed) {
                    illegal(s, e, "the information model is evaluated first");
                }
                n.current = e.model;
                go(e.model == ModelKind::IM ? StateId::P2_REVIEW_IM : StateId::P2_REVIEW_DM);
                break;
            case StateId::P2_REVIEW_IM:
            case StateId::P2_REVIEW_DM:
                if (k != EventKind::ReviewDone) illegal(s, e);
                go(StateId::P2_QC_GATE);
                break;
            case StateId::P2_QC_GATE:
                if (k != EventKind::GateEvaluated) illegal(s, e);
                if (e.gate_pass) {
                    n.status[static_cast<int>(*s.current)] = ModelStatus::Passed;
                    go(StateId::P2_BOTH_DONE_GATE);
                } else {
                    go(StateId::P2_IMPLEMENT_CHANGES);
                }
                break;
            case StateId::P2_BOTH_DONE_GATE:
                if (k != EventKind::GateEvaluated) illegal(s, e);
                go(both_passed(s) ? StateId::P3_SELECT_TEST_APP : StateId::P2_CHOOSE_MODEL);
                break;
            case StateId::P3_SELECT_TEST_APP:
                if (k != EventKind::TestAppSelected) illegal(s, e);
                go(StateId::P3_SELECT_TEST_TYPE);
                break;
            case StateId::P3_SELECT_TEST_TYPE:
                if (k != EventKind::TestTypeSelected) illegal(s, e);
                n.test_type = e.test_type;
                go(StateId::P3_DEFINE_TEST_METHOD);
                break;
            case StateId::P3_DEFINE_TEST_METHOD:
                if (k != EventKind::MethodDefined) illegal(s, e);
                go(StateId::P3_CONDUCT_TEST);
                break;
            case StateId::P3_CONDUCT_TEST:
                if (k != EventKind::TestCompleted) illegal(s, e);
                go(StateId::P3_APP_DEFECT_GATE);
                break;
            case StateId::P3_APP_DEFECT_GATE:
                if (k != EventKind::DefectsClassified) illegal(s, e);
                if (e.app_defects < 0 || e.model_defects < 0) illegal(s, e, "negative defect count");
                n.last_model_defects = e.model_defects;
                go(e.app_defects > 0 ? StateId::P3_FIX_APP : StateId::P3_MODEL_DEFECT_GATE);
                break;
            case StateId::P3_FIX_APP:
                if (k != EventKind::FixesDone) illegal(s, e);
                go(StateId::P3_CONDUCT_TEST);
                break;
            case StateId::P3_MODEL_DEFECT_GATE:
                if (k != EventKind::GateEvaluated) illegal(s, e);
                if (s.last_model_defects > 0 && e.outcome != Phase3Outcome::ModelDefects) {
                    illegal(s, e, "model defects were classified in the last test round");
                }
                go(e.outcome == Phase3Outcome::ModelDefects ? StateId::P3_FIX_MODEL
                   : e.outcome == Phase3Outcome::Done       ? StateId::DONE
                                                            : StateId::P3_CONDUCT_TEST);
                break;
            case StateId::P3_FIX_MODEL:
                if (k != EventKind::FixesDone) illegal(s, e);
                if (both_passed(s)) illegal(s, e, "no model was changed");
                n.last_model_defects = 0;
                go(StateId::P2_CHOOSE_MODEL);
                break;
            default: illegal(s, e);
        }
    }
    if (phase_of(n.state) == 3 && n.state != StateId::P3_FIX_MODEL && !both_passed(n)) {
        throw DomainError("gate_violation", std::string("cannot enter ") + to_string(n.state) +
                                                " unless both models passed the quality gate");
    }
    if (n.state != s.state) ++n.iterations[n.state];
    return n;
}

std::vector<CoreEvent> enabled_events(const Snapshot& s) {
    std::vector<CoreEvent> out;
    auto add = [&](CoreEvent e) { out.push_back(e); };
    auto ev = [](EventKind k) {
        CoreEvent e;
        e.kind = k;
        return e;
    };
    if (may_change_models(s.state)) {
        for (auto m : {ModelKind::IM, ModelKind::DM}) {
            auto e = ev(EventKind::ChangesImplemented);
            e.model = m;
            add(e);
        }
    }
    switch (s.state) {
        case StateId::P2_PLAN_REVIEW: add(ev(EventKind::ReviewPlanned)); break;
        case StateId::P2_SELECT_QCS: add(ev(EventKind::QcsSelected)); break;
        case StateId::P2_CHOOSE_MODEL:
            for (auto m : {ModelKind::IM, ModelKind::DM}) {
                if (s.status_of(m) == ModelStatus::Passed) continue;
                if (m == ModelKind::DM && s.status[0] != ModelStatus::Passed) continue;
                auto e = ev(EventKind::ModelChosen);
                e.model = m;
                add(e);
            }
            break;
        case StateId::P2_REVIEW_IM:
        case StateId::P2_REVIEW_DM: add(ev(EventKind::ReviewDone)); break;
        case StateId::P2_QC_GATE:
            for (bool pass : {true, false}) {
                auto e = ev(EventKind::GateEvaluated);
                e.gate_pass = pass;
                add(e);
            }
            break;
        case StateId::P2_BOTH_DONE_GATE: add(ev(EventKind::GateEvaluated)); break;
        case StateId::P3_SELECT_TEST_APP: add(ev(EventKind::TestAppSelected)); break;
        case StateId::P3_SELECT_TEST_TYPE:
            for (auto t : {TestType::Formal, TestType::InformalSimplified, TestType::InformalConceptual}) {
                auto e = ev(EventKind::TestTypeSelected);
                e.test_type = t;
                add(e);
            }
            break;
        case StateId::P3_DEFINE_TEST_METHOD: add(ev(EventKind::MethodDefined)); break;
        case StateId::P3_CONDUCT_TEST: add(ev(EventKind::TestCompleted)); break;
        case StateId::P3_APP_DEFECT_GATE:
            for (int a : {0, 1}) {
                for (int m : {0, 1}) {
                    auto e = ev(EventKind::DefectsClassified);
                    e.app_defects = a;
                    e.model_defects = m;
                    add(e);
                }
            }
            break;
        case StateId::P3_FIX_APP: add(ev(EventKind::FixesDone)); break;
        case StateId::P3_MODEL_DEFECT_GATE:
            for (auto o : {Phase3Outcome::ModelDefects, Phase3Outcome::Done, Phase3Outcome::Continue}) {
                if (s.last_model_defects > 0 && o != Phase3Outcome::ModelDefects) continue;
                auto e = ev(EventKind::GateEvaluated);
                e.outcome = o;
                add(e);
            }
            break;
        case StateId::P3_FIX_MODEL:
            if (!both_passed(s)) add(ev(EventKind::FixesDone));
            break;
        default: break;
    }
    return out;
}

Value workflow_description() {
    Value states = Value::empty_array();
    for (const auto& i : kStates) {
        states.push_back(Value::object({{"id", i.name}, {"step", i.step}, {"phase", i.phase}, {"decision", i.decision}}));
    }
    Value events = Value::empty_array();
    for (const char* name : kEventNames) events.push_back(name);
    // Edges as (from, event, to) with the condition that selects them.
    auto edge = [](const char* from, const char* event, const char* to, const char* when) {
        return Value::object({{"from", from}, {"event", event}, {"to", to}, {"when", when}});
    };
    Value edges = Value::array({
        edge("P2_PLAN_REVIEW", "review_planned", "P2_SELECT_QCS", ""),
        edge("P2_SELECT_QCS", "qcs_selected", "P2_CHOOSE_MODEL", ""),
        edge("P2_CHOOSE_MODEL", "model_chosen", "P2_REVIEW_IM", "model=IM, IM not passed"),
        edge("P2_CHOOSE_MODEL", "model_chosen", "P2_REVIEW_DM", "model=DM, IM passed, DM not passed"),
        edge("P2_REVIEW_IM", "review_done", "P2_QC_GATE", ""),
        edge("P2_REVIEW_DM", "review_done", "P2_QC_GATE", ""),
        edge("P2_QC_GATE", "gate_evaluated", "P2_BOTH_DONE_GATE", "no open defect on an applicable selected QC"),
        edge("P2_QC_GATE", "gate_evaluated", "P2_IMPLEMENT_CHANGES", "open defects remain"),
        edge("P2_IMPLEMENT_CHANGES", "changes_implemented", "P2_CHOOSE_MODEL", ""),
        edge("P2_BOTH_DONE_GATE", "gate_evaluated", "P3_SELECT_TEST_APP", "IM and DM passed"),
        edge("P2_BOTH_DONE_GATE", "gate_evaluated", "P2_CHOOSE_MODEL", "a model is pending or stale"),
        edge("P3_SELECT_TEST_APP", "test_app_selected", "P3_SELECT_TEST_TYPE", ""),
        edge("P3_SELECT_TEST_TYPE", "test_type_selected", "P3_DEFINE_TEST_METHOD", ""),
        edge("P3_DEFINE_TEST_METHOD", "method_defined", "P3_CONDUCT_TEST", ""),
        edge("P3_CONDUCT_TEST", "test_completed", "P3_APP_DEFECT_GATE", ""),
        edge("P3_APP_DEFECT_GATE", "defects_classified", "P3_FIX_APP", "application defects > 0"),
        edge("P3_APP_DEFECT_GATE", "defects_classified", "P3_MODEL_DEFECT_GATE", "no application defects"),
        edge("P3_FIX_APP", "fixes_done", "P3_CONDUCT_TEST", ""),
        edge("P3_MODEL_DEFECT_GATE", "gate_evaluated", "P3_FIX_MODEL", "model defects or open defects"),
        edge("P3_MODEL_DEFECT_GATE", "gate_evaluated", "DONE", "every planned test passed, no open defects"),
        edge("P3_MODEL_DEFECT_GATE", "gate_evaluated", "P3_CONDUCT_TEST", "otherwise"),
        edge("P3_FIX_MODEL", "changes_implemented", "P3_FIX_MODEL", "marks a passed model stale"),
        edge("P3_FIX_MODEL", "fixes_done", "P2_CHOOSE_MODEL", "a model is stale"),
    });
    return Value::object({{"states", std::move(states)},
                          {"events", std::move(events)},
                          {"edges", std::move(edges)},
                          {"initial", "P2_PLAN_REVIEW"},
                          {"terminal", "DONE"}});
}

// ----------------------------------------------------------- model check

namespace {

struct PathFlags {
    bool reviewed_any = false;
    std::array<bool, 2> gate_passed{false, false};
    bool tested = false;
    std::array<bool, 2> needs_repass{false, false};

    auto key() const {
        return std::tuple(reviewed_any, gate_passed[0], gate_passed[1], tested, needs_repass[0], needs_repass[1]);
    }
};

std::string encode(const Snapshot& s, const PathFlags& f) {
    std::string k;
    k += static_cast<char>(s.state);
    k += static_cast<char>(s.status[0]);
    k += static_cast<char>(s.status[1]);
    k += static_cast<char>(s.current ? static_cast<int>(*s.current) + 1 : 0);
    k += static_cast<char>(s.test_type ? static_cast<int>(*s.test_type) + 1 : 0);
    k += static_cast<char>(s.last_model_defects);
    for (int i = 0; i < kStateCount; ++i) {
        auto it = s.iterations.find(static_cast<StateId>(i));
        k += static_cast<char>(it == s.iterations.end() ? 0 : it->second);
    }
    const auto [a, b, c, d, e, g] = f.key();
    k += static_cast<char>(a | b << 1 | c << 2 | d << 3 | e << 4 | g << 5);
    return k;
}

}  // namespace

ModelCheckResult model_check(int depth) {
    ModelCheckResult r;
    r.depth = depth;
    std::set<std::string> seen;
    auto violate = [&](const std::string& what, const Snapshot& s) {
        if (r.violations.size() < 20) r.violations.push_back(what + " in " + to_string(s.state));
    };

    std::vector<std::pair<Snapshot, PathFlags>> stack;
    stack.emplace_back(initial_snapshot(), PathFlags{});
    while (!stack.empty()) {
        auto [s, f] = std::move(stack.back());
        stack.pop_back();
        if (!seen.insert(encode(s, f)).second) continue;
        ++r.states_explored;

        if (phase_of(s.state) == 3 && s.state != StateId::P3_FIX_MODEL && !both_passed(s)) {
            violate("phase 3 reached without both models passed", s);
        }
        if (s.state == StateId::DONE) {
            ++r.done_paths;
            if (!f.gate_passed[0] || !f.gate_passed[1]) violate("DONE without a passing QC gate for each model", s);
            if (!f.tested) violate("DONE without a completed test", s);
            if (f.needs_repass[0] || f.needs_repass[1]) violate("DONE with a changed model not re-gated", s);
        }
        const auto events = enabled_events(s);
        if (events.empty() && s.state != StateId::DONE) violate("deadlock", s);

        for (const auto& e : events) {
            Snapshot n;
            try {
                n = transition(s, e);
            } catch (const DomainError& err) {
                violate(std::string("enabled event rejected: ") + err.what(), s);
                continue;
            }
            ++r.transitions;
            if (n.state != s.state && n.iterations[n.state] > depth) continue;
            PathFlags g = f;
            if (n.state == StateId::P2_REVIEW_IM || n.state == StateId::P2_REVIEW_DM) {
                if (!g.reviewed_any && n.state != StateId::P2_REVIEW_IM) violate("first review is not the IM", s);
                g.reviewed_any = true;
            }
            if (e.kind == EventKind::GateEvaluated && s.state == StateId::P2_QC_GATE && e.gate_pass) {
                const int m = static_cast<int>(*s.current);
                g.gate_passed[m] = true;
                g.needs_repass[m] = false;
            }
            if (e.kind == EventKind::ChangesImplemented) g.needs_repass[static_cast<int>(e.model)] = true;
            if (e.kind == EventKind::TestCompleted) g.tested = true;
            stack.emplace_back(std::move(n), g);
        }
    }
    return r;
}

}  // namespace modelgate
