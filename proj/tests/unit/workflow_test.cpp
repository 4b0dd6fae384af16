#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <random>

#include "modelgate/workflow.hpp"

using namespace modelgate;

namespace {

CoreEvent ev(EventKind k) {
    CoreEvent e;
    e.kind = k;
    return e;
}
CoreEvent choose(ModelKind m) {
    auto e = ev(EventKind::ModelChosen);
    e.model = m;
    return e;
}
CoreEvent changed(ModelKind m) {
    auto e = ev(EventKind::ChangesImplemented);
    e.model = m;
    return e;
}
CoreEvent qc_gate(bool pass) {
    auto e = ev(EventKind::GateEvaluated);
    e.gate_pass = pass;
    return e;
}
CoreEvent p3_gate(Phase3Outcome o) {
    auto e = ev(EventKind::GateEvaluated);
    e.outcome = o;
    return e;
}
CoreEvent classified(int app, int model) {
    auto e = ev(EventKind::DefectsClassified);
    e.app_defects = app;
    e.model_defects = model;
    return e;
}

std::string code_of(const Snapshot& s, const CoreEvent& e) {
    try {
        transition(s, e);
    } catch (const DomainError& err) {
        return err.code();
    }
    return "ok";
}

Snapshot run(Snapshot s, std::initializer_list<CoreEvent> events) {
    for (const auto& e : events) s = transition(s, e);
    return s;
}

Snapshot both_passed() {
    return run(initial_snapshot(), {ev(EventKind::ReviewPlanned), ev(EventKind::QcsSelected), choose(ModelKind::IM),
                                    ev(EventKind::ReviewDone), qc_gate(true), ev(EventKind::GateEvaluated),
                                    choose(ModelKind::DM), ev(EventKind::ReviewDone), qc_gate(true),
                                    ev(EventKind::GateEvaluated)});
}

// Every event shape the core knows about, with each parameter varied.
std::vector<CoreEvent> all_candidate_events() {
    std::vector<CoreEvent> out;
    for (int k = 0; k < 12; ++k) {
        for (auto m : {ModelKind::IM, ModelKind::DM}) {
            for (bool pass : {true, false}) {
                for (auto o : {Phase3Outcome::ModelDefects, Phase3Outcome::Done, Phase3Outcome::Continue}) {
                    for (int a : {0, 1}) {
                        for (int d : {0, 1}) {
                            CoreEvent e;
                            e.kind = static_cast<EventKind>(k);
                            e.model = m;
                            e.gate_pass = pass;
                            e.outcome = o;
                            e.app_defects = a;
                            e.model_defects = d;
                            out.push_back(e);
                        }
                    }
                }
            }
        }
    }
    return out;
}

}  // namespace

TEST(Workflow, NamesRoundTrip) {
    for (int i = 0; i < kStateCount; ++i) {
        auto s = static_cast<StateId>(i);
        EXPECT_EQ(state_from(to_string(s)), s);
    }
    for (int i = 0; i < 12; ++i) {
        auto k = static_cast<EventKind>(i);
        EXPECT_EQ(event_kind_from(to_string(k)), k);
    }
    EXPECT_STREQ(step_label(StateId::P2_CHOOSE_MODEL), "D5");
    EXPECT_STREQ(step_label(StateId::P3_APP_DEFECT_GATE), "D14a");
    EXPECT_TRUE(is_decision(StateId::P2_QC_GATE));
    EXPECT_FALSE(is_decision(StateId::P2_REVIEW_DM));
    EXPECT_THROW(state_from("P4"), DomainError);
}

TEST(Workflow, InitialSnapshotStartsAtReviewPlanning) {
    auto s = initial_snapshot();
    EXPECT_EQ(s.state, StateId::P2_PLAN_REVIEW);
    EXPECT_EQ(s.status_of(ModelKind::IM), ModelStatus::Pending);
    EXPECT_EQ(s.status_of(ModelKind::DM), ModelStatus::Pending);
}

TEST(Workflow, DataModelCannotBeChosenBeforeInformationModelPasses) {
    auto s = run(initial_snapshot(), {ev(EventKind::ReviewPlanned), ev(EventKind::QcsSelected)});
    EXPECT_EQ(s.state, StateId::P2_CHOOSE_MODEL);
    EXPECT_EQ(code_of(s, choose(ModelKind::DM)), "illegal_transition");
    EXPECT_EQ(transition(s, choose(ModelKind::IM)).state, StateId::P2_REVIEW_IM);
}

TEST(Workflow, FailedGateLoopsThroughImplementChanges) {
    auto s = run(initial_snapshot(), {ev(EventKind::ReviewPlanned), ev(EventKind::QcsSelected), choose(ModelKind::IM),
                                      ev(EventKind::ReviewDone), qc_gate(false)});
    EXPECT_EQ(s.state, StateId::P2_IMPLEMENT_CHANGES);
    EXPECT_EQ(code_of(s, ev(EventKind::ReviewDone)), "illegal_transition");
    s = transition(s, changed(ModelKind::IM));
    EXPECT_EQ(s.state, StateId::P2_CHOOSE_MODEL);
    EXPECT_EQ(s.status_of(ModelKind::IM), ModelStatus::Pending);
    EXPECT_EQ(s.iterations.at(StateId::P2_CHOOSE_MODEL), 2);
}

TEST(Workflow, BothPassedEntersPhaseThree) {
    auto s = both_passed();
    EXPECT_EQ(s.state, StateId::P3_SELECT_TEST_APP);
    EXPECT_EQ(s.status_of(ModelKind::IM), ModelStatus::Passed);
    EXPECT_EQ(s.status_of(ModelKind::DM), ModelStatus::Passed);
}

TEST(Workflow, OnePassedReturnsToChooseModel) {
    auto s = run(initial_snapshot(), {ev(EventKind::ReviewPlanned), ev(EventKind::QcsSelected), choose(ModelKind::IM),
                                      ev(EventKind::ReviewDone), qc_gate(true), ev(EventKind::GateEvaluated)});
    EXPECT_EQ(s.state, StateId::P2_CHOOSE_MODEL);
    EXPECT_EQ(code_of(s, choose(ModelKind::IM)), "illegal_transition");
    EXPECT_EQ(transition(s, choose(ModelKind::DM)).state, StateId::P2_REVIEW_DM);
}

TEST(Workflow, ModelDefectsRouteBackToReview) {
    auto s = run(both_passed(), {ev(EventKind::TestAppSelected), ev(EventKind::TestTypeSelected),
                                 ev(EventKind::MethodDefined), ev(EventKind::TestCompleted), classified(0, 1)});
    EXPECT_EQ(s.state, StateId::P3_MODEL_DEFECT_GATE);
    EXPECT_EQ(code_of(s, p3_gate(Phase3Outcome::Done)), "illegal_transition");
    EXPECT_EQ(code_of(s, p3_gate(Phase3Outcome::Continue)), "illegal_transition");
    s = transition(s, p3_gate(Phase3Outcome::ModelDefects));
    EXPECT_EQ(s.state, StateId::P3_FIX_MODEL);
    EXPECT_EQ(code_of(s, ev(EventKind::FixesDone)), "illegal_transition");
    s = transition(s, changed(ModelKind::DM));
    EXPECT_EQ(s.state, StateId::P3_FIX_MODEL);
    EXPECT_EQ(s.status_of(ModelKind::DM), ModelStatus::Stale);
    s = transition(s, ev(EventKind::FixesDone));
    EXPECT_EQ(s.state, StateId::P2_CHOOSE_MODEL);
    EXPECT_EQ(code_of(s, choose(ModelKind::IM)), "illegal_transition");
    s = run(s, {choose(ModelKind::DM), ev(EventKind::ReviewDone), qc_gate(true), ev(EventKind::GateEvaluated)});
    EXPECT_EQ(s.state, StateId::P3_SELECT_TEST_APP);
}

TEST(Workflow, ApplicationDefectsLoopToConductTest) {
    auto s = run(both_passed(), {ev(EventKind::TestAppSelected), ev(EventKind::TestTypeSelected),
                                 ev(EventKind::MethodDefined), ev(EventKind::TestCompleted), classified(1, 1)});
    EXPECT_EQ(s.state, StateId::P3_FIX_APP);
    s = transition(s, ev(EventKind::FixesDone));
    EXPECT_EQ(s.state, StateId::P3_CONDUCT_TEST);
    EXPECT_EQ(s.iterations.at(StateId::P3_CONDUCT_TEST), 2);
}

TEST(Workflow, CleanRoundCanFinish) {
    auto s = run(both_passed(), {ev(EventKind::TestAppSelected), ev(EventKind::TestTypeSelected),
                                 ev(EventKind::MethodDefined), ev(EventKind::TestCompleted), classified(0, 0)});
    EXPECT_EQ(transition(s, p3_gate(Phase3Outcome::Continue)).state, StateId::P3_CONDUCT_TEST);
    s = transition(s, p3_gate(Phase3Outcome::Done));
    EXPECT_EQ(s.state, StateId::DONE);
    EXPECT_TRUE(enabled_events(s).empty());
    EXPECT_EQ(code_of(s, ev(EventKind::TestCompleted)), "illegal_transition");
}

TEST(Workflow, ModelChangesOnlyInPermittedStates) {
    auto s = both_passed();
    EXPECT_EQ(code_of(s, changed(ModelKind::DM)), "illegal_transition");
    auto early = initial_snapshot();
    EXPECT_EQ(transition(early, changed(ModelKind::IM)).state, StateId::P2_PLAN_REVIEW);
}

TEST(Workflow, SnapshotJsonRoundTrip) {
    auto s = run(both_passed(), {ev(EventKind::TestAppSelected), ev(EventKind::TestTypeSelected)});
    auto back = Snapshot::from_json(s.to_json());
    EXPECT_EQ(back, s);
    EXPECT_EQ(serialize(back.to_json()), serialize(s.to_json()));
}

TEST(Workflow, EnabledEventsAgreeWithTransition) {
    // Random walks: every enabled event is accepted, every other candidate
    // is rejected.
    std::mt19937 rng(7);
    const auto candidates = all_candidate_events();
    std::size_t checked = 0;
    for (int walk = 0; walk < 20; ++walk) {
        Snapshot s = initial_snapshot();
        for (int step = 0; step < 60 && s.state != StateId::DONE; ++step) {
            const auto enabled = enabled_events(s);
            ASSERT_FALSE(enabled.empty()) << to_string(s.state);
            std::vector<Snapshot> targets;
            for (const auto& e : enabled) targets.push_back(transition(s, e));
            for (const auto& c : candidates) {
                std::optional<Snapshot> got;
                try {
                    got = transition(s, c);
                } catch (const DomainError&) {
                }
                const bool listed = got && std::find(targets.begin(), targets.end(), *got) != targets.end();
                EXPECT_EQ(got.has_value(), listed) << to_string(s.state) << " " << describe(c);
                ++checked;
            }
            std::uniform_int_distribution<std::size_t> pick(0, enabled.size() - 1);
            s = transition(s, enabled[pick(rng)]);
        }
    }
    EXPECT_GT(checked, 10000u);
}

TEST(Workflow, ModelCheckDepthSix) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = model_check(6);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (const auto& v : r.violations) ADD_FAILURE() << v;
    EXPECT_TRUE(r.ok());
    EXPECT_GT(r.states_explored, 1000u);
    EXPECT_GT(r.done_paths, 0u);
    EXPECT_LT(secs, 5.0);
}

TEST(Workflow, DescriptionListsEveryState) {
    auto d = workflow_description();
    EXPECT_EQ(d.at("states").as_array().size(), static_cast<std::size_t>(kStateCount));
    for (const auto& e : d.at("edges").as_array()) {
        EXPECT_NO_THROW(state_from(e.at("from").as_string()));
        EXPECT_NO_THROW(state_from(e.at("to").as_string()));
        EXPECT_NO_THROW(event_kind_from(e.at("event").as_string()));
    }
}
