#include <gtest/gtest.h>

#include <random>

#include "support/case_study.hpp"

using namespace modelgate;
namespace fs = std::filesystem;

namespace {

SessionInit fixture_init() { return SessionInit::from_json(case_study::load(case_study::fixture_dir() / "session.json").root); }

Clock ticking(std::int64_t start = 1'700'000'000'000'000) {
    auto t = std::make_shared<std::int64_t>(start);
    return [t] { return (*t)++; };
}

Session fresh(std::string id = "T1") {
    auto init = fixture_init();
    init.id = std::move(id);
    return Session::start(init, default_registry(), UnitTable::default_table(), ticking());
}

Value obj(std::initializer_list<Member> m) { return Value::object(m); }

std::string code_of(auto&& fn) {
    try {
        fn();
    } catch (const DomainError& e) {
        return e.code();
    }
    return "none";
}

Value test_case_json(const std::string& variant) {
    return load_test_case_file(case_study::fixture_dir() / "cases" / ("offer_stub_" + variant + ".json")).to_json();
}

void to_choose_model(Session& s) {
    s.apply("review_planned", Value::empty_object(), "chair");
    s.apply("qcs_selected", Value::empty_object(), "chair");
}

void pass_both(Session& s) {
    to_choose_model(s);
    for (const char* m : {"IM", "DM"}) {
        s.apply("model_chosen", obj({{"model", m}}), "chair");
        s.apply("review_done", Value::empty_object(), "chair");
        s.apply("gate_evaluated", Value::empty_object(), "chair");
        s.apply("gate_evaluated", Value::empty_object(), "chair");
    }
}

void to_conduct_test(Session& s) {
    s.apply("test_app_selected", Value::empty_object(), "chair");
    s.apply("test_type_selected", obj({{"test_type", "informal_simplified"}}), "chair");
    s.apply("method_defined", Value::empty_object(), "chair");
}

std::string record_run(Session& s, const std::string& case_id) {
    const auto transcript = run_exchange(s.test_case(case_id), [] { return std::string("2024-01-01T00:00:00.000000Z"); });
    return s.apply("run_recorded", obj({{"test_case_id", case_id}, {"transcript", transcript.to_json()}}), "chair")
        .result.get_string("run_id");
}

std::string snapshot_text(const Session& s) { return serialize(s.to_json(), 2); }

}  // namespace

TEST(Session, StartsInPlanReviewWithCreatedEvent) {
    auto s = fresh();
    EXPECT_EQ(s.workflow().state, StateId::P2_PLAN_REVIEW);
    ASSERT_EQ(s.audit().size(), 1u);
    EXPECT_EQ(s.audit()[0].type, "created");
    EXPECT_EQ(s.revision(), 1);
}

TEST(Session, RejectsTwoChairs) {
    auto init = fixture_init();
    init.id = "T";
    init.participants[1].is_chair = true;
    EXPECT_EQ(code_of([&] { Session::start(init, default_registry(), UnitTable::default_table()); }), "invalid_participants");
    init.participants[0].is_chair = init.participants[1].is_chair = false;
    EXPECT_EQ(code_of([&] { Session::start(init, default_registry(), UnitTable::default_table()); }), "invalid_participants");
}

TEST(Session, RejectsSingleSystemUseCase) {
    auto init = fixture_init();
    init.id = "T";
    init.use_case.systems.pop_back();
    EXPECT_EQ(code_of([&] { Session::start(init, default_registry(), UnitTable::default_table()); }), "invalid_use_case");
}

TEST(Session, RejectsUndeclaredReferences) {
    auto init = fixture_init();
    init.id = "T";
    init.use_case.scenario_steps[0].to_system = "Z";
    EXPECT_EQ(code_of([&] { Session::start(init, default_registry(), UnitTable::default_table()); }), "invalid_use_case");
    init = fixture_init();
    init.id = "T";
    init.use_case.information_objects[0].model_id = "nope";
    EXPECT_EQ(code_of([&] { Session::start(init, default_registry(), UnitTable::default_table()); }), "invalid_use_case");
    init = fixture_init();
    init.id = "T";
    init.models.pop_back();
    init.use_case.information_objects.clear();
    init.use_case.scenario_steps.clear();
    EXPECT_EQ(code_of([&] { Session::start(init, default_registry(), UnitTable::default_table()); }), "invalid_models");
}

TEST(Session, DataModelFirstIsIllegalAndLeavesNoTrace) {
    auto s = fresh();
    to_choose_model(s);
    const auto before = snapshot_text(s);
    EXPECT_EQ(code_of([&] { s.apply("model_chosen", obj({{"model", "DM"}}), "chair"); }), "illegal_transition");
    EXPECT_EQ(snapshot_text(s), before);
}

TEST(Session, FailedGateLoopIsInHistory) {
    auto s = fresh();
    to_choose_model(s);
    s.apply("model_chosen", obj({{"model", "IM"}}), "chair");
    s.apply("defect_opened", obj({{"qc_id", "naturalness"}, {"model", "efim"}, {"description", "class names are opaque codes"}}), "chair");
    s.apply("review_done", Value::empty_object(), "chair");
    const auto& g = s.apply("gate_evaluated", Value::empty_object(), "chair");
    EXPECT_FALSE(g.result.at("pass").as_bool());
    EXPECT_EQ(serialize(g.result.at("blocking")), R"(["naturalness"])");
    s.apply("changes_implemented", obj({{"model", "efim"}}), "chair");
    std::vector<std::string> types;
    for (const auto& e : s.audit()) types.push_back(e.type);
    EXPECT_NE(std::find(types.begin(), types.end(), "gate_evaluated"), types.end());
    EXPECT_EQ(types.back(), "changes_implemented");
    EXPECT_EQ(s.model(ModelKind::IM).version, 2);
    EXPECT_EQ(s.workflow().state, StateId::P2_CHOOSE_MODEL);
}

TEST(Session, ChangingPassedModelMakesItStale) {
    auto s = fresh();
    pass_both(s);
    to_conduct_test(s);
    s.apply("test_case_added", obj({{"test_case", test_case_json("defective")}}), "chair");
    const auto run = record_run(s, "offer-stub-defective");
    s.apply("finding_classified", obj({{"run_id", run}, {"finding_ref", "response/0"}, {"locus", "model"}}), "chair");
    s.apply("finding_classified", obj({{"run_id", run}, {"finding_ref", "semantics/0"}, {"locus", "application"}}), "chair");
    s.apply("test_completed", obj({{"run_id", run}}), "chair");
    const auto& c = s.apply("defects_classified", Value::empty_object(), "chair");
    EXPECT_EQ(serialize(c.result), R"({"app":1,"model":1,"state":"P3_FIX_APP"})");
    s.apply("fixes_done", Value::empty_object(), "chair");
    EXPECT_EQ(s.workflow().state, StateId::P3_CONDUCT_TEST);
}

TEST(Session, ModelDefectRoutesThroughFixModelToChooseModel) {
    auto s = fresh();
    pass_both(s);
    to_conduct_test(s);
    s.apply("test_case_added", obj({{"test_case", test_case_json("defective")}}), "chair");
    const auto run = record_run(s, "offer-stub-defective");
    const auto& c = s.apply("finding_classified", obj({{"run_id", run}, {"finding_ref", "response/0"}, {"locus", "model"}}), "chair");
    const std::string defect = c.result.get_string("defect_id");
    EXPECT_EQ(s.matrix().find(defect)->qc_id, "completeness");
    s.apply("finding_classified",
            obj({{"run_id", run}, {"finding_ref", "semantics/0"}, {"locus", "model"}, {"qc_id", "correctness"}}), "chair");
    EXPECT_EQ(s.matrix().defects().back().qc_id, "correctness");
    s.apply("test_completed", Value::empty_object(), "chair");
    s.apply("defects_classified", Value::empty_object(), "chair");
    EXPECT_EQ(s.apply("gate_evaluated", Value::empty_object(), "chair").result.get_string("outcome"), "model_defects");
    EXPECT_EQ(s.workflow().state, StateId::P3_FIX_MODEL);
    EXPECT_EQ(code_of([&] { s.apply("fixes_done", Value::empty_object(), "chair"); }), "illegal_transition");
    s.apply("changes_implemented", obj({{"model", "DM"}, {"version", 5}}), "chair");
    EXPECT_EQ(s.workflow().status_of(ModelKind::DM), ModelStatus::Stale);
    EXPECT_EQ(s.model(ModelKind::DM).version, 5);
    s.apply("fixes_done", Value::empty_object(), "chair");
    EXPECT_EQ(s.workflow().state, StateId::P2_CHOOSE_MODEL);
    // Open defects on the DM keep its gate closed.
    s.apply("model_chosen", obj({{"model", "DM"}}), "chair");
    s.apply("review_done", Value::empty_object(), "chair");
    EXPECT_FALSE(s.apply("gate_evaluated", Value::empty_object(), "chair").result.at("pass").as_bool());
    EXPECT_EQ(s.workflow().state, StateId::P2_IMPLEMENT_CHANGES);
}

TEST(Session, PendingModelChangeOnlyBumpsVersion) {
    auto s = fresh();
    to_choose_model(s);
    s.apply("changes_implemented", obj({{"model", "efdm"}}), "chair");
    EXPECT_EQ(s.model(ModelKind::DM).version, 2);
    EXPECT_EQ(s.workflow().status_of(ModelKind::DM), ModelStatus::Pending);
    EXPECT_EQ(code_of([&] { s.apply("changes_implemented", obj({{"model", "nope"}}), "chair"); }), "unknown_model");
    EXPECT_EQ(code_of([&] { s.apply("changes_implemented", obj({{"model", "DM"}, {"version", 2}}), "chair"); }),
              "invalid_version");
}

TEST(Session, StaleRunsCannotCompleteATest) {
    auto s = fresh();
    pass_both(s);
    to_conduct_test(s);
    s.apply("test_case_added", obj({{"test_case", test_case_json("fixed")}}), "chair");
    EXPECT_EQ(code_of([&] { s.apply("test_completed", Value::empty_object(), "chair"); }), "no_run");
    const auto run = record_run(s, "offer-stub-fixed");
    EXPECT_EQ(code_of([&] {
                  s.apply("finding_classified", obj({{"run_id", run}, {"finding_ref", "response/0"}, {"locus", "model"}}), "chair");
              }),
              "nothing_to_classify");
    s.apply("test_completed", obj({{"run_id", run}}), "chair");
    s.apply("defects_classified", Value::empty_object(), "chair");
    EXPECT_EQ(s.apply("gate_evaluated", Value::empty_object(), "chair").result.get_string("outcome"), "done");
    EXPECT_EQ(s.workflow().state, StateId::DONE);
}

TEST(Session, DoneRequiresEveryPlannedTestPassing) {
    auto s = fresh();
    pass_both(s);
    to_conduct_test(s);
    s.apply("test_case_added", obj({{"test_case", test_case_json("fixed")}}), "chair");
    s.apply("test_case_added", obj({{"test_case", test_case_json("defective")}}), "chair");
    const auto run = record_run(s, "offer-stub-fixed");
    s.apply("test_completed", obj({{"run_id", run}}), "chair");
    s.apply("defects_classified", Value::empty_object(), "chair");
    EXPECT_EQ(s.apply("gate_evaluated", Value::empty_object(), "chair").result.get_string("outcome"), "continue");
    EXPECT_EQ(s.workflow().state, StateId::P3_CONDUCT_TEST);
}

TEST(Session, UnclassifiedFindingsBlockDerivedCounts) {
    auto s = fresh();
    pass_both(s);
    to_conduct_test(s);
    s.apply("test_case_added", obj({{"test_case", test_case_json("defective")}}), "chair");
    const auto run = record_run(s, "offer-stub-defective");
    s.apply("test_completed", obj({{"run_id", run}}), "chair");
    EXPECT_EQ(code_of([&] { s.apply("defects_classified", Value::empty_object(), "chair"); }), "unclassified_findings");
    s.apply("finding_classified", obj({{"run_id", run}, {"finding_ref", "response/0"}, {"locus", "application"}}), "chair");
    EXPECT_EQ(code_of([&] {
                  s.apply("finding_classified", obj({{"run_id", run}, {"finding_ref", "response/0"}, {"locus", "model"}}), "chair");
              }),
              "already_classified");
    EXPECT_EQ(code_of([&] {
                  s.apply("finding_classified", obj({{"run_id", run}, {"finding_ref", "response/9"}, {"locus", "model"}}), "chair");
              }),
              "not_found");
}

TEST(Session, TimestampsStrictlyIncreaseUnderAFrozenClock) {
    auto init = fixture_init();
    init.id = "T";
    auto s = Session::start(init, default_registry(), UnitTable::default_table(), [] { return std::int64_t{1'000'000}; });
    pass_both(s);
    for (std::size_t i = 1; i < s.audit().size(); ++i) {
        EXPECT_LT(parse_timestamp(s.audit()[i - 1].ts), parse_timestamp(s.audit()[i].ts));
        EXPECT_EQ(s.audit()[i].seq, static_cast<std::int64_t>(i + 1));
    }
}

TEST(Session, RevisionMismatchIsAConflict) {
    auto s = fresh();
    EXPECT_EQ(code_of([&] { s.apply("review_planned", Value::empty_object(), "chair", 7); }), "revision_conflict");
    s.apply("review_planned", Value::empty_object(), "chair", 1);
    EXPECT_EQ(s.revision(), 2);
}

TEST(Session, ReplayDetectsTampering) {
    auto s = fresh();
    to_choose_model(s);
    s.apply("model_chosen", obj({{"model", "IM"}}), "chair");
    s.apply("review_done", Value::empty_object(), "chair");
    s.apply("gate_evaluated", Value::empty_object(), "chair");
    auto events = s.audit();
    EXPECT_EQ(snapshot_text(Session::replay(events, default_registry(), UnitTable::default_table())), snapshot_text(s));
    events.back().result.set("pass", false);
    EXPECT_EQ(code_of([&] { Session::replay(events, default_registry(), UnitTable::default_table()); }), "replay_mismatch");
    events = s.audit();
    events.erase(events.begin() + 2);
    EXPECT_EQ(code_of([&] { Session::replay(events, default_registry(), UnitTable::default_table()); }), "replay_mismatch");
}

// Random legal sessions: the audit log always rebuilds the same snapshot.
TEST(Session, ReplayReconstructsRandomSessions) {
    std::mt19937 rng(11);
    int sessions_checked = 0;
    for (int round = 0; round < 40; ++round) {
        auto s = fresh("R" + std::to_string(round));
        auto pick = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
        s.apply("test_case_added", obj({{"test_case", test_case_json(pick(2) ? "fixed" : "defective")}}), "chair");
        for (int step = 0; step < 80 && s.workflow().state != StateId::DONE; ++step) {
            // Side activity: defects and ratings.
            if (s.selection() && pick(5) == 0) {
                const auto& m = s.models()[pick(2)];
                s.apply("defect_opened", obj({{"qc_id", "completeness"}, {"model", m.id}, {"description", "x"}}), "chair");
            }
            for (const auto& d : s.matrix().defects()) {
                if (d.status == DefectStatus::Open && pick(2) == 0) {
                    s.apply(pick(4) ? "defect_resolved" : "defect_rejected",
                            obj({{"defect_id", d.id}, {"note", "n"}, {"reason", "duplicate"}}), "chair");
                    break;
                }
            }
            if (s.selection() && pick(6) == 0) {
                s.apply("rating_added", obj({{"qc_id", "completeness"}, {"model", "IM"}, {"rating", 1 + pick(5)}}), "chair");
            }
            const auto legal = s.legal_events();
            ASSERT_FALSE(legal.empty());
            const std::string type = legal[pick(static_cast<int>(legal.size()))];
            Value payload = Value::empty_object();
            if (type == "model_chosen") {
                payload.set("model", s.workflow().status_of(ModelKind::IM) == ModelStatus::Passed ? "DM" : "IM");
            } else if (type == "changes_implemented") {
                payload.set("model", pick(2) ? "IM" : "DM");
            } else if (type == "test_type_selected") {
                payload.set("test_type", "formal");
            } else if (type == "test_completed") {
                const auto run = record_run(s, s.tests().front().id);
                const auto& r = s.run(run).run;
                for (const auto& f : r.findings()) {
                    s.apply("finding_classified",
                            obj({{"run_id", run}, {"finding_ref", f.ref}, {"locus", pick(2) ? "model" : "application"}}), "chair");
                }
            }
            try {
                s.apply(type, payload, "chair");
            } catch (const DomainError& e) {
                // Only decisions the session computes may refuse.
                EXPECT_TRUE(e.code() == "illegal_transition") << type << ": " << e.what();
            }
        }
        const auto replayed = Session::replay(s.audit(), default_registry(), UnitTable::default_table());
        ASSERT_EQ(snapshot_text(replayed), snapshot_text(s)) << "round " << round;
        ++sessions_checked;
    }
    EXPECT_EQ(sessions_checked, 40);
}

TEST(ReviewAssist, MapsMechanismsToQcs) {
    const auto dir = case_study::fixture_dir();
    std::vector<Document> v1{case_study::load(dir / "dm/v1/offer_a.json"), case_study::load(dir / "dm/v1/offer_b.json")};
    const auto found = review_data_model(v1, parse_path("/flexibilitySpaceID"));
    ASSERT_EQ(found.size(), 2u);
    EXPECT_EQ(found[0].qc_id, "singularity");
    EXPECT_EQ(found[0].locator, "/modelVersion");
    EXPECT_EQ(found[1].qc_id, "instance_uniqueness");

    const auto schema = compile_schema(parse_document(
        R"({"type":"object","required":["a"],"properties":{"a":{"type":"string","default":"x"},"b":{"default":1}}})"));
    const auto ess = review_data_model({}, std::nullopt, &schema);
    ASSERT_EQ(ess.size(), 1u);
    EXPECT_EQ(ess[0].qc_id, "essentialness");
    EXPECT_EQ(ess[0].locator, "/a");
}

// ------------------------------------------------------------------ store

class StoreTest : public ::testing::Test {
  protected:
    void SetUp() override {
        root = fs::temp_directory_path() / ("mg_store_" + std::to_string(::getpid()) + "_" +
                                            ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(root);
    }
    void TearDown() override { fs::remove_all(root); }
    fs::path root;
};

TEST_F(StoreTest, CreatesLayoutAndAssignsIds) {
    Store st(root);
    EXPECT_TRUE(fs::exists(root / "registry.json"));
    EXPECT_TRUE(fs::exists(root / "units.json"));
    const auto a = st.create_session(fixture_init(), "chair");
    const auto b = st.create_session(fixture_init(), "chair");
    EXPECT_EQ(a, "S1");
    EXPECT_EQ(b, "S2");
    for (const char* f : {"session.json", "audit.jsonl", "defects.json"}) EXPECT_TRUE(fs::exists(root / "sessions/S1" / f));
    auto named = fixture_init();
    named.id = "S1";
    EXPECT_EQ(code_of([&] { st.create_session(named, "chair"); }), "duplicate_session");
    EXPECT_EQ(code_of([&] { st.session_json("S9"); }), "not_found");
}

TEST_F(StoreTest, RestartRebuildsSnapshotByteForByte) {
    std::string before;
    {
        Store st(root, ticking());
        const auto id = st.create_session(fixture_init(), "chair");
        st.apply(id, "review_planned", Value::empty_object(), "chair");
        st.apply(id, "qcs_selected", Value::empty_object(), "chair");
        st.apply(id, "model_chosen", obj({{"model", "IM"}}), "chair");
        st.apply(id, "defect_opened", obj({{"qc_id", "naturalness"}, {"model", "IM"}, {"description", "d"}}), "chair");
        before = case_study::slurp(root / "sessions/S1/session.json");
    }
    // Crash after the audit append, before the snapshot rewrite; plus a torn line.
    fs::remove(root / "sessions/S1/session.json");
    {
        std::ofstream torn(root / "sessions/S1/audit.jsonl", std::ios::app);
        torn << R"({"seq":6,"ts":"2030-01)";
    }
    Store again(root);
    EXPECT_EQ(serialize(again.session_json("S1"), 2) + "\n", before);
    EXPECT_EQ(case_study::slurp(root / "sessions/S1/session.json"), before);
    EXPECT_EQ(again.read_audit("S1").size(), 5u);
    // The log is usable again after recovery.
    again.apply("S1", "review_done", Value::empty_object(), "chair");
    EXPECT_EQ(again.read_audit("S1").size(), 6u);
}

TEST_F(StoreTest, CaseStudyReachesDoneAndReplays) {
    case_study::Backend backend;
    Store st(root);
    case_study::StoreDriver driver(st);
    const auto out = case_study::run(driver, backend);
    EXPECT_EQ(out.final_state, "DONE");
    ASSERT_EQ(out.defects.size(), 4u);
    const std::vector<std::pair<std::string, std::string>> expected{{"singularity", "duplicate_key"},
                                                                    {"instance_uniqueness", "uniqueness"},
                                                                    {"completeness", "syntax/required"},
                                                                    {"semantic_correctness", "semantics/range"}};
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(out.defects[i].qc_id, expected[i].first);
        EXPECT_EQ(out.defects[i].mechanism, expected[i].second);
        EXPECT_EQ(out.defects[i].status, "resolved");
    }
    EXPECT_EQ(out.defects[0].resolved_in, 2);
    EXPECT_EQ(out.defects[3].resolved_in, 3);
    EXPECT_EQ(out.run_verdicts, (std::vector<std::string>{"FAIL_SYNTAX", "PASS"}));

    const auto snap = case_study::slurp(root / "sessions" / out.session_id / "session.json");
    const auto replayed = Session::replay(st.read_audit(out.session_id), st.registry(), st.units());
    EXPECT_EQ(serialize(replayed.to_json(), 2) + "\n", snap);
    EXPECT_TRUE(fs::exists(root / "sessions" / out.session_id / "runs" / (out.session_id + ".R1.txt")));
}
