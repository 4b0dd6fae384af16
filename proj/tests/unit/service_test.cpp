#include <gtest/gtest.h>

#include "support/case_study.hpp"

using namespace modelgate;
namespace fs = std::filesystem;

namespace {

class ServiceTest : public ::testing::Test {
  protected:
    void SetUp() override {
        root = fs::temp_directory_path() / ("mg_http_" + std::to_string(::getpid()) + "_" +
                                            ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(root);
        store = std::make_unique<Store>(root);
        service = std::make_unique<HttpService>(*store);
        port = service->start("127.0.0.1", 0);
        client = std::make_unique<httplib::Client>("127.0.0.1", port);
    }
    void TearDown() override {
        service->stop();
        service.reset();
        store.reset();
        fs::remove_all(root);
    }

    std::pair<int, Value> post(const std::string& path, const std::string& body) {
        auto r = client->Post(path, body, "application/json");
        if (!r) throw std::runtime_error("transport");
        return {r->status, parse_document(r->body).root};
    }
    std::pair<int, Value> post(const std::string& path, const Value& body) { return post(path, serialize(body)); }
    std::pair<int, Value> get(const std::string& path) {
        auto r = client->Get(path);
        if (!r) throw std::runtime_error("transport");
        return {r->status, parse_document(r->body).root};
    }
    std::string new_session() {
        auto [status, body] = post("/sessions", case_study::load(case_study::fixture_dir() / "session.json").root);
        EXPECT_EQ(status, 201);
        return body.get_string("id");
    }
    Value event(const std::string& type, Value payload = Value::empty_object()) {
        return Value::object({{"type", type}, {"payload", std::move(payload)}});
    }

    fs::path root;
    std::unique_ptr<Store> store;
    std::unique_ptr<HttpService> service;
    std::unique_ptr<httplib::Client> client;
    int port = 0;
};

}  // namespace

TEST_F(ServiceTest, RegistryAndWorkflow) {
    auto [s1, reg] = get("/registry");
    EXPECT_EQ(s1, 200);
    EXPECT_EQ(reg.as_array().size(), 21u);
    auto [s2, wf] = get("/workflow");
    EXPECT_EQ(s2, 200);
    EXPECT_EQ(wf.get_string("initial"), "P2_PLAN_REVIEW");
}

TEST_F(ServiceTest, ValidateReportsFailureWith200) {
    auto [status, body] = post("/validate", Value::object({{"schema", parse_document(R"({"required":["a"]})").root},
                                                           {"instance", Value::empty_object()}}));
    EXPECT_EQ(status, 200);
    EXPECT_EQ(body.get_string("verdict"), "FAIL");
    auto [bad, err] = post("/validate", Value::object({{"schema", parse_document(R"({"type":"banana"})").root},
                                                       {"instance", Value::empty_object()}}));
    EXPECT_EQ(bad, 422);
    EXPECT_EQ(err.get_string("error"), "schema_compile_error");
    EXPECT_FALSE(err.at("issues").as_array().empty());
}

TEST_F(ServiceTest, MalformedBodyIs400) {
    auto [status, body] = post("/validate", std::string("{not json"));
    EXPECT_EQ(status, 400);
    EXPECT_EQ(body.get_string("error"), "bad_request");
}

TEST_F(ServiceTest, UnknownIdsAre404) {
    EXPECT_EQ(get("/sessions/S77").first, 404);
    EXPECT_EQ(get("/runs/S1.R4").first, 404);
    EXPECT_EQ(post("/tests/S1.nope/run", Value::empty_object()).first, 404);
}

TEST_F(ServiceTest, IllegalEventIs422) {
    const auto sid = new_session();
    auto [status, body] = post("/sessions/" + sid + "/events", event("gate_evaluated"));
    EXPECT_EQ(status, 422);
    EXPECT_EQ(body.get_string("error"), "illegal_transition");
    auto [s2, b2] = post("/sessions/" + sid + "/events", event("teleport"));
    EXPECT_EQ(s2, 422);
    EXPECT_EQ(b2.get_string("error"), "unknown_event");
}

TEST_F(ServiceTest, StaleRevisionIs409) {
    const auto sid = new_session();
    post("/sessions/" + sid + "/events", event("review_planned"));
    auto [ok, sel] = post("/sessions/" + sid + "/events", event("qcs_selected"));
    ASSERT_EQ(ok, 200);
    const auto rev = sel.at("revision").as_number().to_int64().value();
    Value defect = Value::object({{"qc_id", "completeness"}, {"model", "IM"}, {"description", "a"}, {"revision", rev}});
    auto [first, b1] = post("/sessions/" + sid + "/defects", defect);
    EXPECT_EQ(first, 201);
    auto [second, b2] = post("/sessions/" + sid + "/defects", defect);
    EXPECT_EQ(second, 409);
    EXPECT_EQ(b2.get_string("error"), "revision_conflict");
    auto [s3, list] = get("/sessions/" + sid + "/defects");
    EXPECT_EQ(list.at("defects").as_array().size(), 1u);
}

TEST_F(ServiceTest, MatrixCarriesCsv) {
    const auto sid = new_session();
    auto [status, body] = get("/sessions/" + sid + "/matrix");
    EXPECT_EQ(status, 200);
    EXPECT_NE(body.get_string("csv").find("completeness"), std::string::npos);
}

TEST_F(ServiceTest, CaseStudyMatchesDirectStore) {
    case_study::Backend backend;
    case_study::HttpDriver http(port);
    const auto via_http = case_study::run(http, backend);

    const fs::path other = root.string() + "_direct";
    fs::remove_all(other);
    Store direct(other);
    case_study::StoreDriver sd(direct);
    const auto via_store = case_study::run(sd, backend);
    fs::remove_all(other);

    EXPECT_EQ(via_http.final_state, "DONE");
    EXPECT_EQ(via_http.trace, via_store.trace);
    EXPECT_EQ(via_http.run_verdicts, via_store.run_verdicts);
    ASSERT_EQ(via_http.defects.size(), via_store.defects.size());
    for (std::size_t i = 0; i < via_http.defects.size(); ++i) {
        EXPECT_EQ(via_http.defects[i].qc_id, via_store.defects[i].qc_id);
        EXPECT_EQ(via_http.defects[i].mechanism, via_store.defects[i].mechanism);
        EXPECT_EQ(via_http.defects[i].status, "resolved");
    }
    auto [s, audit] = get("/sessions/" + via_http.session_id + "/audit");
    EXPECT_EQ(s, 200);
    EXPECT_EQ(audit.at("events").as_array().size(), store->read_audit(via_http.session_id).size());
    auto r = client->Get("/runs/" + via_http.session_id + ".R1?format=text");
    ASSERT_TRUE(r);
    EXPECT_NE(r->body.find("FAIL_SYNTAX"), std::string::npos);
}
