#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "modelgate/errors.hpp"
#include "modelgate/schema.hpp"
#include "modelgate/semantics.hpp"

namespace modelgate {

class TestCaseError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class ResponderKind { Stub, Template, External };

struct Responder {
    ResponderKind kind = ResponderKind::Stub;
    Value response;   // Stub and Template
    std::string url;  // External
};

/// One request/response exchange with its judging criteria. Every
/// referenced artifact is held inline once loaded.
struct TestCase {
    std::string id;
    std::string description;
    Value request;
    Value request_schema_source;
    Value response_schema_source;
    Value rules_source;
    std::optional<Value> units_source;
    Responder responder;

    std::optional<CompiledSchema> request_schema;  // always set once loaded
    std::optional<CompiledSchema> response_schema;
    SemanticRuleSet rules;
    UnitTable units;

    /// Inline form; load_test_case(to_json()) reproduces the case.
    Value to_json() const;
};

/// Members id, description, request, request_schema, response_schema, rules,
/// optional units, responder {stub | template | external}. Artifact members
/// are inline JSON or a file path relative to `base_dir`. Without a units
/// member the case uses `default_units`, or the built-in table when null.
TestCase load_test_case(const Value& doc, const std::filesystem::path& base_dir = {},
                        const UnitTable* default_units = nullptr);
TestCase load_test_case_file(const std::filesystem::path& file, const UnitTable* default_units = nullptr);

struct ExchangeTranscript {
    std::string test_case_id;
    Value request_sent;
    std::optional<std::string> response_body;  // raw bytes as received
    std::string transport_error;               // empty when the exchange completed
    std::string started_at;
    std::string finished_at;

    Value to_json() const;
    static ExchangeTranscript from_json(const Value& v);
};

/// Wall-clock source for transcript timestamps (RFC 3339).
using TimestampFn = std::function<std::string()>;
std::string utc_now_rfc3339();

/// Performs the exchange. Transport failures are recorded, never thrown.
ExchangeTranscript run_exchange(const TestCase& tc, const TimestampFn& now = utc_now_rfc3339);

/// `${/path}` placeholders in strings are replaced from `request`. A string
/// that is exactly one placeholder takes the referenced value as is.
Value expand_template(const Value& templ, const Value& request);

enum class Verdict { Pass, FailSyntax, FailSemantics, FailTransport };
const char* to_string(Verdict v);
Verdict verdict_from(std::string_view s);

enum class Locus { Application, Model };
const char* to_string(Locus l);
Locus locus_from(std::string_view s);

struct Classification {
    std::string finding_ref;
    Locus locus = Locus::Application;
    std::string defect_id;  // set for model findings
    std::string note;
};

/// A classifiable finding: "request/<i>", "response/<i>", "semantics/<i>" or
/// "transport".
struct FindingRef {
    std::string ref;
    std::string kind;     // "syntax", "semantics", "transport"
    std::string path;     // instance path or subject path
    std::string keyword;  // schema keyword, or "range"/"unit" for semantics
    std::string message;
};

struct TestRun {
    std::string id;
    std::string test_case_id;
    ExchangeTranscript transcript;
    ValidationReport syntax_request;
    ValidationReport syntax_response;
    std::optional<SemanticReport> semantics;
    Verdict verdict = Verdict::Pass;
    std::vector<Classification> classifications;

    std::vector<FindingRef> findings() const;
    std::optional<FindingRef> finding(std::string_view ref) const;

    Value to_json() const;
    static TestRun from_json(const Value& v);
};

/// Judges a transcript. Pure: same inputs give the same run.
TestRun judge(const TestCase& tc, const ExchangeTranscript& transcript, std::string run_id);

/// QC a model-locus finding is filed under by default.
std::string default_qc_for(const FindingRef& f);

/// "json" or "text"; throws std::invalid_argument otherwise.
std::string report(const TestRun& run, std::string_view format);

}  // namespace modelgate
