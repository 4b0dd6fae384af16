#include "modelgate/harness.hpp"

#include <fstream>
#include <sstream>

#include "httplib.h"
#include "modelgate/clock.hpp"

namespace modelgate {

namespace {

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw TestCaseError("cannot read '" + p.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Value load_json_file(const std::filesystem::path& p) {
    const std::string text = read_file(p);
    try {
        return parse_document(text, p.string()).root;
    } catch (const ParseError& e) {
        throw TestCaseError(p.string() + ":" + std::to_string(e.line()) + ":" + std::to_string(e.column()) + ": " +
                            e.detail());
    }
}

// Strings name files relative to the case; anything else is inline.
Value artifact(const Value& doc, const char* name, const std::filesystem::path& base, bool required) {
    const Value* v = doc.find(name);
    if (!v) {
        if (required) throw TestCaseError(std::string("test case lacks '") + name + "'");
        return Value();
    }
    if (v->is_string()) return load_json_file(base / v->as_string());
    return *v;
}

CompiledSchema compile_member(const Value& source, const char* name) {
    try {
        return compile_schema(Document{source, name, {}});
    } catch (const CompileError& e) {
        std::string msg = std::string(name) + " does not compile:";
        for (const auto& i : e.issues()) msg += std::string(" [") + to_string(i.kind) + " at '" + i.path + "': " + i.message + "]";
        throw TestCaseError(msg);
    }
}

bool valid_id(const std::string& id) {
    if (id.empty()) return false;
    for (char c : id) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') return false;
    }
    return true;
}

void substitute(std::string& out, std::string_view s, const Value& request) {
    std::size_t i = 0;
    while (i < s.size()) {
        const auto open = s.find("${", i);
        const auto close = open == std::string_view::npos ? open : s.find('}', open);
        if (close == std::string_view::npos) {
            out.append(s.substr(i));
            return;
        }
        out.append(s.substr(i, open - i));
        const std::string_view expr = s.substr(open + 2, close - open - 2);
        const Value* v = nullptr;
        try {
            v = lookup(request, parse_path(expr));
        } catch (const PathSyntaxError&) {
        }
        if (v) out += v->is_string() ? v->as_string() : serialize(*v);
        i = close + 1;
    }
}

}  // namespace

// ------------------------------------------------------------ test cases

TestCase load_test_case(const Value& doc, const std::filesystem::path& base_dir, const UnitTable* default_units) {
    if (!doc.is_object()) throw TestCaseError("test case must be a JSON object");
    TestCase tc;
    tc.id = doc.get_string("id");
    if (!valid_id(tc.id)) throw TestCaseError("test case id must be non-empty [A-Za-z0-9_-]");
    tc.description = doc.get_string("description");
    tc.request = artifact(doc, "request", base_dir, true);
    tc.request_schema_source = artifact(doc, "request_schema", base_dir, true);
    tc.response_schema_source = artifact(doc, "response_schema", base_dir, true);
    tc.rules_source = doc.contains("rules") ? artifact(doc, "rules", base_dir, true) : Value::empty_array();
    if (doc.contains("units")) tc.units_source = artifact(doc, "units", base_dir, true);

    tc.request_schema = compile_member(tc.request_schema_source, "request_schema");
    tc.response_schema = compile_member(tc.response_schema_source, "response_schema");
    try {
        tc.units = tc.units_source ? load_unit_table(*tc.units_source)
                   : default_units ? *default_units
                                   : UnitTable::default_table();
    } catch (const UnitTableError& e) {
        throw TestCaseError(std::string("units: ") + e.what());
    }
    try {
        tc.rules = parse_rules(tc.rules_source, tc.units);
    } catch (const RuleError& e) {
        throw TestCaseError(std::string("rules: ") + e.what());
    }

    const Value* r = doc.find("responder");
    if (!r || !r->is_object()) throw TestCaseError("test case needs a responder object");
    const int kinds = r->contains("stub") + r->contains("template") + r->contains("external");
    if (kinds != 1) throw TestCaseError("responder needs exactly one of stub, template or external");
    if (const Value* ext = r->find("external")) {
        if (!ext->is_string() || ext->as_string().rfind("http://", 0) != 0) {
            throw TestCaseError("external responder must be an http:// URL");
        }
        tc.responder = {ResponderKind::External, Value(), ext->as_string()};
    } else if (r->contains("stub")) {
        tc.responder = {ResponderKind::Stub, artifact(*r, "stub", base_dir, true), {}};
    } else {
        tc.responder = {ResponderKind::Template, artifact(*r, "template", base_dir, true), {}};
    }
    return tc;
}

TestCase load_test_case_file(const std::filesystem::path& file, const UnitTable* default_units) {
    return load_test_case(load_json_file(file), file.parent_path(), default_units);
}

Value TestCase::to_json() const {
    Value v = Value::object({{"id", id},
                             {"description", description},
                             {"request", request},
                             {"request_schema", request_schema_source},
                             {"response_schema", response_schema_source},
                             {"rules", rules_source}});
    if (units_source) v.set("units", *units_source);
    switch (responder.kind) {
        case ResponderKind::Stub: v.set("responder", Value::object({{"stub", responder.response}})); break;
        case ResponderKind::Template: v.set("responder", Value::object({{"template", responder.response}})); break;
        case ResponderKind::External: v.set("responder", Value::object({{"external", responder.url}})); break;
    }
    return v;
}

// -------------------------------------------------------------- exchange

std::string utc_now_rfc3339() { return format_timestamp(system_micros()); }

Value expand_template(const Value& templ, const Value& request) {
    switch (templ.kind()) {
        case ValueKind::String: {
            const auto& s = templ.as_string();
            if (s.size() > 3 && s.rfind("${", 0) == 0 && s.back() == '}' && s.find('}') == s.size() - 1) {
                try {
                    if (const Value* v = lookup(request, parse_path(std::string_view(s).substr(2, s.size() - 3)))) return *v;
                } catch (const PathSyntaxError&) {
                }
                return Value();
            }
            std::string out;
            substitute(out, s, request);
            return out;
        }
        case ValueKind::Array: {
            Array a;
            for (const auto& item : templ.as_array()) a.push_back(expand_template(item, request));
            return a;
        }
        case ValueKind::Object: {
            Object o;
            for (const auto& m : templ.as_object()) o.push_back({m.name, expand_template(m.value, request)});
            return o;
        }
        default: return templ;
    }
}

ExchangeTranscript run_exchange(const TestCase& tc, const TimestampFn& now) {
    ExchangeTranscript t;
    t.test_case_id = tc.id;
    t.request_sent = tc.request;
    t.started_at = now();
    switch (tc.responder.kind) {
        case ResponderKind::Stub: t.response_body = serialize(tc.responder.response, 2); break;
        case ResponderKind::Template:
            t.response_body = serialize(expand_template(tc.responder.response, tc.request), 2);
            break;
        case ResponderKind::External: {
            const std::string& url = tc.responder.url;
            const auto slash = url.find('/', 7);
            const std::string origin = url.substr(0, slash);
            const std::string path = slash == std::string::npos ? "/" : url.substr(slash);
            httplib::Client client(origin);
            client.set_connection_timeout(5);
            client.set_read_timeout(10);
            auto res = client.Post(path, serialize(tc.request), "application/json");
            if (!res) {
                t.transport_error = "transport error: " + httplib::to_string(res.error());
            } else if (res->status < 200 || res->status >= 300) {
                t.transport_error = "HTTP status " + std::to_string(res->status);
            } else {
                t.response_body = res->body;
            }
            break;
        }
    }
    t.finished_at = now();
    return t;
}

Value ExchangeTranscript::to_json() const {
    return Value::object({{"test_case_id", test_case_id},
                          {"request_sent", request_sent},
                          {"response_body", response_body ? Value(*response_body) : Value()},
                          {"transport_error", transport_error},
                          {"started_at", started_at},
                          {"finished_at", finished_at}});
}

ExchangeTranscript ExchangeTranscript::from_json(const Value& v) {
    ExchangeTranscript t;
    t.test_case_id = v.at("test_case_id").as_string();
    t.request_sent = v.at("request_sent");
    if (const Value* b = v.find("response_body"); b && b->is_string()) t.response_body = b->as_string();
    t.transport_error = v.get_string("transport_error");
    t.started_at = v.get_string("started_at");
    t.finished_at = v.get_string("finished_at");
    return t;
}

// --------------------------------------------------------------- judging

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "PASS";
        case Verdict::FailSyntax: return "FAIL_SYNTAX";
        case Verdict::FailSemantics: return "FAIL_SEMANTICS";
        case Verdict::FailTransport: return "FAIL_TRANSPORT";
    }
    return "?";
}

Verdict verdict_from(std::string_view s) {
    for (auto v : {Verdict::Pass, Verdict::FailSyntax, Verdict::FailSemantics, Verdict::FailTransport}) {
        if (s == to_string(v)) return v;
    }
    throw std::invalid_argument("unknown verdict '" + std::string(s) + "'");
}

const char* to_string(Locus l) { return l == Locus::Application ? "application" : "model"; }

Locus locus_from(std::string_view s) {
    if (s == "application") return Locus::Application;
    if (s == "model") return Locus::Model;
    throw DomainError("invalid_locus", "locus must be application or model");
}

TestRun judge(const TestCase& tc, const ExchangeTranscript& transcript, std::string run_id) {
    TestRun run;
    run.id = std::move(run_id);
    run.test_case_id = tc.id;
    run.transcript = transcript;
    run.syntax_request = tc.request_schema->validate(transcript.request_sent);
    std::optional<Value> response;
    if (!transcript.transport_error.empty() || !transcript.response_body) {
        run.syntax_response.pass = false;
        run.syntax_response.errors.push_back(
            {PathExpr(), "transport", transcript.transport_error.empty() ? "no response" : transcript.transport_error, ""});
    } else {
        try {
            response = parse_document(*transcript.response_body).root;
        } catch (const ParseError& e) {
            run.syntax_response.pass = false;
            run.syntax_response.errors.push_back({PathExpr(), "parse",
                                                  "response is not JSON (line " + std::to_string(e.line()) +
                                                      ", column " + std::to_string(e.column()) + "): " + e.detail(),
                                                  ""});
        }
    }
    if (response) {
        run.syntax_response = tc.response_schema->validate(*response);
        run.semantics = evaluate_rules(tc.rules, transcript.request_sent, *response, tc.units);
    }
    if (!transcript.transport_error.empty()) {
        run.verdict = Verdict::FailTransport;
    } else if (!run.syntax_request.pass || !run.syntax_response.pass) {
        run.verdict = Verdict::FailSyntax;
    } else if (!run.semantics->pass) {
        run.verdict = Verdict::FailSemantics;
    } else {
        run.verdict = Verdict::Pass;
    }
    return run;
}

std::vector<FindingRef> TestRun::findings() const {
    std::vector<FindingRef> out;
    for (std::size_t i = 0; i < syntax_request.errors.size(); ++i) {
        const auto& e = syntax_request.errors[i];
        out.push_back({"request/" + std::to_string(i), "syntax", e.instance_path.to_string(), e.keyword, e.message});
    }
    for (std::size_t i = 0; i < syntax_response.errors.size(); ++i) {
        const auto& e = syntax_response.errors[i];
        const std::string kind = e.keyword == "transport" ? "transport" : "syntax";
        const std::string ref = kind == "transport" ? kind : "response/" + std::to_string(i);
        out.push_back({ref, kind, e.instance_path.to_string(), e.keyword, e.message});
    }
    if (semantics) {
        for (std::size_t i = 0; i < semantics->findings.size(); ++i) {
            const auto& f = semantics->findings[i];
            if (f.outcome != Outcome::Fail) continue;
            const bool unit = f.note.find("unit") != std::string::npos || f.note.find("dimension") != std::string::npos;
            out.push_back({"semantics/" + std::to_string(i), "semantics", f.subject_path, unit ? "unit" : "range",
                           f.rule_id + ": " + f.note});
        }
    }
    return out;
}

std::optional<FindingRef> TestRun::finding(std::string_view ref) const {
    for (auto& f : findings()) {
        if (f.ref == ref) return f;
    }
    return std::nullopt;
}

std::string default_qc_for(const FindingRef& f) {
    if (f.kind == "syntax" && f.keyword == "required") return "completeness";
    return "semantic_correctness";
}

Value TestRun::to_json() const {
    Value refs = Value::empty_array();
    for (const auto& f : findings()) {
        refs.push_back(Value::object({{"ref", f.ref},
                                      {"kind", f.kind},
                                      {"path", f.path},
                                      {"keyword", f.keyword},
                                      {"message", f.message}}));
    }
    Value cls = Value::empty_array();
    for (const auto& c : classifications) {
        cls.push_back(Value::object(
            {{"finding_ref", c.finding_ref}, {"locus", to_string(c.locus)}, {"defect_id", c.defect_id}, {"note", c.note}}));
    }
    return Value::object({{"id", id},
                          {"test_case_id", test_case_id},
                          {"verdict", to_string(verdict)},
                          {"syntax_request", syntax_request.to_json()},
                          {"syntax_response", syntax_response.to_json()},
                          {"semantics", semantics ? semantics->to_json() : Value()},
                          {"findings", std::move(refs)},
                          {"classifications", std::move(cls)},
                          {"transcript", transcript.to_json()}});
}

TestRun TestRun::from_json(const Value& v) {
    TestRun r;
    r.id = v.at("id").as_string();
    r.test_case_id = v.at("test_case_id").as_string();
    r.verdict = verdict_from(v.at("verdict").as_string());
    r.syntax_request = ValidationReport::from_json(v.at("syntax_request"));
    r.syntax_response = ValidationReport::from_json(v.at("syntax_response"));
    if (const Value* s = v.find("semantics"); s && !s->is_null()) r.semantics = SemanticReport::from_json(*s);
    for (const auto& c : v.at("classifications").as_array()) {
        r.classifications.push_back({c.at("finding_ref").as_string(), locus_from(c.at("locus").as_string()),
                                     c.get_string("defect_id"), c.get_string("note")});
    }
    r.transcript = ExchangeTranscript::from_json(v.at("transcript"));
    return r;
}

// --------------------------------------------------------------- reports

std::string report(const TestRun& run, std::string_view format) {
    if (format == "json") return serialize(run.to_json(), 2) + "\n";
    if (format != "text") throw std::invalid_argument("unknown report format '" + std::string(format) + "'");
    std::ostringstream out;
    auto verdict_of = [](bool pass) { return pass ? "PASS" : "FAIL"; };
    out << "run: " << run.id << "\n";
    out << "test case: " << run.test_case_id << "\n";
    out << "verdict: " << to_string(run.verdict) << "\n";
    out << "syntax (request): " << verdict_of(run.syntax_request.pass) << "\n";
    out << "syntax (response): " << verdict_of(run.syntax_response.pass) << "\n";
    out << "semantics: " << (run.semantics ? verdict_of(run.semantics->pass) : "not evaluated") << "\n";
    if (!run.transcript.transport_error.empty()) out << "transport: " << run.transcript.transport_error << "\n";
    const auto findings = run.findings();
    out << "findings: " << findings.size() << "\n";
    for (const auto& f : findings) {
        out << "  " << f.ref << " [" << f.kind << "/" << f.keyword << "] at '" << f.path << "': " << f.message << "\n";
    }
    if (run.semantics) {
        for (const auto& f : run.semantics->findings) {
            out << "  rule " << f.rule_id << " " << to_string(f.outcome) << " at '" << f.subject_path << "'";
            if (f.observed) {
                out << " observed " << serialize(f.observed->value) << (f.observed->unit ? " " + *f.observed->unit : "");
            }
            for (const auto& [role, b] : f.bounds) {
                out << "; " << role << " " << serialize(b.value) << (b.unit ? " " + *b.unit : "");
            }
            if (!f.note.empty()) out << " (" << f.note << ")";
            out << "\n";
        }
    }
    if (!run.classifications.empty()) {
        out << "classifications:\n";
        for (const auto& c : run.classifications) {
            out << "  " << c.finding_ref << " -> " << to_string(c.locus);
            if (!c.defect_id.empty()) out << " (defect " << c.defect_id << ")";
            if (!c.note.empty()) out << ": " << c.note;
            out << "\n";
        }
    }
    return out.str();
}

}  // namespace modelgate
