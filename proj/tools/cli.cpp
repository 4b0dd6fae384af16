#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "modelgate/service.hpp"

namespace modelgate {

namespace {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised for inputs the command rejects (exit 2).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A check ran and failed (exit 1) with nothing more to print.
struct Failed {};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << text;
    if (!out) throw IoError("write failed: '" + path + "'");
}

Document parse_input(const std::string& path) {
    const std::string text = read_file(path);
    try {
        return parse_document(text, path);
    } catch (const ParseError& e) {
        throw UsageError(path + ":" + std::to_string(e.line()) + ":" + std::to_string(e.column()) + ": " + e.detail());
    }
}

// Inline JSON, or "@file".
Value json_arg(const std::string& arg) {
    if (arg.empty()) return Value::empty_object();
    if (arg[0] == '@') return parse_input(arg.substr(1)).root;
    try {
        return parse_document(arg, "argument").root;
    } catch (const ParseError& e) {
        throw UsageError("payload is not JSON: " + e.detail());
    }
}

std::string default_actor() {
    if (const char* u = std::getenv("USER"); u && *u) return u;
    return "cli";
}

std::pair<std::string, int> split_addr(const std::string& addr) {
    const auto colon = addr.rfind(':');
    if (colon == std::string::npos) throw UsageError("--addr must be HOST:PORT");
    try {
        return {addr.substr(0, colon), std::stoi(addr.substr(colon + 1))};
    } catch (const std::exception&) {
        throw UsageError("--addr must be HOST:PORT");
    }
}

void print_session(std::ostream& out, const Value& s) {
    const Value& wf = s.at("workflow");
    out << "session " << s.get_string("id") << " (revision " << serialize(s.at("revision")) << ")\n";
    out << "state: " << wf.get_string("state") << " [" << wf.get_string("step") << "]\n";
    for (const auto& m : s.at("models").as_array()) {
        out << "model " << m.get_string("kind") << " " << m.get_string("id") << " v" << serialize(m.at("version"))
            << ": " << wf.at("model_status").get_string(m.get_string("kind")) << "\n";
    }
    out << "legal events:";
    for (const auto& e : s.at("legal_events").as_array()) out << " " << e.as_string();
    out << "\n";
    for (const auto& [kind, g] : s.at("gate_preview").as_object()) {
        out << "gate " << kind << ": " << (g.at("pass").as_bool() ? "pass" : "blocked");
        for (const auto& q : g.at("blocking").as_array()) out << " " << q.as_string();
        out << "\n";
    }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"modelgate: quality review and conformance testing of information and data models"};
    app.require_subcommand(1);
    std::string store_dir = Store::default_root().string();
    std::string actor = default_actor();
    app.add_option("--store", store_dir, "store directory (default $MODELGATE_STORE or ./modelgate-store)");
    app.add_option("--actor", actor, "name recorded in the audit log");

    // session
    auto* session = app.add_subcommand("session", "evaluation sessions");
    session->require_subcommand(1);
    std::string s_file, s_id, s_event, s_payload;
    std::optional<std::int64_t> s_revision;
    bool s_json = false;
    auto* s_new = session->add_subcommand("new", "start a session from a JSON file");
    s_new->add_option("--file", s_file, "session definition (id, use_case, participants, models)")->required();
    auto* s_status = session->add_subcommand("status", "show a session");
    s_status->add_option("--id", s_id)->required();
    s_status->add_flag("--json", s_json, "print session.json");
    auto* s_advance = session->add_subcommand("advance", "apply a workflow event");
    s_advance->add_option("--id", s_id)->required();
    s_advance->add_option("--event", s_event)->required();
    s_advance->add_option("--payload", s_payload, "JSON object or @file");
    s_advance->add_option("--revision", s_revision, "expected revision");
    auto* s_history = session->add_subcommand("history", "print the audit log");
    s_history->add_option("--id", s_id)->required();
    auto* s_template = session->add_subcommand("template", "print a session definition skeleton");

    // qc
    auto* qc = app.add_subcommand("qc", "quality characteristics");
    qc->require_subcommand(1);
    std::string q_session, q_qc, q_model, q_rater, q_kind;
    std::vector<std::string> q_exclude;
    int q_rating = 0;
    auto* q_list = qc->add_subcommand("list", "list the registry");
    q_list->add_option("--kind", q_kind, "IM or DM");
    auto* q_select = qc->add_subcommand("select", "select QCs for a session (step 4)");
    q_select->add_option("--session", q_session)->required();
    q_select->add_option("--exclude", q_exclude, "QC_ID=rationale");
    q_select->add_option("--revision", s_revision);
    auto* q_rate = qc->add_subcommand("rate", "record an advisory rating");
    q_rate->add_option("--session", q_session)->required();
    q_rate->add_option("--qc", q_qc)->required();
    q_rate->add_option("--model", q_model)->required();
    q_rate->add_option("--rating", q_rating)->required();
    q_rate->add_option("--rater", q_rater);
    q_rate->add_option("--revision", s_revision);

    // defect
    auto* defect = app.add_subcommand("defect", "defects in the quality matrix");
    defect->require_subcommand(1);
    std::string d_session, d_qc, d_model, d_locator, d_description, d_id, d_note, d_format = "text";
    auto* d_open = defect->add_subcommand("open", "record a defect");
    d_open->add_option("--session", d_session)->required();
    d_open->add_option("--qc", d_qc)->required();
    d_open->add_option("--model", d_model)->required();
    d_open->add_option("--locator", d_locator);
    d_open->add_option("--description", d_description)->required();
    d_open->add_option("--revision", s_revision);
    auto* d_resolve = defect->add_subcommand("resolve", "resolve a defect");
    d_resolve->add_option("--session", d_session)->required();
    d_resolve->add_option("--id", d_id)->required();
    d_resolve->add_option("--note", d_note);
    d_resolve->add_option("--revision", s_revision);
    auto* d_reject = defect->add_subcommand("reject", "reject a defect");
    d_reject->add_option("--session", d_session)->required();
    d_reject->add_option("--id", d_id)->required();
    d_reject->add_option("--reason", d_note)->required();
    d_reject->add_option("--revision", s_revision);
    auto* d_list = defect->add_subcommand("list", "list defects");
    d_list->add_option("--session", d_session)->required();
    d_list->add_option("--format", d_format)->check(CLI::IsMember({"text", "json", "csv"}));

    // validate
    std::string v_schema, v_instance, v_report;
    bool v_lenient = false;
    auto* validate = app.add_subcommand("validate", "validate an instance against a schema");
    validate->add_option("--schema", v_schema)->required();
    validate->add_option("--instance", v_instance)->required();
    validate->add_flag("--lenient", v_lenient, "unsupported keywords become warnings");
    validate->add_option("--report", v_report, "write the report JSON here");

    // rules
    auto* rules = app.add_subcommand("rules", "semantic rules");
    rules->require_subcommand(1);
    std::string r_rules, r_request, r_response, r_units;
    auto* r_check = rules->add_subcommand("check", "evaluate rules over a request/response pair");
    r_check->add_option("--rules", r_rules)->required();
    r_check->add_option("--request", r_request)->required();
    r_check->add_option("--response", r_response)->required();
    r_check->add_option("--units", r_units, "unit table (default: built-in)");

    // test
    auto* test = app.add_subcommand("test", "conformance test cases");
    test->require_subcommand(1);
    std::string t_case, t_test, t_responder, t_format = "text", t_report, t_session, t_run, t_finding, t_locus, t_qc,
                                                t_model, t_note;
    auto* t_load = test->add_subcommand("load", "check a test case file");
    t_load->add_option("--case", t_case)->required();
    auto* t_run_cmd = test->add_subcommand("run", "run a test case file, or a planned session test");
    auto* case_opt = t_run_cmd->add_option("--case", t_case, "test case file");
    auto* test_opt = t_run_cmd->add_option("--test", t_test, "planned test id <session>.<case>");
    case_opt->excludes(test_opt);
    t_run_cmd->add_option("--responder", t_responder, "external responder URL");
    t_run_cmd->add_option("--format", t_format)->check(CLI::IsMember({"text", "json"}));
    t_run_cmd->add_option("--report", t_report, "also write the report here");
    t_run_cmd->add_option("--revision", s_revision);
    auto* t_add = test->add_subcommand("add", "add a test case to a session's plan");
    t_add->add_option("--session", t_session)->required();
    t_add->add_option("--case", t_case)->required();
    t_add->add_option("--revision", s_revision);
    auto* t_classify = test->add_subcommand("classify", "classify a finding as application or model");
    t_classify->add_option("--run", t_run)->required();
    t_classify->add_option("--finding", t_finding)->required();
    t_classify->add_option("--locus", t_locus)->required()->check(CLI::IsMember({"application", "model"}));
    t_classify->add_option("--qc", t_qc);
    t_classify->add_option("--model", t_model);
    t_classify->add_option("--note", t_note);
    t_classify->add_option("--revision", s_revision);

    // review
    auto* review = app.add_subcommand("review", "review support");
    review->require_subcommand(1);
    std::vector<std::string> rv_samples;
    std::string rv_id_path, rv_schema, rv_session, rv_model = "DM";
    bool rv_open = false;
    auto* rv_scan = review->add_subcommand("scan", "scan data-model samples for defect candidates");
    rv_scan->add_option("--samples", rv_samples)->required();
    rv_scan->add_option("--id-path", rv_id_path, "instance id path");
    rv_scan->add_option("--schema", rv_schema, "schema to scan for defaults on required members");
    rv_scan->add_option("--session", rv_session, "with --open: record the candidates here");
    rv_scan->add_option("--model", rv_model);
    rv_scan->add_flag("--open", rv_open);

    // report
    std::string rp_run, rp_format = "text";
    auto* report_cmd = app.add_subcommand("report", "print a stored run report");
    report_cmd->add_option("--run", rp_run)->required();
    report_cmd->add_option("--format", rp_format)->check(CLI::IsMember({"text", "json"}));

    // serve
    std::string sv_addr = "127.0.0.1:8080";
    auto* serve = app.add_subcommand("serve", "run the HTTP service");
    serve->add_option("--addr", sv_addr, "HOST:PORT");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }

    auto store = [&]() { return Store(store_dir); };
    auto print_event = [&](const AuditEvent& e) { out << serialize(e.result, 2) << "\n"; };

    try {
        if (*s_new) {
            Store st = store();
            const std::string id = st.create_session(SessionInit::from_json(parse_input(s_file).root), actor);
            out << id << "\n";
        } else if (*s_status) {
            Store st = store();
            const Value s = st.session_json(s_id);
            if (s_json) out << serialize(s, 2) << "\n";
            else print_session(out, s);
        } else if (*s_advance) {
            Store st = store();
            print_event(st.apply(s_id, s_event, json_arg(s_payload), actor, s_revision));
        } else if (*s_history) {
            Store st = store();
            for (const auto& e : st.read_audit(s_id)) out << serialize(e.to_json()) << "\n";
        } else if (*s_template) {
            SessionInit init;
            init.use_case = UseCaseSpec::from_json(use_case_template());
            init.participants = {{"chair", "<name>", "<stakeholder group>", false, true},
                                 {"dev", "<name>", "<stakeholder group>", true, false}};
            init.models = {{"im", ModelKind::IM, "<information model>", 1, "<location>"},
                           {"dm", ModelKind::DM, "<data model>", 1, "<location>"}};
            Value v = init.to_json();
            v.set("id", "");
            out << serialize(v, 2) << "\n";
        } else if (*q_list) {
            Store st = store();
            std::optional<ModelKind> kind;
            if (!q_kind.empty()) kind = model_kind_from(q_kind);
            for (const auto& q : st.registry().all()) {
                if (kind && !q.applies_to(*kind)) continue;
                out << q.id << "\t" << (q.applies_to_dm ? "IM,DM" : "IM") << "\t" << q.name << "\n";
            }
        } else if (*q_select) {
            Value ex = Value::empty_array();
            for (const auto& x : q_exclude) {
                const auto eq = x.find('=');
                if (eq == std::string::npos) throw UsageError("--exclude takes QC_ID=rationale");
                ex.push_back(Value::object({{"qc_id", x.substr(0, eq)}, {"rationale", x.substr(eq + 1)}}));
            }
            Store st = store();
            print_event(st.apply(q_session, "qcs_selected", Value::object({{"exclusions", std::move(ex)}}), actor, s_revision));
        } else if (*q_rate) {
            Store st = store();
            print_event(st.apply(q_session, "rating_added",
                                 Value::object({{"qc_id", q_qc}, {"model", q_model}, {"rating", q_rating},
                                                {"rater", q_rater.empty() ? actor : q_rater}}),
                                 actor, s_revision));
        } else if (*d_open) {
            Store st = store();
            print_event(st.apply(d_session, "defect_opened",
                                 Value::object({{"qc_id", d_qc}, {"model", d_model}, {"locator", d_locator},
                                                {"description", d_description}}),
                                 actor, s_revision));
        } else if (*d_resolve) {
            Store st = store();
            print_event(st.apply(d_session, "defect_resolved", Value::object({{"defect_id", d_id}, {"note", d_note}}),
                                 actor, s_revision));
        } else if (*d_reject) {
            Store st = store();
            print_event(st.apply(d_session, "defect_rejected", Value::object({{"defect_id", d_id}, {"reason", d_note}}),
                                 actor, s_revision));
        } else if (*d_list) {
            Store st = store();
            st.read(d_session, [&](const Session& s) {
                if (d_format == "json") {
                    out << serialize(s.matrix().to_json(), 2) << "\n";
                } else if (d_format == "csv") {
                    std::vector<ModelInfo> models;
                    for (const auto& m : s.models()) models.push_back({m.id, m.kind});
                    out << s.matrix().to_csv(s.registry(), s.selection().value_or(select_qcs(s.registry(), {})), models);
                } else {
                    for (const auto& d : s.matrix().defects()) {
                        out << d.id << "\t" << to_string(d.status) << "\t" << d.qc_id << "\t" << d.model_id << "\t"
                            << d.locator << "\t" << d.description << "\n";
                    }
                }
            });
        } else if (*validate) {
            const Document schema = parse_input(v_schema);
            CompileOptions opts;
            opts.lenient = v_lenient;
            const CompiledSchema compiled = compile_schema(schema, opts);
            const std::string text = read_file(v_instance);
            ValidationReport rep;
            try {
                rep = compiled.validate(parse_document(text, v_instance));
            } catch (const ParseError& e) {
                rep.pass = false;
                rep.errors.push_back({PathExpr(), "parse",
                                      "instance is not JSON (line " + std::to_string(e.line()) + ", column " +
                                          std::to_string(e.column()) + "): " + e.detail(),
                                      ""});
            }
            for (const auto& w : compiled.warnings()) err << "warning: " << w << "\n";
            if (!v_report.empty()) write_file(v_report, serialize(rep.to_json(), 2) + "\n");
            out << (rep.pass ? "PASS" : "FAIL") << "\n";
            for (const auto& e : rep.errors) {
                out << "  " << e.instance_path.to_string() << " [" << e.keyword << "] " << e.message << "\n";
            }
            return rep.pass ? 0 : 1;
        } else if (*r_check) {
            const UnitTable units = r_units.empty() ? UnitTable::default_table() : load_unit_table(parse_input(r_units));
            const auto set = parse_rules(parse_input(r_rules), units);
            const auto rep = evaluate_rules(set, parse_input(r_request), parse_input(r_response), units);
            out << serialize(rep.to_json(), 2) << "\n";
            return rep.pass ? 0 : 1;
        } else if (*t_load) {
            read_file(t_case);
            const TestCase tc = load_test_case_file(t_case);
            const char* kinds[] = {"stub", "template", "external"};
            out << tc.id << ": responder " << kinds[static_cast<int>(tc.responder.kind)] << ", " << tc.rules.rules.size()
                << " rule(s)\n";
        } else if (*t_run_cmd) {
            TestRun run;
            if (!t_test.empty()) {
                Store st = store();
                std::optional<std::string> url;
                if (!t_responder.empty()) url = t_responder;
                run = st.load_run(st.run_test(t_test, actor, url, s_revision));
            } else {
                if (t_case.empty()) throw UsageError("test run needs --case or --test");
                read_file(t_case);
                TestCase tc = load_test_case_file(t_case);
                if (!t_responder.empty()) {
                    if (t_responder.rfind("http://", 0) != 0) throw UsageError("--responder must be an http:// URL");
                    tc.responder = {ResponderKind::External, Value(), t_responder};
                }
                run = judge(tc, run_exchange(tc), tc.id + ".local");
            }
            const std::string text = report(run, t_format);
            if (!t_report.empty()) write_file(t_report, text);
            out << text;
            return run.verdict == Verdict::Pass ? 0 : 1;
        } else if (*t_add) {
            read_file(t_case);
            Store st = store();
            const TestCase tc = load_test_case_file(t_case, &st.units());
            const auto e = st.apply(t_session, "test_case_added", Value::object({{"test_case", tc.to_json()}}), actor, s_revision);
            out << t_session << "." << e.result.get_string("test_case_id") << "\n";
        } else if (*t_classify) {
            Store st = store();
            Value payload = Value::object({{"run_id", t_run}, {"finding_ref", t_finding}, {"locus", t_locus}});
            if (!t_qc.empty()) payload.set("qc_id", t_qc);
            if (!t_model.empty()) payload.set("model", t_model);
            if (!t_note.empty()) payload.set("note", t_note);
            print_event(st.apply(st.session_of_run(t_run), "finding_classified", payload, actor, s_revision));
        } else if (*rv_scan) {
            std::vector<Document> docs;
            for (const auto& p : rv_samples) docs.push_back(parse_input(p));
            std::optional<PathExpr> id_path;
            if (!rv_id_path.empty()) id_path = parse_path(rv_id_path);
            std::optional<CompiledSchema> schema;
            if (!rv_schema.empty()) schema = compile_schema(parse_input(rv_schema));
            const auto found = review_data_model(docs, id_path, schema ? &*schema : nullptr);
            std::optional<Store> st;
            if (rv_open) {
                if (rv_session.empty()) throw UsageError("--open needs --session");
                st.emplace(store_dir);
            }
            for (const auto& s : found) {
                out << s.qc_id << "\t" << s.locator << "\t" << s.description;
                if (st) {
                    const auto e = st->apply(rv_session, "defect_opened",
                                             Value::object({{"qc_id", s.qc_id}, {"model", rv_model},
                                                            {"locator", s.locator}, {"description", s.description}}),
                                             actor);
                    out << "\t" << e.result.get_string("defect_id");
                }
                out << "\n";
            }
            return found.empty() ? 0 : 1;
        } else if (*report_cmd) {
            Store st = store();
            const TestRun run = st.load_run(rp_run);
            out << report(run, rp_format);
            return run.verdict == Verdict::Pass ? 0 : 1;
        } else if (*serve) {
            const auto [host, port] = split_addr(sv_addr);
            Store st = store();
            HttpService svc(st);
            err << "serving " << st.root().string() << " on " << host << ":" << port << "\n";
            svc.listen(host, port);
        }
        return 0;
    } catch (const Failed&) {
        return 1;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        err << "error: " << e.code() << ": " << e.what() << "\n";
        return 2;
    } catch (const CompileError& e) {
        err << "error: schema does not compile:\n";
        for (const auto& i : e.issues()) err << "  " << to_string(i.kind) << " at '" << i.path << "': " << i.message << "\n";
        return 2;
    } catch (const TestCaseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const RuleError& e) {
        err << "error: rules: " << e.what() << "\n";
        return 2;
    } catch (const UnitTableError& e) {
        err << "error: units: " << e.what() << "\n";
        return 2;
    } catch (const PathSyntaxError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const StoreError& e) {
        err << "error: store: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace modelgate
