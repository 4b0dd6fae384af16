#include "modelgate/session.hpp"

#include <algorithm>
#include <set>

namespace modelgate {

namespace {

[[noreturn]] void bad(const std::string& code, const std::string& msg) { throw DomainError(code, msg); }

std::string req_string(const Value& v, const char* name) {
    const Value* m = v.find(name);
    if (!m || !m->is_string() || m->as_string().empty()) bad("invalid_payload", std::string("'") + name + "' must be a non-empty string");
    return m->as_string();
}

std::int64_t req_int(const Value& v, const char* name) {
    const Value* m = v.find(name);
    if (!m || !m->is_number() || !m->as_number().to_int64()) bad("invalid_payload", std::string("'") + name + "' must be an integer");
    return *m->as_number().to_int64();
}

bool opt_bool(const Value& v, const char* name) {
    const Value* m = v.find(name);
    return m && m->is_bool() && m->as_bool();
}

const Array& opt_array(const Value& v, const char* name) {
    static const Array empty;
    const Value* m = v.find(name);
    if (!m) return empty;
    if (!m->is_array()) bad("invalid_payload", std::string("'") + name + "' must be an array");
    return m->as_array();
}

bool valid_id(std::string_view id) {
    return !id.empty() && std::all_of(id.begin(), id.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
    });
}

Value model_json(const ModelArtifact& m) {
    return Value::object({{"id", m.id},
                          {"kind", to_string(m.kind)},
                          {"name", m.name},
                          {"version", m.version},
                          {"location", m.location}});
}

}  // namespace

// -------------------------------------------------------------- use case

Value UseCaseSpec::to_json() const {
    Value a = Value::empty_array();
    for (const auto& x : actors) a.push_back(Value::object({{"name", x.name}, {"role", x.role}}));
    Value s = Value::empty_array();
    for (const auto& x : systems) s.push_back(Value::object({{"id", x.id}, {"name", x.name}, {"description", x.description}}));
    Value io = Value::empty_array();
    for (const auto& x : information_objects) io.push_back(Value::object({{"name", x.name}, {"model_id", x.model_id}}));
    Value st = Value::empty_array();
    for (const auto& x : scenario_steps) {
        st.push_back(Value::object({{"from_system", x.from_system},
                                    {"to_system", x.to_system},
                                    {"payload_model_id", x.payload_model_id},
                                    {"description", x.description}}));
    }
    return Value::object({{"name", name},
                          {"scope", scope},
                          {"actors", std::move(a)},
                          {"systems", std::move(s)},
                          {"information_objects", std::move(io)},
                          {"scenario_steps", std::move(st)}});
}

UseCaseSpec UseCaseSpec::from_json(const Value& v) {
    if (!v.is_object()) bad("invalid_use_case", "use case must be an object");
    UseCaseSpec u;
    try {
        u.name = v.get_string("name");
        u.scope = v.get_string("scope");
        for (const auto& x : opt_array(v, "actors")) u.actors.push_back({x.get_string("name"), x.get_string("role")});
        for (const auto& x : opt_array(v, "systems")) {
            u.systems.push_back({x.get_string("id"), x.get_string("name"), x.get_string("description")});
        }
        for (const auto& x : opt_array(v, "information_objects")) {
            u.information_objects.push_back({x.get_string("name"), x.get_string("model_id")});
        }
        for (const auto& x : opt_array(v, "scenario_steps")) {
            u.scenario_steps.push_back({x.get_string("from_system"), x.get_string("to_system"),
                                        x.get_string("payload_model_id"), x.get_string("description")});
        }
    } catch (const DomainError& e) {
        bad("invalid_use_case", e.what());
    }
    if (u.name.empty()) bad("invalid_use_case", "use case needs a name");
    return u;
}

Value use_case_template() {
    UseCaseSpec u;
    u.name = "<use case name>";
    u.scope = "<scope and objectives>";
    u.actors = {{"<actor>", "<role>"}};
    u.systems = {{"A", "<system A>", "<description>"}, {"B", "<system B>", "<description>"}};
    u.information_objects = {{"<information object>", "<data model id>"}};
    u.scenario_steps = {{"A", "B", "<data model id>", "<what is exchanged and why>"}};
    return u.to_json();
}

// ----------------------------------------------------------------- init

Value SessionInit::to_json() const {
    Value ps = Value::empty_array();
    for (const auto& p : participants) {
        ps.push_back(Value::object({{"id", p.id},
                                    {"name", p.name},
                                    {"stakeholder_group", p.stakeholder_group},
                                    {"is_model_developer", p.is_model_developer},
                                    {"is_chair", p.is_chair}}));
    }
    Value ms = Value::empty_array();
    for (const auto& m : models) ms.push_back(model_json(m));
    return Value::object({{"id", id}, {"use_case", use_case.to_json()}, {"participants", std::move(ps)}, {"models", std::move(ms)}});
}

SessionInit SessionInit::from_json(const Value& v) {
    if (!v.is_object()) bad("invalid_payload", "session must be an object");
    SessionInit s;
    s.id = v.get_string("id");
    const Value* uc = v.find("use_case");
    if (!uc) bad("invalid_use_case", "session lacks a use case");
    s.use_case = UseCaseSpec::from_json(*uc);
    for (const auto& p : opt_array(v, "participants")) {
        s.participants.push_back({p.get_string("id"), p.get_string("name"), p.get_string("stakeholder_group"),
                                  opt_bool(p, "is_model_developer"), opt_bool(p, "is_chair")});
    }
    for (const auto& m : opt_array(v, "models")) {
        ModelArtifact a;
        a.id = m.get_string("id");
        a.kind = model_kind_from(m.get_string("kind"));
        a.name = m.get_string("name");
        if (m.contains("version")) a.version = req_int(m, "version");
        a.location = m.get_string("location");
        s.models.push_back(std::move(a));
    }
    return s;
}

// ----------------------------------------------------------------- audit

Value AuditEvent::to_json() const {
    return Value::object(
        {{"seq", seq}, {"ts", ts}, {"actor", actor}, {"type", type}, {"payload", payload}, {"result", result}});
}

AuditEvent AuditEvent::from_json(const Value& v) {
    AuditEvent e;
    e.seq = req_int(v, "seq");
    e.ts = req_string(v, "ts");
    e.actor = v.get_string("actor");
    e.type = req_string(v, "type");
    e.payload = v.contains("payload") ? v.at("payload") : Value::empty_object();
    e.result = v.contains("result") ? v.at("result") : Value();
    return e;
}

// --------------------------------------------------------------- session

Session Session::start(const SessionInit& init, const Registry& registry, const UnitTable& units, Clock clock,
                       const std::string& actor) {
    if (!valid_id(init.id)) bad("invalid_id", "session id must be non-empty [A-Za-z0-9_-]");

    std::set<std::string> system_ids;
    for (const auto& s : init.use_case.systems) {
        if (s.id.empty() || !system_ids.insert(s.id).second) bad("invalid_use_case", "system ids must be unique and non-empty");
    }
    if (system_ids.size() < 2) bad("invalid_use_case", "an exchange needs at least two systems");

    int im = 0, dm = 0;
    std::set<std::string> model_ids;
    for (const auto& m : init.models) {
        if (!valid_id(m.id) || !model_ids.insert(m.id).second) bad("invalid_models", "model ids must be unique [A-Za-z0-9_-]");
        if (m.version < 1) bad("invalid_models", "model versions start at 1");
        (m.kind == ModelKind::IM ? im : dm)++;
    }
    if (im != 1 || dm != 1) bad("invalid_models", "exactly one information model and one data model are required");

    for (const auto& io : init.use_case.information_objects) {
        if (!model_ids.count(io.model_id)) bad("invalid_use_case", "information object '" + io.name + "' references unknown model '" + io.model_id + "'");
    }
    for (const auto& st : init.use_case.scenario_steps) {
        if (!system_ids.count(st.from_system) || !system_ids.count(st.to_system)) {
            bad("invalid_use_case", "scenario step references an undeclared system");
        }
        if (!model_ids.count(st.payload_model_id)) bad("invalid_use_case", "scenario step references unknown model '" + st.payload_model_id + "'");
    }

    std::set<std::string> participant_ids;
    int chairs = 0;
    for (const auto& p : init.participants) {
        if (p.id.empty() || !participant_ids.insert(p.id).second) bad("invalid_participants", "participant ids must be unique and non-empty");
        chairs += p.is_chair;
    }
    if (chairs != 1) bad("invalid_participants", "exactly one chair is required, found " + std::to_string(chairs));

    Session s;
    s.init_ = init;
    s.registry_ = registry;
    s.units_ = units;
    s.clock_ = clock ? std::move(clock) : Clock(system_micros);
    s.snapshot_ = initial_snapshot();
    const std::int64_t now = s.clock_();
    s.last_micros_ = now;
    AuditEvent e{1, format_timestamp(now), actor, "created", init.to_json(),
                 Value::object({{"state", to_string(s.snapshot_.state)}})};
    s.audit_.push_back(std::move(e));
    return s;
}

Session Session::replay(const std::vector<AuditEvent>& events, const Registry& registry, const UnitTable& units,
                        Clock clock) {
    if (events.empty() || events.front().type != "created") bad("replay_mismatch", "audit log must begin with 'created'");
    const auto& first = events.front();
    const std::int64_t t0 = parse_timestamp(first.ts);
    Session s = start(SessionInit::from_json(first.payload), registry, units, [t0] { return t0; }, first.actor);
    if (serialize(s.audit_.front().to_json()) != serialize(first.to_json())) {
        bad("replay_mismatch", "event 1 differs on replay");
    }
    for (std::size_t i = 1; i < events.size(); ++i) {
        const auto& e = events[i];
        if (e.seq != static_cast<std::int64_t>(i + 1)) bad("replay_mismatch", "audit sequence gap at " + std::to_string(i + 1));
        const std::int64_t t = parse_timestamp(e.ts);
        if (t <= s.last_micros_) bad("replay_mismatch", "timestamps not strictly increasing at seq " + std::to_string(e.seq));
        s.clock_ = [t] { return t; };
        Value result;
        try {
            result = s.dispatch(e.type, e.payload, e.ts);
        } catch (const DomainError& err) {
            bad("replay_mismatch", "event " + std::to_string(e.seq) + " (" + e.type + ") rejected on replay: " + err.what());
        }
        if (serialize(result) != serialize(e.result)) {
            bad("replay_mismatch", "event " + std::to_string(e.seq) + " (" + e.type + ") recomputed " + serialize(result) +
                                       ", recorded " + serialize(e.result));
        }
        s.last_micros_ = t;
        s.audit_.push_back(e);
    }
    s.clock_ = clock ? std::move(clock) : Clock(system_micros);
    return s;
}

const AuditEvent& Session::apply(const std::string& type, const Value& payload, const std::string& actor,
                                 std::optional<std::int64_t> expected_revision) {
    if (expected_revision && *expected_revision != revision()) {
        bad("revision_conflict", "revision is " + std::to_string(revision()) + ", request was based on " +
                                     std::to_string(*expected_revision));
    }
    if (type == "created") bad("invalid_event", "'created' only starts a session");
    const std::int64_t now = std::max(clock_(), last_micros_ + 1);
    const std::string ts = format_timestamp(now);
    // dispatch mutates only after all checks pass, so a throw leaves no trace.
    Session backup = *this;
    Value result;
    try {
        result = dispatch(type, payload, ts);
    } catch (...) {
        *this = std::move(backup);
        throw;
    }
    last_micros_ = now;
    audit_.push_back({revision() + 1, ts, actor, type, payload, std::move(result)});
    return audit_.back();
}

const ModelArtifact& Session::model(ModelKind kind) const {
    for (const auto& m : init_.models) {
        if (m.kind == kind) return m;
    }
    bad("unknown_model", "no model of that kind");
}

const ModelArtifact& Session::resolve_model(std::string_view ref) const {
    for (const auto& m : init_.models) {
        if (m.id == ref || ref == to_string(m.kind)) return m;
    }
    bad("unknown_model", "unknown model '" + std::string(ref) + "'");
}

ModelArtifact& Session::mutable_model(std::string_view ref) { return const_cast<ModelArtifact&>(resolve_model(ref)); }

const TestCase& Session::test_case(std::string_view id) const {
    for (const auto& t : tests_) {
        if (t.id == id) return t;
    }
    bad("not_found", "unknown test case '" + std::string(id) + "'");
}

const RunRecord& Session::run(std::string_view id) const {
    for (const auto& r : runs_) {
        if (r.run.id == id) return r;
    }
    bad("not_found", "unknown run '" + std::string(id) + "'");
}

std::string Session::next_run_id() const { return id() + ".R" + std::to_string(runs_.size() + 1); }

bool Session::run_is_current(const RunRecord& r) const {
    return r.im_version == model(ModelKind::IM).version && r.dm_version == model(ModelKind::DM).version;
}

Phase3Outcome Session::phase3_outcome() const {
    bool open = false;
    for (const auto& d : matrix_.defects()) open |= d.status == DefectStatus::Open;
    if (snapshot_.last_model_defects > 0 || open) return Phase3Outcome::ModelDefects;
    if (tests_.empty()) return Phase3Outcome::Continue;
    for (const auto& tc : tests_) {
        const RunRecord* latest = nullptr;
        for (const auto& r : runs_) {
            if (r.run.test_case_id == tc.id) latest = &r;
        }
        if (!latest || !run_is_current(*latest) || latest->run.verdict != Verdict::Pass) return Phase3Outcome::Continue;
    }
    return Phase3Outcome::Done;
}

Value Session::advance(EventKind kind, const Value& payload) {
    CoreEvent e;
    e.kind = kind;
    Value result = Value::empty_object();
    const StateId from = snapshot_.state;
    switch (kind) {
        case EventKind::QcsSelected: {
            if (from != StateId::P2_SELECT_QCS) break;
            std::vector<Exclusion> ex;
            for (const auto& x : opt_array(payload, "exclusions")) ex.push_back({x.get_string("qc_id"), x.get_string("rationale")});
            selection_ = select_qcs(registry_, ex);
            result.set("included", static_cast<std::int64_t>(selection_->included.size()));
            break;
        }
        case EventKind::ModelChosen:
            e.model = resolve_model(req_string(payload, "model")).kind;
            break;
        case EventKind::ChangesImplemented: {
            auto& m = mutable_model(req_string(payload, "model"));
            e.model = m.kind;
            // Validate the transition before bumping the version.
            transition(snapshot_, e);
            const std::int64_t next = payload.contains("version") ? req_int(payload, "version") : m.version + 1;
            if (next <= m.version) bad("invalid_version", "new version must exceed " + std::to_string(m.version));
            m.version = next;
            result.set("model", m.id);
            result.set("version", next);
            break;
        }
        case EventKind::GateEvaluated:
            if (from == StateId::P2_QC_GATE) {
                const auto& m = model(*snapshot_.current);
                const auto g = gate_quality(matrix_, *selection_, registry_, m.kind, m.id);
                e.gate_pass = g.pass;
                result.set("pass", g.pass);
                Value blocking = Value::empty_array();
                for (const auto& q : g.blocking) blocking.push_back(q);
                result.set("blocking", std::move(blocking));
            } else if (from == StateId::P3_MODEL_DEFECT_GATE) {
                e.outcome = phase3_outcome();
                result.set("outcome", to_string(e.outcome));
            }
            break;
        case EventKind::TestAppSelected:
            if (from == StateId::P3_SELECT_TEST_APP) test_application_ = payload.get_string("application");
            break;
        case EventKind::TestTypeSelected:
            e.test_type = test_type_from(req_string(payload, "test_type"));
            break;
        case EventKind::MethodDefined:
            if (from == StateId::P3_DEFINE_TEST_METHOD) test_method_ = payload.get_string("method");
            break;
        case EventKind::TestCompleted: {
            if (from != StateId::P3_CONDUCT_TEST) break;
            if (tests_.empty()) bad("no_test_plan", "add at least one test case before completing a test");
            std::string run_id = payload.get_string("run_id");
            if (run_id.empty()) {
                if (runs_.empty()) bad("no_run", "no test run recorded");
                run_id = runs_.back().run.id;
            }
            const auto& r = run(run_id);
            if (!run_is_current(r)) bad("stale_run", "run " + run_id + " predates the current model versions");
            last_completed_run_ = run_id;
            result.set("run_id", run_id);
            break;
        }
        case EventKind::DefectsClassified: {
            if (from != StateId::P3_APP_DEFECT_GATE) break;
            if (payload.contains("app") || payload.contains("model")) {
                e.app_defects = static_cast<int>(payload.contains("app") ? req_int(payload, "app") : 0);
                e.model_defects = static_cast<int>(payload.contains("model") ? req_int(payload, "model") : 0);
            } else {
                const auto& r = run(last_completed_run_).run;
                const auto findings = r.findings();
                for (const auto& f : findings) {
                    auto it = std::find_if(r.classifications.begin(), r.classifications.end(),
                                           [&](const Classification& c) { return c.finding_ref == f.ref; });
                    if (it == r.classifications.end()) bad("unclassified_findings", "finding " + f.ref + " of run " + r.id + " is not classified");
                    (it->locus == Locus::Application ? e.app_defects : e.model_defects)++;
                }
            }
            result.set("app", e.app_defects);
            result.set("model", e.model_defects);
            break;
        }
        default: break;
    }
    snapshot_ = transition(snapshot_, e);
    result.set("state", to_string(snapshot_.state));
    return result;
}

Value Session::dispatch(const std::string& type, const Value& payload, const std::string& ts) {
    if (!payload.is_object()) bad("invalid_payload", "payload must be a JSON object");
    try {
        if (type == "defect_opened") {
            if (!selection_) bad("qc_not_selected", "select QCs before recording defects");
            if (snapshot_.state == StateId::DONE) bad("session_done", "session is complete");
            const auto& m = resolve_model(req_string(payload, "model"));
            Defect d;
            d.qc_id = req_string(payload, "qc_id");
            d.model_id = m.id;
            d.locator = payload.get_string("locator");
            d.description = req_string(payload, "description");
            d.created_at = ts;
            const auto& stored = matrix_.open_defect(std::move(d), registry_, *selection_, {m.id, m.kind});
            return Value::object({{"defect_id", stored.id}});
        }
        if (type == "defect_resolved") {
            const std::string id = req_string(payload, "defect_id");
            const Defect* d = matrix_.find(id);
            if (!d) bad("not_found", "unknown defect '" + id + "'");
            const auto version = resolve_model(d->model_id).version;
            matrix_.resolve_defect(id, version, payload.get_string("note"));
            return Value::object({{"defect_id", id}, {"model_version", version}});
        }
        if (type == "defect_rejected") {
            const std::string id = req_string(payload, "defect_id");
            matrix_.reject_defect(id, req_string(payload, "reason"));
            return Value::object({{"defect_id", id}});
        }
        if (type == "rating_added") {
            const auto& m = resolve_model(req_string(payload, "model"));
            matrix_.add_rating({req_string(payload, "qc_id"), m.id, static_cast<int>(req_int(payload, "rating")),
                                payload.get_string("rater")},
                               registry_);
            return Value::empty_object();
        }
        if (type == "test_case_added") {
            const Value* doc = payload.find("test_case");
            if (!doc) bad("invalid_payload", "'test_case' missing");
            TestCase tc;
            try {
                tc = load_test_case(*doc, {}, &units_);
            } catch (const TestCaseError& err) {
                bad("invalid_test_case", err.what());
            }
            for (const auto& t : tests_) {
                if (t.id == tc.id) bad("duplicate_test_case", "test case '" + tc.id + "' already planned");
            }
            tests_.push_back(std::move(tc));
            return Value::object({{"test_case_id", tests_.back().id}});
        }
        if (type == "run_recorded") {
            if (snapshot_.state != StateId::P3_CONDUCT_TEST) bad("illegal_transition", "tests run in P3_CONDUCT_TEST only");
            const auto& tc = test_case(req_string(payload, "test_case_id"));
            const Value* tr = payload.find("transcript");
            if (!tr || !tr->is_object()) bad("invalid_payload", "'transcript' missing");
            auto transcript = ExchangeTranscript::from_json(*tr);
            if (transcript.test_case_id != tc.id) bad("invalid_payload", "transcript belongs to another test case");
            RunRecord r{judge(tc, transcript, next_run_id()), model(ModelKind::IM).version, model(ModelKind::DM).version};
            runs_.push_back(std::move(r));
            const auto& run = runs_.back().run;
            return Value::object({{"run_id", run.id}, {"verdict", to_string(run.verdict)},
                                  {"findings", static_cast<std::int64_t>(run.findings().size())}});
        }
        if (type == "finding_classified") {
            const StateId s = snapshot_.state;
            if (s != StateId::P3_CONDUCT_TEST && s != StateId::P3_APP_DEFECT_GATE) {
                bad("illegal_transition", "findings are classified while testing");
            }
            const std::string run_id = req_string(payload, "run_id");
            run(run_id);
            auto& rec = *std::find_if(runs_.begin(), runs_.end(), [&](const RunRecord& r) { return r.run.id == run_id; });
            if (rec.run.verdict == Verdict::Pass) bad("nothing_to_classify", "run " + run_id + " passed");
            const std::string ref = req_string(payload, "finding_ref");
            const auto f = rec.run.finding(ref);
            if (!f) bad("not_found", "run " + run_id + " has no finding '" + ref + "'");
            for (const auto& c : rec.run.classifications) {
                if (c.finding_ref == ref) bad("already_classified", "finding " + ref + " is already classified");
            }
            Classification c{ref, locus_from(req_string(payload, "locus")), {}, payload.get_string("note")};
            Value result = Value::empty_object();
            if (c.locus == Locus::Model) {
                const auto& m = resolve_model(payload.get_string("model", "DM"));
                Defect d;
                d.qc_id = payload.get_string("qc_id", default_qc_for(*f));
                d.model_id = m.id;
                d.locator = m.kind == ModelKind::DM ? f->path : f->path + " (" + f->ref + ")";
                d.description = "run " + run_id + " " + f->ref + ": " + f->message;
                d.created_at = ts;
                c.defect_id = matrix_.open_defect(std::move(d), registry_, *selection_, {m.id, m.kind}).id;
                result.set("defect_id", c.defect_id);
            }
            rec.run.classifications.push_back(std::move(c));
            result.set("locus", payload.get_string("locus"));
            return result;
        }
        return advance(event_kind_from(type), payload);
    } catch (const TypeError& err) {
        bad("invalid_payload", err.what());
    }
}

std::vector<std::string> Session::legal_events() const {
    std::vector<std::string> out;
    for (const auto& e : enabled_events(snapshot_)) {
        std::string name = to_string(e.kind);
        if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(std::move(name));
    }
    return out;
}

Value Session::gate_preview() const {
    Value out = Value::empty_object();
    if (!selection_) return out;
    for (const auto& m : init_.models) {
        const auto g = gate_quality(matrix_, *selection_, registry_, m.kind, m.id);
        Value blocking = Value::empty_array();
        for (const auto& q : g.blocking) blocking.push_back(q);
        out.set(to_string(m.kind), Value::object({{"model_id", m.id}, {"pass", g.pass}, {"blocking", std::move(blocking)}}));
    }
    return out;
}

Value Session::to_json() const {
    Value models = Value::empty_array();
    for (const auto& m : init_.models) models.push_back(model_json(m));
    Value tests = Value::empty_array();
    for (const auto& t : tests_) tests.push_back(t.to_json());
    Value runs = Value::empty_array();
    for (const auto& r : runs_) {
        Value cls = Value::empty_array();
        for (const auto& c : r.run.classifications) {
            cls.push_back(Value::object({{"finding_ref", c.finding_ref},
                                         {"locus", to_string(c.locus)},
                                         {"defect_id", c.defect_id},
                                         {"note", c.note}}));
        }
        runs.push_back(Value::object({{"id", r.run.id},
                                      {"test_case_id", r.run.test_case_id},
                                      {"verdict", to_string(r.run.verdict)},
                                      {"model_versions", Value::object({{"IM", r.im_version}, {"DM", r.dm_version}})},
                                      {"current", run_is_current(r)},
                                      {"classifications", std::move(cls)}}));
    }
    Value legal = Value::empty_array();
    for (auto& n : legal_events()) legal.push_back(std::move(n));
    return Value::object({{"id", id()},
                          {"revision", revision()},
                          {"created_at", audit_.front().ts},
                          {"updated_at", audit_.back().ts},
                          {"use_case", init_.use_case.to_json()},
                          {"participants", init_.to_json().at("participants")},
                          {"models", std::move(models)},
                          {"selection", selection_ ? selection_->to_json() : Value()},
                          {"workflow", snapshot_.to_json()},
                          {"legal_events", std::move(legal)},
                          {"gate_preview", gate_preview()},
                          {"matrix", matrix_.to_json()},
                          {"phase3", Value::object({{"application", test_application_},
                                                    {"method", test_method_},
                                                    {"last_completed_run", last_completed_run_}})},
                          {"tests", std::move(tests)},
                          {"runs", std::move(runs)}});
}

// ---------------------------------------------------------- review assist

std::vector<DefectSuggestion> review_data_model(const std::vector<Document>& samples,
                                                const std::optional<PathExpr>& id_path, const CompiledSchema* schema) {
    std::vector<DefectSuggestion> out;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& doc = samples[i];
        const std::string name = doc.source_name.empty() ? "#" + std::to_string(i) : doc.source_name;
        for (const auto& d : doc.diagnostics) {
            if (d.kind != "duplicate_key") continue;
            out.push_back({"singularity", d.path.to_string(),
                           name + ":" + std::to_string(d.line) + ":" + std::to_string(d.column) + ": " + d.message,
                           "duplicate_key"});
        }
    }
    if (id_path) {
        const auto u = check_instance_uniqueness(samples, *id_path);
        for (const auto& dup : u.duplicates) {
            std::string names;
            for (const auto& n : dup.instances) names += (names.empty() ? "" : ", ") + n;
            out.push_back({"instance_uniqueness", id_path->to_string(),
                           "id " + serialize(dup.id) + " occurs in " + names, "uniqueness"});
        }
        for (const auto& n : u.missing) {
            out.push_back({"instance_uniqueness", id_path->to_string(), n + " has no instance id", "uniqueness"});
        }
    }
    if (schema) {
        for (const auto& d : schema->list_defaults()) {
            if (!d.on_required) continue;
            out.push_back({"essentialness", d.path.to_string(),
                           "required member has default " + serialize(d.value) + " at " + d.schema_path,
                           "required_default"});
        }
    }
    return out;
}

}  // namespace modelgate
