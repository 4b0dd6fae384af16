#include "modelgate/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace modelgate {

namespace fs = std::filesystem;

namespace {

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw StoreError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Write to a sibling temp file, then rename over the target.
void write_atomic(const fs::path& p, const std::string& text) {
    const fs::path tmp = p.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw StoreError("cannot write " + tmp.string());
        out << text;
        out.flush();
        if (!out) throw StoreError("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, p, ec);
    if (ec) throw StoreError("cannot rename " + tmp.string() + ": " + ec.message());
}

void append_line(const fs::path& p, const std::string& line) {
    const int fd = ::open(p.c_str(), O_WRONLY | O_APPEND | O_CREAT, 0644);
    if (fd < 0) throw StoreError("cannot open " + p.string());
    const std::string data = line + "\n";
    std::size_t off = 0;
    while (off < data.size()) {
        const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
        if (n <= 0) {
            ::close(fd);
            throw StoreError("append failed: " + p.string());
        }
        off += static_cast<std::size_t>(n);
    }
    ::fsync(fd);
    ::close(fd);
}

Value parse_file(const fs::path& p) {
    try {
        return parse_document(read_text(p), p.string()).root;
    } catch (const ParseError& e) {
        throw StoreError(p.string() + ":" + std::to_string(e.line()) + ": " + e.detail());
    }
}

}  // namespace

std::pair<std::string, std::string> split_global_id(const std::string& id) {
    const auto dot = id.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == id.size()) {
        throw DomainError("not_found", "malformed id '" + id + "'");
    }
    return {id.substr(0, dot), id.substr(dot + 1)};
}

Store::Store(fs::path root, Clock clock) : root_(std::move(root)), clock_(clock ? std::move(clock) : Clock(system_micros)) {
    std::error_code ec;
    fs::create_directories(root_ / "sessions", ec);
    if (ec) throw StoreError("cannot create store at " + root_.string() + ": " + ec.message());
    const fs::path reg = root_ / "registry.json";
    const fs::path units = root_ / "units.json";
    if (!fs::exists(reg)) write_atomic(reg, serialize(default_registry().to_json(), 2) + "\n");
    if (!fs::exists(units)) write_atomic(units, serialize(UnitTable::default_table().to_json(), 2) + "\n");
    try {
        registry_ = load_registry(parse_file(reg));
        units_ = load_unit_table(parse_file(units));
    } catch (const RegistryError& e) {
        throw StoreError(reg.string() + ": " + e.what());
    } catch (const UnitTableError& e) {
        throw StoreError(units.string() + ": " + e.what());
    }
}

fs::path Store::default_root() {
    if (const char* env = std::getenv("MODELGATE_STORE"); env && *env) return env;
    return "modelgate-store";
}

fs::path Store::session_dir(const std::string& id) const { return root_ / "sessions" / id; }

bool Store::has_session(const std::string& id) const {
    if (id.empty() || id.find_first_of("/\\.") != std::string::npos) return false;
    return fs::exists(session_dir(id) / "audit.jsonl");
}

std::vector<std::string> Store::session_ids() const {
    std::vector<std::string> out;
    for (const auto& e : fs::directory_iterator(root_ / "sessions")) {
        if (fs::exists(e.path() / "audit.jsonl")) out.push_back(e.path().filename().string());
    }
    std::sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) {
        return a.size() != b.size() ? a.size() < b.size() : a < b;
    });
    return out;
}

Store::Slot& Store::slot(const std::string& id) {
    std::lock_guard lock(mu_);
    auto& s = slots_[id];
    if (!s) s = std::make_unique<Slot>();
    return *s;
}

std::vector<AuditEvent> Store::read_audit(const std::string& id) const {
    const fs::path p = session_dir(id) / "audit.jsonl";
    const std::string text = read_text(p);
    std::vector<AuditEvent> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto nl = text.find('\n', pos);
        if (nl == std::string::npos) break;  // torn final line: never acknowledged
        const std::string line = text.substr(pos, nl - pos);
        pos = nl + 1;
        if (line.empty()) continue;
        try {
            out.push_back(AuditEvent::from_json(parse_document(line).root));
        } catch (const ParseError& e) {
            throw StoreError(p.string() + ": event " + std::to_string(out.size() + 1) + ": " + e.detail());
        }
    }
    return out;
}

Session& Store::loaded(Slot& s, const std::string& id) {
    if (s.session) return *s.session;
    if (!has_session(id)) throw DomainError("not_found", "unknown session '" + id + "'");
    const fs::path dir = session_dir(id);
    const auto events = read_audit(id);
    Session session = Session::replay(events, registry_, units_, clock_);

    // Bring derived files back in line with the log (after a crash, or a
    // torn final audit line).
    std::string audit_text;
    for (const auto& e : events) audit_text += serialize(e.to_json()) + "\n";
    if (read_text(dir / "audit.jsonl") != audit_text) write_atomic(dir / "audit.jsonl", audit_text);
    const std::string snap = serialize(session.to_json(), 2) + "\n";
    if (!fs::exists(dir / "session.json") || read_text(dir / "session.json") != snap) {
        write_atomic(dir / "session.json", snap);
        write_atomic(dir / "defects.json", serialize(session.matrix().to_json(), 2) + "\n");
        fs::create_directories(dir / "runs");
        for (const auto& r : session.runs()) {
            write_atomic(dir / "runs" / (r.run.id + ".json"), report(r.run, "json"));
            write_atomic(dir / "runs" / (r.run.id + ".txt"), report(r.run, "text"));
        }
    }
    s.session = std::make_unique<Session>(std::move(session));
    return *s.session;
}

void Store::persist(const Session& s, const AuditEvent& e) {
    const fs::path dir = session_dir(s.id());
    append_line(dir / "audit.jsonl", serialize(e.to_json()));
    write_atomic(dir / "session.json", serialize(s.to_json(), 2) + "\n");
    write_atomic(dir / "defects.json", serialize(s.matrix().to_json(), 2) + "\n");
    std::string run_id;
    if (e.type == "run_recorded" || e.type == "finding_classified") run_id = e.result.get_string("run_id", e.payload.get_string("run_id"));
    if (!run_id.empty()) {
        const auto& r = s.run(run_id).run;
        write_atomic(dir / "runs" / (run_id + ".json"), report(r, "json"));
        write_atomic(dir / "runs" / (run_id + ".txt"), report(r, "text"));
    }
}

std::string Store::create_session(SessionInit init, const std::string& actor) {
    std::lock_guard create_lock(create_mu_);
    if (init.id.empty()) {
        std::size_t n = session_ids().size() + 1;
        while (has_session("S" + std::to_string(n))) ++n;
        init.id = "S" + std::to_string(n);
    }
    if (has_session(init.id)) throw DomainError("duplicate_session", "session '" + init.id + "' exists");
    Session s = Session::start(init, registry_, units_, clock_, actor);
    const fs::path dir = session_dir(s.id());
    fs::create_directories(dir / "runs");
    // Write the log last so a half-created session is never visible.
    write_atomic(dir / "session.json", serialize(s.to_json(), 2) + "\n");
    write_atomic(dir / "defects.json", serialize(s.matrix().to_json(), 2) + "\n");
    write_atomic(dir / "audit.jsonl", serialize(s.audit().front().to_json()) + "\n");
    auto& sl = slot(s.id());
    std::lock_guard lock(sl.mu);
    sl.session = std::make_unique<Session>(std::move(s));
    return init.id;
}

void Store::read(const std::string& id, const std::function<void(const Session&)>& fn) {
    auto& s = slot(id);
    std::lock_guard lock(s.mu);
    fn(loaded(s, id));
}

Value Store::session_json(const std::string& id) {
    Value out;
    read(id, [&](const Session& s) { out = s.to_json(); });
    return out;
}

AuditEvent Store::apply(const std::string& id, const std::string& type, const Value& payload, const std::string& actor,
                        std::optional<std::int64_t> expected_revision) {
    auto& s = slot(id);
    std::lock_guard lock(s.mu);
    Session& session = loaded(s, id);
    const AuditEvent e = session.apply(type, payload, actor, expected_revision);
    try {
        persist(session, e);
    } catch (...) {
        // The in-memory copy is ahead of the disk; reload from the log.
        s.session.reset();
        throw;
    }
    return e;
}

std::string Store::run_test(const std::string& test_id, const std::string& actor,
                            const std::optional<std::string>& responder_url,
                            std::optional<std::int64_t> expected_revision) {
    const auto [session_id, case_id] = split_global_id(test_id);
    std::optional<TestCase> tc;
    read(session_id, [&](const Session& s) { tc = s.test_case(case_id); });
    if (responder_url) {
        if (responder_url->rfind("http://", 0) != 0) throw DomainError("invalid_responder", "responder must be an http:// URL");
        tc->responder = {ResponderKind::External, Value(), *responder_url};
    }
    const auto transcript = run_exchange(*tc);
    const Value payload = Value::object({{"test_case_id", case_id}, {"transcript", transcript.to_json()}});
    const auto e = apply(session_id, "run_recorded", payload, actor, expected_revision);
    return e.result.get_string("run_id");
}

std::string Store::session_of_run(const std::string& run_id) const {
    const auto dot = run_id.rfind(".R");
    if (dot == std::string::npos || dot == 0) throw DomainError("not_found", "malformed run id '" + run_id + "'");
    return run_id.substr(0, dot);
}

TestRun Store::load_run(const std::string& run_id) {
    const std::string sid = session_of_run(run_id);
    std::optional<TestRun> out;
    read(sid, [&](const Session& s) { out = s.run(run_id).run; });
    return *out;
}

void Store::evict_all() {
    std::lock_guard lock(mu_);
    for (auto& [id, s] : slots_) {
        std::lock_guard slot_lock(s->mu);
        s->session.reset();
    }
}

}  // namespace modelgate
