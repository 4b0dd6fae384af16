#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>

#include "modelgate/session.hpp"

namespace modelgate {

class StoreError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Directory layout:
///   registry.json, units.json
///   sessions/<id>/session.json    snapshot, rewritten after each event
///   sessions/<id>/audit.jsonl     one AuditEvent per line, append-only
///   sessions/<id>/defects.json
///   sessions/<id>/runs/<run>.json, <run>.txt
///
/// The audit log is the source of truth: opening a session replays it.
/// Mutations of one session are serialized; sessions are independent.
class Store {
  public:
    /// Creates the layout when missing. Throws StoreError on IO failure.
    explicit Store(std::filesystem::path root, Clock clock = system_micros);

    static std::filesystem::path default_root();  // $MODELGATE_STORE or ./modelgate-store

    const std::filesystem::path& root() const { return root_; }
    const Registry& registry() const { return registry_; }
    const UnitTable& units() const { return units_; }

    /// Assigns "S<n>" when init.id is empty. DomainError "duplicate_session".
    std::string create_session(SessionInit init, const std::string& actor);
    std::vector<std::string> session_ids() const;
    bool has_session(const std::string& id) const;

    /// Runs `fn` on the session under its lock (read only).
    void read(const std::string& id, const std::function<void(const Session&)>& fn);
    Value session_json(const std::string& id);

    /// Applies one event and persists it. DomainError "not_found" for an
    /// unknown session.
    AuditEvent apply(const std::string& id, const std::string& type, const Value& payload, const std::string& actor,
                     std::optional<std::int64_t> expected_revision = std::nullopt);

    /// Global test id "<session>.<case>". Performs the exchange outside the
    /// session lock, then records the run. Returns the run id.
    std::string run_test(const std::string& test_id, const std::string& actor,
                         const std::optional<std::string>& responder_url = std::nullopt,
                         std::optional<std::int64_t> expected_revision = std::nullopt);

    /// Run ids are "<session>.R<n>".
    TestRun load_run(const std::string& run_id);
    std::string session_of_run(const std::string& run_id) const;

    /// Reads audit.jsonl as written on disk.
    std::vector<AuditEvent> read_audit(const std::string& id) const;
    /// Drops cached sessions; the next access replays from disk.
    void evict_all();

  private:
    struct Slot {
        std::mutex mu;
        std::unique_ptr<Session> session;
    };
    Slot& slot(const std::string& id);
    Session& loaded(Slot& s, const std::string& id);
    void persist(const Session& s, const AuditEvent& e);
    std::filesystem::path session_dir(const std::string& id) const;

    std::filesystem::path root_;
    Clock clock_;
    Registry registry_;
    UnitTable units_;
    mutable std::mutex mu_;
    std::mutex create_mu_;
    std::map<std::string, std::unique_ptr<Slot>> slots_;
};

/// Splits "<session>.<rest>"; DomainError "not_found" without a dot.
std::pair<std::string, std::string> split_global_id(const std::string& id);

}  // namespace modelgate
