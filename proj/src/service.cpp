#include "modelgate/service.hpp"

#include <thread>

#include "httplib.h"

namespace modelgate {

namespace {

struct HttpError {
    int status;
    std::string code;
    std::string message;
};

Value error_body(const std::string& code, const std::string& message) {
    return Value::object({{"error", code}, {"message", message}});
}

void send(httplib::Response& res, int status, const Value& body) {
    res.status = status;
    res.set_content(serialize(body, 2) + "\n", "application/json");
}

Value body_of(const httplib::Request& req) {
    if (req.body.empty()) return Value::empty_object();
    try {
        Value v = parse_document(req.body, "request body").root;
        if (!v.is_object()) throw HttpError{400, "bad_request", "body must be a JSON object"};
        return v;
    } catch (const ParseError& e) {
        throw HttpError{400, "bad_request", "body is not JSON (line " + std::to_string(e.line()) + "): " + e.detail()};
    }
}

std::optional<std::int64_t> revision_of(const Value& body) {
    const Value* r = body.find("revision");
    if (!r || r->is_null()) return std::nullopt;
    if (!r->is_number() || !r->as_number().to_int64()) throw HttpError{400, "bad_request", "revision must be an integer"};
    return *r->as_number().to_int64();
}

std::string actor_of(const httplib::Request& req, const Value& body) {
    if (const Value* a = body.find("actor"); a && a->is_string() && !a->as_string().empty()) return a->as_string();
    if (req.has_header("X-Actor")) return req.get_header_value("X-Actor");
    return "api";
}

// Body without the transport-level members.
Value payload_of(const Value& body, std::initializer_list<std::string_view> drop) {
    Object out;
    for (const auto& m : body.as_object()) {
        bool skip = m.name == "revision" || m.name == "actor";
        for (auto d : drop) skip |= m.name == d;
        if (!skip) out.push_back(m);
    }
    return out;
}

int status_for(const DomainError& e) {
    if (e.code() == "not_found") return 404;
    if (e.code() == "revision_conflict") return 409;
    return 422;
}

}  // namespace

struct HttpService::Impl {
    Store& store;
    httplib::Server server;
    std::thread thread;

    explicit Impl(Store& s) : store(s) { routes(); }

    template <class F>
    httplib::Server::Handler wrap(F fn) {
        return [fn](const httplib::Request& req, httplib::Response& res) {
            try {
                fn(req, res);
            } catch (const HttpError& e) {
                send(res, e.status, error_body(e.code, e.message));
            } catch (const DomainError& e) {
                send(res, status_for(e), error_body(e.code(), e.what()));
            } catch (const TestCaseError& e) {
                send(res, 422, error_body("invalid_test_case", e.what()));
            } catch (const TypeError& e) {
                send(res, 400, error_body("bad_request", e.what()));
            } catch (const std::exception& e) {
                send(res, 500, error_body("internal", e.what()));
            }
        };
    }

    Value event_response(const std::string& sid, const AuditEvent& e) {
        return Value::object({{"event", e.to_json()}, {"revision", e.seq}, {"session", store.session_json(sid)}});
    }

    void routes() {
        server.Get("/registry", wrap([this](const httplib::Request&, httplib::Response& res) {
                       send(res, 200, store.registry().to_json());
                   }));
        server.Get("/workflow", wrap([](const httplib::Request&, httplib::Response& res) {
                       send(res, 200, workflow_description());
                   }));

        server.Post("/validate", wrap([](const httplib::Request& req, httplib::Response& res) {
                        const Value body = body_of(req);
                        const Value* schema = body.find("schema");
                        const Value* instance = body.find("instance");
                        if (!schema || !instance) throw HttpError{400, "bad_request", "body needs schema and instance"};
                        const Value* lenient = body.find("lenient");
                        CompileOptions opts;
                        opts.lenient = lenient && lenient->is_bool() && lenient->as_bool();
                        try {
                            const auto compiled = compile_schema(Document{*schema, "schema", {}}, opts);
                            send(res, 200, compiled.validate(*instance).to_json());
                        } catch (const CompileError& e) {
                            Value issues = Value::empty_array();
                            for (const auto& i : e.issues()) {
                                issues.push_back(Value::object(
                                    {{"kind", to_string(i.kind)}, {"path", i.path}, {"message", i.message}}));
                            }
                            Value err = error_body("schema_compile_error", e.what());
                            err.set("issues", std::move(issues));
                            send(res, 422, err);
                        }
                    }));

        server.Get("/sessions", wrap([this](const httplib::Request&, httplib::Response& res) {
                       Value ids = Value::empty_array();
                       for (auto& id : store.session_ids()) ids.push_back(std::move(id));
                       send(res, 200, Value::object({{"sessions", std::move(ids)}}));
                   }));
        server.Post("/sessions", wrap([this](const httplib::Request& req, httplib::Response& res) {
                        const Value body = body_of(req);
                        const std::string id = store.create_session(SessionInit::from_json(body), actor_of(req, body));
                        send(res, 201, store.session_json(id));
                    }));
        server.Get(R"(/sessions/([^/]+))", wrap([this](const httplib::Request& req, httplib::Response& res) {
                       send(res, 200, store.session_json(req.matches[1]));
                   }));
        server.Get(R"(/sessions/([^/]+)/audit)", wrap([this](const httplib::Request& req, httplib::Response& res) {
                       Value events = Value::empty_array();
                       store.read(req.matches[1], [&](const Session& s) {
                           for (const auto& e : s.audit()) events.push_back(e.to_json());
                       });
                       send(res, 200, Value::object({{"events", std::move(events)}}));
                   }));
        server.Post(R"(/sessions/([^/]+)/events)", wrap([this](const httplib::Request& req, httplib::Response& res) {
                        const std::string sid = req.matches[1];
                        const Value body = body_of(req);
                        const Value* type = body.find("type");
                        if (!type || !type->is_string()) throw HttpError{400, "bad_request", "body needs an event type"};
                        try {
                            event_kind_from(type->as_string());
                        } catch (const DomainError& e) {
                            throw HttpError{422, "unknown_event", e.what()};
                        }
                        const Value* p = body.find("payload");
                        const Value payload = p ? *p : Value::empty_object();
                        const auto e = store.apply(sid, type->as_string(), payload, actor_of(req, body), revision_of(body));
                        send(res, 200, event_response(sid, e));
                    }));

        server.Get(R"(/sessions/([^/]+)/defects)", wrap([this](const httplib::Request& req, httplib::Response& res) {
                       Value out;
                       store.read(req.matches[1], [&](const Session& s) {
                           out = s.matrix().to_json();
                           out.set("revision", s.revision());
                       });
                       send(res, 200, out);
                   }));
        server.Post(R"(/sessions/([^/]+)/defects)", wrap([this](const httplib::Request& req, httplib::Response& res) {
                        const std::string sid = req.matches[1];
                        const Value body = body_of(req);
                        const std::string action = body.get_string("action", "open");
                        std::string type;
                        if (action == "open") type = "defect_opened";
                        else if (action == "resolve") type = "defect_resolved";
                        else if (action == "reject") type = "defect_rejected";
                        else throw HttpError{400, "bad_request", "action must be open, resolve or reject"};
                        const auto e = store.apply(sid, type, payload_of(body, {"action"}), actor_of(req, body), revision_of(body));
                        send(res, action == "open" ? 201 : 200, event_response(sid, e));
                    }));
        server.Get(R"(/sessions/([^/]+)/matrix)", wrap([this](const httplib::Request& req, httplib::Response& res) {
                       Value out;
                       store.read(req.matches[1], [&](const Session& s) {
                           std::vector<ModelInfo> models;
                           for (const auto& m : s.models()) models.push_back({m.id, m.kind});
                           const QCSelection sel = s.selection().value_or(select_qcs(s.registry(), {}));
                           out = Value::object({{"revision", s.revision()},
                                                {"csv", s.matrix().to_csv(s.registry(), sel, models)},
                                                {"gate_preview", s.gate_preview()},
                                                {"matrix", s.matrix().to_json()}});
                       });
                       send(res, 200, out);
                   }));
        server.Post(R"(/sessions/([^/]+)/ratings)", wrap([this](const httplib::Request& req, httplib::Response& res) {
                        const std::string sid = req.matches[1];
                        const Value body = body_of(req);
                        const auto e = store.apply(sid, "rating_added", payload_of(body, {}), actor_of(req, body), revision_of(body));
                        send(res, 201, event_response(sid, e));
                    }));
        server.Post(R"(/sessions/([^/]+)/tests)", wrap([this](const httplib::Request& req, httplib::Response& res) {
                        const std::string sid = req.matches[1];
                        const Value body = body_of(req);
                        const auto e = store.apply(sid, "test_case_added", payload_of(body, {}), actor_of(req, body), revision_of(body));
                        Value out = event_response(sid, e);
                        out.set("test_id", sid + "." + e.result.get_string("test_case_id"));
                        send(res, 201, out);
                    }));

        server.Post(R"(/tests/([^/]+)/run)", wrap([this](const httplib::Request& req, httplib::Response& res) {
                        const Value body = body_of(req);
                        std::optional<std::string> url;
                        if (const Value* r = body.find("responder"); r && r->is_string()) url = r->as_string();
                        const std::string run_id = store.run_test(req.matches[1], actor_of(req, body), url, revision_of(body));
                        Value out = store.load_run(run_id).to_json();
                        send(res, 201, out);
                    }));
        server.Get(R"(/runs/([^/]+))", wrap([this](const httplib::Request& req, httplib::Response& res) {
                       const TestRun run = store.load_run(req.matches[1]);
                       if (req.get_param_value("format") == "text") {
                           res.status = 200;
                           res.set_content(report(run, "text"), "text/plain");
                       } else {
                           send(res, 200, run.to_json());
                       }
                   }));
        server.Post(R"(/runs/([^/]+)/classify)", wrap([this](const httplib::Request& req, httplib::Response& res) {
                        const std::string run_id = req.matches[1];
                        const std::string sid = store.session_of_run(run_id);
                        const Value body = body_of(req);
                        Value payload = payload_of(body, {});
                        payload.set("run_id", run_id);
                        const auto e = store.apply(sid, "finding_classified", payload, actor_of(req, body), revision_of(body));
                        Value out = event_response(sid, e);
                        out.set("run", store.load_run(run_id).to_json());
                        send(res, 200, out);
                    }));
    }
};

HttpService::HttpService(Store& store) : impl_(std::make_unique<Impl>(store)) {}

HttpService::~HttpService() { stop(); }

int HttpService::start(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
    } else if (!impl_->server.bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

void HttpService::listen(const std::string& host, int port) {
    if (!impl_->server.listen(host, port)) throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
}

void HttpService::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace modelgate
