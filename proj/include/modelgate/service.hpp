#pragma once

#include <memory>
#include <string>

#include "modelgate/store.hpp"

namespace modelgate {

/// JSON-over-HTTP front end for a Store.
///
/// Errors are `{"error": code, "message": text}` with status 400 (malformed
/// body), 404 (unknown id), 409 (revision conflict), 422 (rejected by a
/// domain rule) or 500.
class HttpService {
  public:
    explicit HttpService(Store& store);
    ~HttpService();
    HttpService(const HttpService&) = delete;
    HttpService& operator=(const HttpService&) = delete;

    /// Binds and serves on a background thread. Port 0 picks a free port;
    /// returns the bound port. Throws std::runtime_error when binding fails.
    int start(const std::string& host, int port);
    /// Binds and serves on the calling thread until stop().
    void listen(const std::string& host, int port);
    void stop();

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace modelgate
