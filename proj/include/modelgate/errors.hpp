#pragma once

#include <stdexcept>
#include <string>

namespace modelgate {

/// A rejected domain operation. `code` is a stable snake_case identifier
/// (for example "illegal_transition", "unknown_qc", "not_found").
class DomainError : public std::runtime_error {
  public:
    DomainError(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

  private:
    std::string code_;
};

}  // namespace modelgate
