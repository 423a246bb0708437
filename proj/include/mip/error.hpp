#pragma once

#include <stdexcept>
#include <string>

namespace mip {

// All recoverable failures carry a short machine-readable code plus a human
// message. The CLI maps the code to its one-line error output.
class MipError : public std::runtime_error {
public:
    MipError(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const { return code_; }

private:
    std::string code_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& message) {
    throw MipError(code, message);
}

} // namespace mip
