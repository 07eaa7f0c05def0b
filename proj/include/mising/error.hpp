#pragma once

#include <stdexcept>
#include <string>

namespace mising {

enum class ErrorKind {
    precondition,  // invalid argument or violated numerical precondition
    infeasible,    // exact computation exceeds the configured size limits
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) {
        throw Error(ErrorKind::precondition, message);
    }
}

[[noreturn]] inline void infeasible(const std::string& message) {
    throw Error(ErrorKind::infeasible, message);
}

}  // namespace mising
