#pragma once

#include <stdexcept>
#include <string>

namespace mdht {

// Thrown when an operation's documented precondition does not hold.
// The CLI maps it to exit status 2.
struct PreconditionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

inline void require(bool ok, const std::string& what) {
    if (!ok) throw PreconditionError(what);
}

inline constexpr const char* kVersion = "0.3.1";

}  // namespace mdht
