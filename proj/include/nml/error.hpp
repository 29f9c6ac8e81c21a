#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace nml {

// Precondition / invariant violations (caller bugs).
class contract_error : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Non-finite values, divergence, overflow.
class numeric_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input files (IDX, CSV, manifest, checkpoint).
class format_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Filesystem failures.
class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad run configuration (unknown keys, unparsable values).
class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

template <typename... Args>
std::string msg(Args&&... args) {
    std::ostringstream os;
    (os << ... << args);
    return os.str();
}

} // namespace detail

} // namespace nml

#define NML_REQUIRE(cond, ...)                                          \
    do {                                                                \
        if (!(cond)) throw ::nml::contract_error(::nml::detail::msg(__VA_ARGS__)); \
    } while (0)

#define NML_REQUIRE_NUMERIC(cond, ...)                                  \
    do {                                                                \
        if (!(cond)) throw ::nml::numeric_error(::nml::detail::msg(__VA_ARGS__)); \
    } while (0)
