#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace pmpl {

// Exit codes used by the CLI: 0 success, 2 validation, 3 desync, 4 underflow.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
    virtual int exit_code() const { return 1; }
};

struct ArgumentError : Error {
    using Error::Error;
    int exit_code() const override { return 2; }
};

// A public-matrix candidate failed one or more restrictions.
struct ValidationError : Error {
    std::vector<std::string> violations;
    explicit ValidationError(std::vector<std::string> v)
        : Error("public matrix validation failed: " + join(v)), violations(std::move(v)) {}
    int exit_code() const override { return 2; }

  private:
    static std::string join(const std::vector<std::string>& v) {
        std::string s;
        for (size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
        return s;
    }
};

struct ProtocolDesync : Error {
    using Error::Error;
    int exit_code() const override { return 3; }
};

struct PreprocUnderflow : Error {
    using Error::Error;
    int exit_code() const override { return 4; }
};

struct TransportError : Error {
    using Error::Error;
    int exit_code() const override { return 3; }
};

struct ParseError : Error {
    using Error::Error;
    int exit_code() const override { return 2; }
};

}  // namespace pmpl
