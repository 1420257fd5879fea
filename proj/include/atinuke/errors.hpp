#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace atinuke {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Incompatible tensor extents; message names both shapes.
struct ShapeError : Error {
    using Error::Error;
};

// Invalid ModelConfig; carries one message per violated constraint.
struct ConfigError : Error {
    explicit ConfigError(std::vector<std::string> violations)
        : Error(join(violations)), violations(std::move(violations)) {}
    explicit ConfigError(const std::string& msg)
        : ConfigError(std::vector<std::string>{msg}) {}

    std::vector<std::string> violations;

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string out;
        for (const auto& s : v) {
            if (!out.empty()) out += "; ";
            out += s;
        }
        return out;
    }
};

// Out-of-range index (token id, position, target).
struct IndexError : Error {
    using Error::Error;
};

struct RangeError : Error {
    using Error::Error;
};

// Non-finite values where finite arithmetic is required.
struct NumericError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace atinuke
