#pragma once

#include <stdexcept>
#include <string>

namespace blade {

// Malformed input file; the message names the offending line.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// File carries a schema version this build does not understand.
class VersionError : public std::runtime_error {
public:
    explicit VersionError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace blade
