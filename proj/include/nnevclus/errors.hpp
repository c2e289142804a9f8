#pragma once

#include <stdexcept>
#include <string>

namespace nnevclus {

// Bad user input: dimension mismatches, out-of-range settings, failed
// tolerance gates. Maps to process exit code 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// File system and parse failures. Maps to process exit code 2.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace nnevclus
