#ifndef FLOWSTITCH_ERRORS_HPP
#define FLOWSTITCH_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace flowstitch {

// Violated precondition or invariant (dimension mismatch, bad params, ...).
class ContractError : public std::runtime_error {
public:
    explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

// Failed file read/write.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Unsupported or malformed file content.
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Layout file is syntactically valid but describes an impossible placement.
class LayoutError : public std::runtime_error {
public:
    explicit LayoutError(const std::string& msg) : std::runtime_error(msg) {}
};

// A region required by the operation is empty (no overlap, all-false mask, no texture).
class EmptyRegionError : public std::runtime_error {
public:
    explicit EmptyRegionError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace flowstitch

#endif
