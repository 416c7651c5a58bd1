#pragma once

#include <stdexcept>
#include <string>

namespace structlim {

/// Formula text could not be parsed. `position` is a 0-based character offset.
struct parse_error : std::runtime_error {
    std::size_t position;
    parse_error(const std::string& what, std::size_t pos)
        : std::runtime_error(what), position(pos) {}
};

/// A structure, manifest, or graphing spec file is missing or malformed.
struct file_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// An exact enumeration would exceed the configured budget.
struct budget_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace structlim
