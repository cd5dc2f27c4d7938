#pragma once

#include <stdexcept>
#include <string>

namespace mcrf {

// Malformed or inconsistent data: bad headers, labels out of range,
// duplicate sample cells, invalid probability tables.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem-level failures: unreadable input, unwritable output.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mcrf
