#pragma once

#include <stdexcept>
#include <string>

namespace dilution {

// Raised for malformed input data: missing or inconsistent files, grid
// mismatches, degenerate numeric ranges. The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dilution
