#pragma once

#include <stdexcept>
#include <string>

namespace chdrl {

/// Raised on contract violations: dimension mismatches, bad configs, NaNs.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace chdrl
