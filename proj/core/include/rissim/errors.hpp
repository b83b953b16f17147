// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace rissim {

/// Raised when an argument violates an operation's preconditions.
class InvalidInput : public std::invalid_argument {
public:
    explicit InvalidInput(const std::string &what) : std::invalid_argument(what) {}
};

/// Raised for degenerate geometry (coincident elements, zero distances, non-finite positions).
class InvalidGeometry : public std::invalid_argument {
public:
    explicit InvalidGeometry(const std::string &what) : std::invalid_argument(what) {}
};

} // namespace rissim
