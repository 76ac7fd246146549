#pragma once

#include <stdexcept>
#include <string>

namespace ff {

/// Unreadable, missing or malformed input data (as opposed to bad arguments).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace ff
