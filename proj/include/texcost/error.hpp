#pragma once

#include <stdexcept>
#include <string>

namespace texcost {

/// Raised for every contract violation and I/O failure in the library.
class error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool condition, const std::string &message) {
    if (!condition) {
        throw error(message);
    }
}

}  // namespace detail
}  // namespace texcost
