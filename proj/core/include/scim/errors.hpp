#pragma once

#include <stdexcept>
#include <string>

namespace scim {

/// Input that is well-formed on disk but violates a contract (bad shapes,
/// out-of-range ids, empty sets where a value is required).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Filesystem failure: missing file, unreadable or unwritable path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace scim
