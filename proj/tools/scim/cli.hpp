#pragma once

#include <ostream>

namespace scim::cli {

/// Runs the scim command line. Returns 0 on success, 1 on a validation
/// error and 2 on an I/O error.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace scim::cli
