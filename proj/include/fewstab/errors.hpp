#pragma once

#include <stdexcept>
#include <string>

namespace fewstab {

// Bad inputs: malformed files, violated preconditions, inconsistent records.
// The CLI maps this to exit code 2.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Episode construction exhausted its restart budget. Exit code 3.
struct ConstructionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace fewstab
