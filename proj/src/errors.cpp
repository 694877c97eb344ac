// SPDX-License-Identifier: Apache-2.0
#include "lightgcl/errors.hpp"

#include <atomic>
#include <iostream>

namespace lightgcl {

namespace {
std::atomic<bool> g_warnings{true};
}

void warn(const std::string& message) {
    if (g_warnings.load()) std::cerr << "warning: " << message << '\n';
}

void set_warnings_enabled(bool enabled) { g_warnings.store(enabled); }

}  // namespace lightgcl
