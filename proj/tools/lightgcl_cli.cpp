// SPDX-License-Identifier: Apache-2.0
#include <iostream>
#include <string>
#include <vector>

#include "lightgcl/commands.hpp"

int main(int argc, char** argv) {
    return lightgcl::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
