// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lightgcl/data.hpp"
#include "lightgcl/svd.hpp"
#include "lightgcl/trainer.hpp"

namespace lightgcl {

// Everything a CLI run needs. Parsed from flat `key = value` text (one pair
// per line, `#` starts a comment) and then from command-line overrides.
struct RunConfig {
    std::filesystem::path interactions;
    InputFormat format = InputFormat::tsv;
    std::filesystem::path workdir = "work";
    double test_ratio = 0.2;
    double val_ratio = 0.05;
    std::uint64_t split_seed = 7;

    RsvdConfig svd{};
    TrainConfig train{};

    std::vector<std::size_t> eval_ns{20, 40};
    std::vector<std::size_t> groups;
    std::size_t mad_sample = 2000;

    RunConfig() { svd.seed = 11; }

    // Applies one assignment. Unknown keys and unparsable values throw ConfigError.
    void set(const std::string& key, const std::string& value);
    // Applies every `key = value` line of `text`.
    void apply_text(const std::string& text, const std::string& origin = "<config>");
    void apply_file(const std::filesystem::path& path);
    // Accepts `key=value`.
    void apply_override(const std::string& assignment);

    void validate() const;

    // Canonical dump of every key; feeding it back through apply_text
    // reproduces this configuration exactly.
    std::string to_text() const;

    static const std::vector<std::string>& keys();
};

}  // namespace lightgcl
