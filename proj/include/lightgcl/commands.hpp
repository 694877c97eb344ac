// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lightgcl/config.hpp"
#include "lightgcl/eval.hpp"

namespace lightgcl {

// Files produced inside a work directory.
struct WorkdirLayout {
    std::filesystem::path root;

    std::filesystem::path config() const { return root / "config.effective"; }
    std::filesystem::path train() const { return root / "train.tsv"; }
    std::filesystem::path valid() const { return root / "valid.tsv"; }
    std::filesystem::path test() const { return root / "test.tsv"; }
    std::filesystem::path idmap() const { return root / "idmap.tsv"; }
    std::filesystem::path adjacency() const { return root / "adjacency.bin"; }
    std::filesystem::path factors() const { return root / "factors.bin"; }
    std::filesystem::path checkpoint() const { return root / "checkpoint.bin"; }
    std::filesystem::path progress() const { return root / "progress.bin"; }
    std::filesystem::path train_log() const { return root / "train_log.tsv"; }
    std::filesystem::path valid_log() const { return root / "valid_log.tsv"; }
    std::filesystem::path report_json() const { return root / "report.json"; }
    std::filesystem::path report_tsv() const { return root / "report.tsv"; }
    std::filesystem::path sweep_summary() const { return root / "sweep_summary.tsv"; }
};

// Graph statistics printed by preprocess.
struct GraphStats {
    std::size_t users = 0;
    std::size_t items = 0;
    std::size_t interactions = 0;
    std::size_t train = 0;
    std::size_t valid = 0;
    std::size_t test = 0;
    double density() const;
};

// Load, split (test, then validation out of the remainder), normalise and
// factorise. The adjacency and factors are built from train.tsv.
GraphStats cmd_preprocess(const RunConfig& config, std::ostream& out);

// Trains on train.tsv with early stopping on valid.tsv.
void cmd_train(const RunConfig& config, bool resume, std::ostream& out);

// Evaluates a checkpoint on test.tsv, excluding train and validation items
// from the candidate lists. Writes report.json and report.tsv.
MetricsReport cmd_evaluate(const RunConfig& config, const std::optional<std::filesystem::path>& checkpoint,
                           const std::optional<std::vector<std::size_t>>& groups, std::ostream& out);

// Grid sweep over {lambda1, tau, q, dropout, edge_dropout, node_dropout}.
// Grid syntax: `key=v1,v2;key2=v3`. Points run in workdir/sweep/point_<k>.
void cmd_sweep(const RunConfig& config, const std::string& grid, std::size_t jobs, std::ostream& out);

// Full command-line entry point; returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lightgcl
