// SPDX-License-Identifier: Apache-2.0
#include "lightgcl/commands.hpp"


#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <charconv>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "lightgcl/errors.hpp"
#include "lightgcl/model.hpp"
#include "lightgcl/random.hpp"
#include "lightgcl/svd.hpp"
#include "lightgcl/trainer.hpp"

namespace fs = std::filesystem;

namespace lightgcl {

namespace {

// shortest text that round-trips
std::string fmt(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw DataError("failed writing " + path.string());
}

void require_artifact(const fs::path& path) {
    if (!fs::exists(path))
        throw DataError("missing " + path.string() + "; run `lightgcl preprocess` with the same workdir first");
}

struct Dims {
    std::size_t users;
    std::size_t items;
};

Dims read_dims(const WorkdirLayout& w) {
    require_artifact(w.idmap());
    const IdMap ids = read_idmap(w.idmap());
    return {ids.raw_users.size(), ids.raw_items.size()};
}

InteractionSet read_split(const fs::path& path, const Dims& dims) {
    require_artifact(path);
    return load_dense_interactions(path, dims.users, dims.items);
}

InteractionSet merge(const InteractionSet& a, const InteractionSet& b) {
    std::vector<Interaction> pairs = a.pairs;
    pairs.insert(pairs.end(), b.pairs.begin(), b.pairs.end());
    return InteractionSet::make(a.user_count, a.item_count, std::move(pairs));
}

const char* kTrainLogHeader = "epoch\tbatch\tranking\tcl_user\tcl_item\treg\ttotal\n";
const char* kValidLogHeader = "epoch\trecall@20\tndcg@20\n";

// Keeps the header and every row whose first column is an epoch < next_epoch.
void truncate_log(const fs::path& path, const char* header, std::size_t next_epoch) {
    std::string kept = header;
    if (std::ifstream in(path); in) {
        std::string line;
        bool first = true;
        while (std::getline(in, line)) {
            if (first) {
                first = false;
                continue;
            }
            const auto tab = line.find('\t');
            if (tab == std::string::npos) continue;
            if (std::stoull(line.substr(0, tab)) < next_epoch) kept += line + "\n";
        }
    }
    write_text(path, kept);
}

std::vector<std::size_t> parse_groups(const std::string& text) {
    RunConfig scratch;
    scratch.set("groups", text);
    return scratch.groups;
}

}  // namespace

double GraphStats::density() const {
    return users && items ? static_cast<double>(interactions) / (static_cast<double>(users) * static_cast<double>(items)) : 0.0;
}

GraphStats cmd_preprocess(const RunConfig& config, std::ostream& out) {
    config.validate();
    if (config.interactions.empty()) throw ConfigError("preprocess: the `interactions` path is not set");
    const WorkdirLayout w{config.workdir};
    fs::create_directories(w.root);

    const auto loaded = load_interactions(config.interactions, config.format);
    const auto [rest, test] = split(loaded.set, config.test_ratio, config.split_seed);
    InteractionSet fit = rest;
    InteractionSet valid{rest.user_count, rest.item_count, {}};
    if (config.val_ratio > 0.0) std::tie(fit, valid) = split(rest, config.val_ratio, derive_seed(config.split_seed, {1}));

    const SparseBipartite adj = normalize(fit);
    const LowRankFactors factors = approx_svd(adj, config.svd);

    write_interactions(w.train(), fit);
    write_interactions(w.valid(), valid);
    write_interactions(w.test(), test);
    write_idmap(w.idmap(), loaded.ids);
    adj.save(w.adjacency());
    factors.save(w.factors());
    write_text(w.config(), config.to_text());

    GraphStats stats{loaded.set.user_count, loaded.set.item_count, loaded.set.size(), fit.size(), valid.size(), test.size()};
    out << "I=" << stats.users << " J=" << stats.items << " E=" << stats.interactions << " density=" << stats.density()
        << " train=" << stats.train << " valid=" << stats.valid << " test=" << stats.test << " q=" << factors.rank() << '\n';
    return stats;
}

void cmd_train(const RunConfig& config, bool resume, std::ostream& out) {
    config.validate();
    const WorkdirLayout w{config.workdir};
    const Dims dims = read_dims(w);
    const InteractionSet fit = read_split(w.train(), dims);
    const InteractionSet valid = read_split(w.valid(), dims);
    require_artifact(w.adjacency());
    require_artifact(w.factors());
    const SparseBipartite adj = SparseBipartite::load(w.adjacency());
    const LowRankFactors factors = LowRankFactors::load(w.factors());
    if (adj.rows() != dims.users || adj.cols() != dims.items) throw DataError("adjacency cache does not match idmap.tsv");

    std::optional<TrainProgress> progress;
    if (resume) {
        if (fs::exists(w.progress())) {
            progress = TrainProgress::load(w.progress());
            out << "resuming at epoch " << progress->next_epoch << '\n';
        } else {
            warn("--resume given but " + w.progress().string() + " does not exist; starting from scratch");
        }
    }
    const std::size_t start_epoch = progress ? progress->next_epoch : 0;
    truncate_log(w.train_log(), kTrainLogHeader, start_epoch);
    truncate_log(w.valid_log(), kValidLogHeader, start_epoch);
    write_text(w.config(), config.to_text());

    std::ofstream train_log(w.train_log(), std::ios::app | std::ios::binary);
    std::ofstream valid_log(w.valid_log(), std::ios::app | std::ios::binary);
    if (!train_log || !valid_log) throw DataError("cannot open training logs in " + w.root.string());

    TrainCallbacks callbacks;
    callbacks.on_batch = [&](const BatchLogRow& row) {
        const auto& l = row.loss;
        train_log << row.epoch << '\t' << row.batch << '\t' << fmt(l.ranking) << '\t' << fmt(l.cl_user) << '\t' << fmt(l.cl_item)
                  << '\t' << fmt(l.reg) << '\t' << fmt(l.total) << '\n';
    };
    callbacks.on_validation = [&](const ValidationRow& row) {
        valid_log << row.epoch << '\t' << fmt(row.recall20) << '\t' << fmt(row.ndcg20) << '\n';
        out << "epoch " << row.epoch << " recall@20=" << row.recall20 << " ndcg@20=" << row.ndcg20 << '\n';
    };
    callbacks.on_epoch_end = [&](const TrainProgress& p) {
        train_log.flush();
        valid_log.flush();
        p.save(w.progress());
    };

    const TrainResult result = train(config.train, fit, adj, factors, valid.empty() ? nullptr : &valid, callbacks, std::move(progress));
    train_log.close();
    valid_log.close();
    save_checkpoint(w.checkpoint(), result.best);
    out << "trained " << result.epochs_run << " epochs; best epoch " << result.best_epoch << " (validation recall@20 "
        << result.best_recall << ")" << (result.early_stopped ? ", early-stopped" : "") << '\n';
}

MetricsReport cmd_evaluate(const RunConfig& config, const std::optional<fs::path>& checkpoint,
                           const std::optional<std::vector<std::size_t>>& groups, std::ostream& out) {
    config.validate();
    const WorkdirLayout w{config.workdir};
    const Dims dims = read_dims(w);
    const InteractionSet fit = read_split(w.train(), dims);
    const InteractionSet valid = read_split(w.valid(), dims);
    const InteractionSet test = read_split(w.test(), dims);
    require_artifact(w.adjacency());
    const SparseBipartite adj = SparseBipartite::load(w.adjacency());

    const fs::path ckpt = checkpoint.value_or(w.checkpoint());
    require_artifact(ckpt);
    EmbeddingState state = load_checkpoint(ckpt);
    if (state.user_count() != dims.users || state.item_count() != dims.items)
        throw ConfigError("checkpoint " + ckpt.string() + " does not match the dataset in " + w.root.string());
    propagate_for_eval(state, adj);

    EvalOptions options;
    options.ns = config.eval_ns;
    if (groups) options.group_boundaries = *groups;
    else if (!config.groups.empty()) options.group_boundaries = config.groups;

    MetricsReport report = evaluate(state, merge(fit, valid), test, options);
    Matrix all(state.e_user.rows() + state.e_item.rows(), state.dim);
    std::copy(state.e_user.values().begin(), state.e_user.values().end(), all.values().begin());
    std::copy(state.e_item.values().begin(), state.e_item.values().end(), all.values().begin() + static_cast<std::ptrdiff_t>(state.e_user.size()));
    report.mad = mad(all, config.mad_sample, config.train.seed);

    write_text(w.report_json(), report.to_json());
    write_text(w.report_tsv(), report.to_tsv());
    for (std::size_t n : report.ns)
        out << "recall@" << n << "=" << report.overall.at(n).recall << " ndcg@" << n << "=" << report.overall.at(n).ndcg << '\n';
    out << "users=" << report.users_evaluated << " mad=" << *report.mad << '\n';
    return report;
}

namespace {

struct GridAxis {
    std::string key;
    std::vector<std::string> values;
};

std::vector<GridAxis> parse_grid(const std::string& grid) {
    static const std::vector<std::string> allowed{"lambda1", "tau", "q", "dropout", "edge_dropout", "node_dropout"};
    std::vector<GridAxis> axes;
    std::stringstream ss(grid);
    std::string part;
    while (std::getline(ss, part, ';')) {
        if (part.find_first_not_of(" \t") == std::string::npos) continue;
        const auto eq = part.find('=');
        if (eq == std::string::npos) throw ConfigError("grid axis '" + part + "' is not of the form key=v1,v2");
        GridAxis axis;
        axis.key = part.substr(0, eq);
        axis.key.erase(std::remove(axis.key.begin(), axis.key.end(), ' '), axis.key.end());
        if (std::find(allowed.begin(), allowed.end(), axis.key) == allowed.end())
            throw ConfigError("grid key '" + axis.key + "' is not sweepable (use lambda1, tau, q, dropout, edge_dropout, node_dropout)");
        std::stringstream vs(part.substr(eq + 1));
        std::string v;
        while (std::getline(vs, v, ',')) {
            v.erase(std::remove(v.begin(), v.end(), ' '), v.end());
            if (!v.empty()) axis.values.push_back(v);
        }
        if (axis.values.empty()) throw ConfigError("grid key '" + axis.key + "' has no values");
        axes.push_back(std::move(axis));
    }
    if (axes.empty()) throw ConfigError("empty grid");
    return axes;
}

void copy_artifact(const fs::path& from, const fs::path& to) { fs::copy_file(from, to, fs::copy_options::overwrite_existing); }

}  // namespace

void cmd_sweep(const RunConfig& config, const std::string& grid, std::size_t jobs, std::ostream& out) {
    config.validate();
    const auto axes = parse_grid(grid);
    const WorkdirLayout base{config.workdir};
    std::ostringstream quiet;
    cmd_preprocess(config, quiet);

    // Cartesian product, first axis varying slowest.
    std::vector<std::vector<std::string>> points{{}};
    for (const auto& axis : axes) {
        std::vector<std::vector<std::string>> next;
        for (const auto& p : points)
            for (const auto& v : axis.values) {
                auto q = p;
                q.push_back(v);
                next.push_back(std::move(q));
            }
        points = std::move(next);
    }

    struct Row {
        bool ok = false;
        std::string error;
        MetricsReport report;
    };
    std::vector<Row> rows(points.size());
    std::atomic<std::size_t> next_point{0};
    std::mutex out_mutex;

    auto run_point = [&](std::size_t k) {
        Row& row = rows[k];
        try {
            RunConfig pc = config;
            for (std::size_t a = 0; a < axes.size(); ++a) pc.set(axes[a].key, points[k][a]);
            pc.workdir = base.root / "sweep" / ("point_" + std::to_string(k));
            const WorkdirLayout w{pc.workdir};
            fs::create_directories(w.root);
            for (auto member : {&WorkdirLayout::train, &WorkdirLayout::valid, &WorkdirLayout::test, &WorkdirLayout::idmap,
                                &WorkdirLayout::adjacency})
                copy_artifact((base.*member)(), (w.*member)());
            if (pc.svd.rank == config.svd.rank) {
                copy_artifact(base.factors(), w.factors());
            } else {
                approx_svd(SparseBipartite::load(w.adjacency()), pc.svd).save(w.factors());
            }
            std::ostringstream log;
            cmd_train(pc, false, log);
            row.report = cmd_evaluate(pc, std::nullopt, std::nullopt, log);
            write_text(w.root / "run.log", log.str());
            row.ok = true;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        std::lock_guard lock(out_mutex);
        out << "point " << k << (row.ok ? " done" : " failed: " + row.error) << '\n';
    };

    const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, points.size()));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < workers; ++t)
        pool.emplace_back([&] {
            for (std::size_t k; (k = next_point++) < points.size();) run_point(k);
        });
    for (std::size_t k; (k = next_point++) < points.size();) run_point(k);
    for (auto& t : pool) t.join();

    std::ostringstream tsv;
    tsv << "point";
    for (const auto& axis : axes) tsv << '\t' << axis.key;
    tsv << "\tstatus";
    for (std::size_t n : config.eval_ns) tsv << "\trecall@" << n << "\tndcg@" << n;
    tsv << "\terror\n";
    for (std::size_t k = 0; k < points.size(); ++k) {
        tsv << k;
        for (const auto& v : points[k]) tsv << '\t' << v;
        tsv << '\t' << (rows[k].ok ? "ok" : "failed");
        for (std::size_t n : config.eval_ns) {
            if (rows[k].ok) tsv << '\t' << fmt(rows[k].report.overall.at(n).recall) << '\t' << fmt(rows[k].report.overall.at(n).ndcg);
            else tsv << "\t-\t-";
        }
        std::string err = rows[k].error;
        std::replace(err.begin(), err.end(), '\t', ' ');
        std::replace(err.begin(), err.end(), '\n', ' ');
        tsv << '\t' << (err.empty() ? "-" : err) << '\n';
    }
    write_text(base.sweep_summary(), tsv.str());
    out << "wrote " << base.sweep_summary().string() << " (" << points.size() << " points)\n";
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Graph contrastive collaborative filtering with an SVD-augmented view", "lightgcl"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    bool resume = false;
    std::string checkpoint;
    std::string groups;
    std::string grid;
    std::size_t jobs = 1;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path, "key=value configuration file");
        sub->add_option("overrides", overrides, "key=value overrides applied after the config file");
    };
    auto* pre = app.add_subcommand("preprocess", "split, normalise and factorise an interaction file");
    add_common(pre);
    auto* tr = app.add_subcommand("train", "train on a preprocessed work directory");
    add_common(tr);
    tr->add_flag("--resume", resume, "continue from progress.bin");
    auto* ev = app.add_subcommand("evaluate", "evaluate a checkpoint on the test split");
    add_common(ev);
    ev->add_option("--checkpoint", checkpoint, "checkpoint path (default: <workdir>/checkpoint.bin)");
    ev->add_option("--groups", groups, "degree-group boundaries, e.g. 15,30,50");
    auto* sw = app.add_subcommand("sweep", "train and evaluate a hyperparameter grid");
    add_common(sw);
    sw->add_option("--grid", grid, "grid spec, e.g. \"tau=0.3,0.5;lambda1=1e-7,0\"")->required();
    sw->add_option("--jobs", jobs, "grid points run concurrently")->check(CLI::PositiveNumber);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();  // program name
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        RunConfig config;
        if (!config_path.empty()) config.apply_file(config_path);
        for (const auto& o : overrides) config.apply_override(o);

        if (pre->parsed()) cmd_preprocess(config, out);
        else if (tr->parsed()) cmd_train(config, resume, out);
        else if (ev->parsed())
            cmd_evaluate(config, checkpoint.empty() ? std::nullopt : std::optional<fs::path>(checkpoint),
                         groups.empty() ? std::nullopt : std::optional(parse_groups(groups)), out);
        else if (sw->parsed()) cmd_sweep(config, grid, jobs, out);
        return 0;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return 1;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return 2;
    } catch (const fs::filesystem_error& e) {
        err << "data error: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return 3;
    }
}

}  // namespace lightgcl
