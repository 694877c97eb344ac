// SPDX-License-Identifier: Apache-2.0
#include "lightgcl/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lightgcl/errors.hpp"

namespace lightgcl {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size())
        throw ConfigError("config key '" + key + "': expected a nonnegative integer, got '" + v + "'");
    return out;
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double out = std::stod(v, &used);
        if (used != v.size() || !std::isfinite(out)) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config key '" + key + "': expected true/false, got '" + v + "'");
}

std::vector<std::size_t> parse_list(const std::string& key, const std::string& v) {
    std::vector<std::size_t> out;
    if (trim(v).empty()) return out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_uint(key, trim(item)));
    return out;
}

// shortest text that round-trips
std::string fmt_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string fmt_list(const std::vector<std::size_t>& v) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + std::to_string(v[k]);
    return s;
}

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
    static const std::vector<std::string> k{
        "interactions", "format",       "workdir",      "test_ratio",     "val_ratio",  "split_seed",  "d",
        "layers",       "batch_size",   "q",            "oversample",     "power_iters", "svd_seed",   "lambda1",
        "lambda2",      "tau",          "edge_dropout", "node_dropout",   "dropout",    "cl_skip_layer0",
        "sampler",      "samples_per_user", "epochs",   "lr",             "patience",   "seed",        "eval_ns",
        "groups",       "mad_sample"};
    return k;
}

void RunConfig::set(const std::string& raw_key, const std::string& raw_value) {
    const std::string key = trim(raw_key);
    const std::string value = trim(raw_value);
    if (key == "interactions") interactions = value;
    else if (key == "format") {
        if (value == "tsv") format = InputFormat::tsv;
        else if (value == "csv") format = InputFormat::csv;
        else throw ConfigError("config key 'format': expected tsv or csv, got '" + value + "'");
    } else if (key == "workdir") workdir = value;
    else if (key == "test_ratio") test_ratio = parse_double(key, value);
    else if (key == "val_ratio") val_ratio = parse_double(key, value);
    else if (key == "split_seed") split_seed = parse_uint(key, value);
    else if (key == "d") train.dim = parse_uint(key, value);
    else if (key == "layers") train.layers = parse_uint(key, value);
    else if (key == "batch_size") train.batch_size = parse_uint(key, value);
    else if (key == "q") svd.rank = parse_uint(key, value);
    else if (key == "oversample") {
        if (value == "auto") svd.oversample.reset();
        else svd.oversample = parse_uint(key, value);
    } else if (key == "power_iters") svd.power_iters = parse_uint(key, value);
    else if (key == "svd_seed") svd.seed = parse_uint(key, value);
    else if (key == "lambda1") train.lambda1 = parse_double(key, value);
    else if (key == "lambda2") train.lambda2 = parse_double(key, value);
    else if (key == "tau") train.tau = parse_double(key, value);
    else if (key == "edge_dropout") train.edge_dropout = parse_double(key, value);
    else if (key == "node_dropout") train.node_dropout = parse_double(key, value);
    else if (key == "dropout") train.edge_dropout = train.node_dropout = parse_double(key, value);
    else if (key == "cl_skip_layer0") train.cl_skip_layer0 = parse_bool(key, value);
    else if (key == "sampler") {
        if (value == "per_interaction") train.sampler = SamplerKind::per_interaction;
        else if (value == "per_user") train.sampler = SamplerKind::per_user;
        else throw ConfigError("config key 'sampler': expected per_interaction or per_user, got '" + value + "'");
    } else if (key == "samples_per_user") train.samples_per_user = parse_uint(key, value);
    else if (key == "epochs") train.epochs = parse_uint(key, value);
    else if (key == "lr") train.learning_rate = parse_double(key, value);
    else if (key == "patience") train.patience = parse_uint(key, value);
    else if (key == "seed") train.seed = parse_uint(key, value);
    else if (key == "eval_ns") eval_ns = parse_list(key, value);
    else if (key == "groups") groups = parse_list(key, value);
    else if (key == "mad_sample") mad_sample = parse_uint(key, value);
    else throw ConfigError("unknown config key '" + key + "'");
}

void RunConfig::apply_text(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
        try {
            set(line.substr(0, eq), line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

void RunConfig::apply_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    apply_text(ss.str(), path.string());
}

void RunConfig::apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not of the form key=value");
    set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

void RunConfig::validate() const {
    if (!(test_ratio > 0.0 && test_ratio < 1.0)) throw ConfigError("test_ratio must lie in (0,1)");
    if (!(val_ratio >= 0.0 && val_ratio < 1.0)) throw ConfigError("val_ratio must lie in [0,1)");
    if (svd.rank == 0) throw ConfigError("q must be at least 1");
    if (eval_ns.empty()) throw ConfigError("eval_ns must list at least one cutoff");
    for (std::size_t n : eval_ns)
        if (n == 0) throw ConfigError("eval_ns entries must be positive");
    for (std::size_t k = 1; k < groups.size(); ++k)
        if (groups[k] <= groups[k - 1]) throw ConfigError("groups must be strictly ascending");
    train.validate();
}

std::string RunConfig::to_text() const {
    std::ostringstream o;
    o << "# effective configuration\n";
    o << "interactions = " << interactions.string() << '\n';
    o << "format = " << (format == InputFormat::tsv ? "tsv" : "csv") << '\n';
    o << "workdir = " << workdir.string() << '\n';
    o << "test_ratio = " << fmt_double(test_ratio) << '\n';
    o << "val_ratio = " << fmt_double(val_ratio) << '\n';
    o << "split_seed = " << split_seed << '\n';
    o << "d = " << train.dim << '\n';
    o << "layers = " << train.layers << '\n';
    o << "batch_size = " << train.batch_size << '\n';
    o << "q = " << svd.rank << '\n';
    o << "oversample = " << (svd.oversample ? std::to_string(*svd.oversample) : std::string("auto")) << '\n';
    o << "power_iters = " << svd.power_iters << '\n';
    o << "svd_seed = " << svd.seed << '\n';
    o << "lambda1 = " << fmt_double(train.lambda1) << '\n';
    o << "lambda2 = " << fmt_double(train.lambda2) << '\n';
    o << "tau = " << fmt_double(train.tau) << '\n';
    o << "edge_dropout = " << fmt_double(train.edge_dropout) << '\n';
    o << "node_dropout = " << fmt_double(train.node_dropout) << '\n';
    o << "cl_skip_layer0 = " << (train.cl_skip_layer0 ? "true" : "false") << '\n';
    o << "sampler = " << (train.sampler == SamplerKind::per_interaction ? "per_interaction" : "per_user") << '\n';
    o << "samples_per_user = " << train.samples_per_user << '\n';
    o << "epochs = " << train.epochs << '\n';
    o << "lr = " << fmt_double(train.learning_rate) << '\n';
    o << "patience = " << train.patience << '\n';
    o << "seed = " << train.seed << '\n';
    o << "eval_ns = " << fmt_list(eval_ns) << '\n';
    o << "groups = " << fmt_list(groups) << '\n';
    o << "mad_sample = " << mad_sample << '\n';
    return o.str();
}

}  // namespace lightgcl
