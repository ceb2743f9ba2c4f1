#include "cli.hpp"

#include "coldstart/clustering.hpp"
#include "coldstart/errors.hpp"
#include "coldstart/model_io.hpp"
#include "coldstart/ratings.hpp"
#include "coldstart/simulation.hpp"
#include "coldstart/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

namespace coldstart::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Stream tags for derive_seed.
constexpr std::uint64_t kTreeStream = 0x74726565;
constexpr std::uint64_t kModelStream = 0x6d6f64656c;

std::string tool_line() { return std::string(kToolName) + " " + kToolVersion; }

std::string num(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

std::string short_num(double x)
{
    std::ostringstream os;
    os << x;
    return os.str();
}

// ---------------------------------------------------------------- schemas

enum class Col { Text, Int, Num, Group };

struct Schema {
    std::string name;
    std::vector<std::pair<std::string, Col>> columns;
};

const std::vector<Schema>& schemas()
{
    static const std::vector<Schema> all{
        {"steps",
            {{"policy", Col::Text}, {"group", Col::Group}, {"step", Col::Int}, {"accuracy", Col::Num},
                {"accuracy_se", Col::Num}, {"regret", Col::Num}, {"regret_se", Col::Num}, {"n_users", Col::Int}}},
        {"summary",
            {{"dataset", Col::Text}, {"policy", Col::Text}, {"num_groups", Col::Int}, {"horizon", Col::Int},
                {"accuracy", Col::Num}, {"accuracy_se", Col::Num}, {"regret", Col::Num}, {"regret_se", Col::Num},
                {"n_users", Col::Int}}},
        {"per_group",
            {{"policy", Col::Text}, {"group", Col::Int}, {"step", Col::Int}, {"accuracy", Col::Num},
                {"accuracy_se", Col::Num}, {"n_users", Col::Int}}},
        {"trace",
            {{"policy", Col::Text}, {"group", Col::Group}, {"step", Col::Int}, {"posterior_true", Col::Num},
                {"future_regret_true", Col::Num}, {"regret", Col::Num}}},
        {"episodes",
            {{"policy", Col::Text}, {"group", Col::Int}, {"user", Col::Int}, {"step", Col::Int}, {"item", Col::Int},
                {"rating", Col::Num}, {"estimate", Col::Int}, {"posterior_true", Col::Num},
                {"future_regret_true", Col::Num}, {"regret", Col::Num}}},
        {"report",
            {{"dataset", Col::Text}, {"policy", Col::Text}, {"num_groups", Col::Int}, {"horizon", Col::Int},
                {"accuracy", Col::Num}, {"regret", Col::Num}, {"best_accuracy", Col::Int},
                {"best_regret", Col::Int}}},
        {"report_text", {}}, // aligned table for people; only the metadata block is checked
    };
    return all;
}

const Schema& schema(const std::string& name)
{
    for (const auto& s : schemas())
        if (s.name == name)
            return s;
    throw std::logic_error("unknown schema " + name);
}

std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, sep))
        out.push_back(field);
    if (!line.empty() && line.back() == sep)
        out.emplace_back();
    if (line.empty())
        out.emplace_back();
    return out;
}

// Writes a CSV file: metadata comment lines, the header, then rows.
class CsvWriter {
public:
    CsvWriter(const std::string& schema_name, const std::string& seed, const json& config)
        : schema_(schema(schema_name))
    {
        os_ << "# tool: " << tool_line() << "\n";
        os_ << "# schema: " << schema_.name << "\n";
        os_ << "# seed: " << seed << "\n";
        os_ << "# config: " << config.dump() << "\n";
        for (std::size_t i = 0; i < schema_.columns.size(); ++i)
            os_ << (i ? "," : "") << schema_.columns[i].first;
        os_ << "\n";
    }

    void row(const std::vector<std::string>& fields)
    {
        if (fields.size() != schema_.columns.size())
            throw std::logic_error("row width does not match schema " + schema_.name);
        for (std::size_t i = 0; i < fields.size(); ++i)
            os_ << (i ? "," : "") << fields[i];
        os_ << "\n";
    }

    std::string text() const { return os_.str(); }

private:
    const Schema& schema_;
    std::ostringstream os_;
};

struct CsvFile {
    std::map<std::string, std::string> meta;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

CsvFile read_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open '" + path + "'");
    CsvFile f;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!have_header && line.rfind("# ", 0) == 0) {
            const auto colon = line.find(": ");
            if (colon != std::string::npos)
                f.meta[line.substr(2, colon - 2)] = line.substr(colon + 2);
            continue;
        }
        if (!have_header) {
            f.header = split(line, ',');
            have_header = true;
            continue;
        }
        f.rows.push_back(split(line, ','));
    }
    return f;
}

bool parse_int(const std::string& s, long long& v)
{
    if (s.empty())
        return false;
    std::size_t pos = 0;
    try {
        v = std::stoll(s, &pos);
    } catch (...) {
        return false;
    }
    return pos == s.size();
}

bool parse_num(const std::string& s, double& v)
{
    if (s.empty())
        return false;
    std::size_t pos = 0;
    try {
        v = std::stod(s, &pos);
    } catch (...) {
        return false;
    }
    return pos == s.size() && std::isfinite(v);
}

std::vector<std::string> check_csv(const std::string& path, std::string* kind)
{
    std::vector<std::string> problems;
    const CsvFile f = read_csv(path);
    for (const char* key : {"tool", "schema", "seed", "config"})
        if (!f.meta.count(key))
            problems.push_back("missing '# " + std::string(key) + ":' line");
    if (f.meta.count("tool") && f.meta.at("tool").rfind(std::string(kToolName) + " ", 0) != 0)
        problems.push_back("not written by " + std::string(kToolName));
    if (f.meta.count("config") && !json::accept(f.meta.at("config")))
        problems.push_back("config line is not valid JSON");
    if (!f.meta.count("schema"))
        return problems;
    const std::string name = f.meta.at("schema");
    const Schema* s = nullptr;
    for (const auto& candidate : schemas())
        if (candidate.name == name)
            s = &candidate;
    if (!s) {
        problems.push_back("unknown schema '" + name + "'");
        return problems;
    }
    if (kind)
        *kind = name;
    if (s->columns.empty()) {
        if (f.header.empty() || (f.header.size() == 1 && f.header[0].empty()))
            problems.push_back("no content after the metadata lines");
        return problems;
    }
    std::vector<std::string> expected;
    for (const auto& c : s->columns)
        expected.push_back(c.first);
    if (f.header != expected) {
        problems.push_back("header does not match schema '" + name + "'");
        return problems;
    }
    for (std::size_t r = 0; r < f.rows.size(); ++r) {
        const auto& row = f.rows[r];
        const std::string where = "row " + std::to_string(r + 1) + ": ";
        if (row.size() != expected.size()) {
            problems.push_back(where + "expected " + std::to_string(expected.size()) + " fields, found " +
                std::to_string(row.size()));
            continue;
        }
        for (std::size_t c = 0; c < row.size(); ++c) {
            long long i = 0;
            double d = 0;
            bool ok = true;
            switch (s->columns[c].second) {
            case Col::Text:
                ok = !row[c].empty();
                break;
            case Col::Int:
                ok = parse_int(row[c], i) && i >= 0;
                break;
            case Col::Group:
                ok = row[c] == "all" || (parse_int(row[c], i) && i >= 0);
                break;
            case Col::Num:
                ok = parse_num(row[c], d);
                break;
            }
            if (!ok)
                problems.push_back(where + "bad value '" + row[c] + "' in column " + expected[c]);
        }
    }
    return problems;
}

// ---------------------------------------------------------------- policies

struct BuiltPolicy {
    std::shared_ptr<const EpisodePolicy> policy;
    std::shared_ptr<const DecisionTree> tree; // tree policies only
    json echo;
};

void check_keys(const PolicySpec& spec, const std::set<std::string>& allowed)
{
    for (const auto& [k, v] : spec.params) {
        if (allowed.count(k))
            continue;
        std::string list;
        for (const auto& a : allowed)
            list += (list.empty() ? "" : ", ") + a;
        throw UsageError("policy '" + spec.name + "' has no parameter '" + k + "'" +
            (list.empty() ? " (it takes none)" : " (accepted: " + list + ")"));
    }
}

double num_param(const PolicySpec& spec, const std::string& key, double fallback)
{
    const std::string text = spec.get(key, "");
    if (text.empty())
        return fallback;
    double v = 0;
    if (!parse_num(text, v))
        throw UsageError("policy '" + spec.name + "': " + key + " must be a number, got '" + text + "'");
    return v;
}

std::size_t count_param(const PolicySpec& spec, const std::string& key, std::size_t fallback)
{
    const std::string text = spec.get(key, "");
    if (text.empty())
        return fallback;
    long long v = 0;
    if (!parse_int(text, v) || v < 0)
        throw UsageError("policy '" + spec.name + "': " + key + " must be a non-negative integer, got '" + text + "'");
    return static_cast<std::size_t>(v);
}

TieBreak tie_param(const PolicySpec& spec)
{
    const std::string t = spec.get("tie", "lowest");
    if (t == "lowest")
        return TieBreak::LowestIndex;
    if (t == "random")
        return TieBreak::Random;
    throw UsageError("policy '" + spec.name + "': tie must be 'lowest' or 'random', got '" + t + "'");
}

std::string label_of(const std::string& name, const std::vector<std::pair<std::string, std::string>>& shown)
{
    if (shown.empty())
        return name;
    std::string out = name + "(";
    for (std::size_t i = 0; i < shown.size(); ++i)
        out += (i ? ";" : "") + shown[i].first + "=" + shown[i].second;
    return out + ")";
}

BuiltPolicy build_policy(
    const PolicySpec& spec, std::size_t slot, const GroupModel& model, std::uint64_t seed, std::size_t horizon)
{
    BuiltPolicy out;
    json params = json::object();
    for (const auto& [k, v] : spec.params)
        params[k] = v;
    std::vector<std::pair<std::string, std::string>> shown;

    if (spec.name == "lba" || spec.name == "explore_mc") {
        const bool lba = spec.name == "lba";
        check_keys(spec, lba ? std::set<std::string>{"beta", "tie"} : std::set<std::string>{"samples", "tie"});
        PolicyConfig cfg;
        cfg.tie_break = tie_param(spec);
        if (lba) {
            cfg.beta = num_param(spec, "beta", 1.0);
            shown.emplace_back("beta", short_num(cfg.beta));
        } else {
            cfg.mode = SelectionMode::ExploreMc;
            const std::size_t samples = count_param(spec, "samples", static_cast<std::size_t>(cfg.mc_samples));
            if (samples < 1 || samples > 100000000)
                throw UsageError("policy 'explore_mc': samples must lie in [1, 1e8]");
            cfg.mc_samples = static_cast<int>(samples);
            shown.emplace_back("samples", std::to_string(cfg.mc_samples));
        }
        if (cfg.tie_break == TieBreak::Random)
            shown.emplace_back("tie", "random");
        try {
            cfg.validate();
        } catch (const PreconditionError& e) {
            throw UsageError("policy '" + spec.name + "': " + e.what());
        }
        params = lba ? json{{"beta", cfg.beta}} : json{{"samples", cfg.mc_samples}};
        params["tie"] = cfg.tie_break == TieBreak::Random ? "random" : "lowest";
        const std::string label = label_of(spec.name, shown);
        if (lba)
            out.policy = std::make_shared<LbaPolicy>(cfg, label);
        else
            out.policy = std::make_shared<ExploreMcPolicy>(cfg, label);
    } else if (spec.name == "tree") {
        check_keys(spec, {"depth", "users", "min_leaf", "thresholds", "load"});
        const std::string load = spec.get("load", "");
        if (!load.empty()) {
            if (spec.params.size() > 1)
                throw UsageError("policy 'tree': load cannot be combined with training parameters");
            auto tree = std::make_shared<const DecisionTree>(load_tree(load));
            if (tree->num_groups() != model.num_groups())
                throw UsageError("tree '" + load + "' was built for " + std::to_string(tree->num_groups()) +
                    " groups but the model has " + std::to_string(model.num_groups()));
            for (const auto& node : tree->nodes())
                if (!node.leaf && node.split_item >= model.num_items())
                    throw UsageError("tree '" + load + "' splits on item " + std::to_string(node.split_item) +
                        " beyond the model's " + std::to_string(model.num_items()) + " items");
            out.tree = tree;
            shown.emplace_back("load", fs::path(load).filename().string());
        } else {
            TrainConfig cfg;
            cfg.max_depth = count_param(spec, "depth", horizon);
            cfg.users_per_group = count_param(spec, "users", cfg.users_per_group);
            cfg.min_leaf = count_param(spec, "min_leaf", cfg.min_leaf);
            cfg.candidate_thresholds = count_param(spec, "thresholds", cfg.candidate_thresholds);
            try {
                cfg.validate();
            } catch (const PreconditionError& e) {
                throw UsageError(std::string("policy 'tree': ") + e.what());
            }
            for (const auto& [k, v] : spec.params)
                shown.emplace_back(k, v);
            Rng rng = make_rng(seed, {kTreeStream, slot});
            out.tree = std::make_shared<const DecisionTree>(train_tree(model, cfg, rng));
            params["depth"] = cfg.max_depth;
            params["users"] = cfg.users_per_group;
            params["min_leaf"] = cfg.min_leaf;
            params["thresholds"] = cfg.candidate_thresholds;
        }
        out.policy = std::make_shared<TreePolicy>(out.tree, label_of("tree", shown));
    } else if (spec.name == "oracle") {
        check_keys(spec, {});
        out.policy = std::make_shared<OraclePolicy>();
    } else if (spec.name == "random") {
        check_keys(spec, {});
        out.policy = std::make_shared<RandomPolicy>();
    } else if (spec.name == "cbb") {
        throw NotImplementedError("policy 'cbb' is not implemented");
    } else {
        std::string list;
        for (const auto& n : available_policies())
            list += (list.empty() ? "" : ", ") + n;
        throw UsageError("unknown policy '" + spec.name + "' (available: " + list + ")");
    }
    out.echo = {{"name", spec.name}, {"params", params}, {"label", out.policy->name()}};
    return out;
}

// ---------------------------------------------------------------- helpers

RatingScale parse_scale(const std::string& text)
{
    const auto parts = split(text, ',');
    double lo = 0, hi = 0;
    if (parts.size() != 2 || !parse_num(parts[0], lo) || !parse_num(parts[1], hi) || !(lo < hi))
        throw UsageError("--scale must be 'min,max' with min < max, got '" + text + "'");
    return {lo, hi};
}

std::string default_out_dir()
{
    const char* env = std::getenv(kOutDirEnv);
    return env && *env ? env : ".";
}

void ensure_parent(const std::string& path)
{
    const auto parent = fs::path(path).parent_path();
    if (!parent.empty())
        fs::create_directories(parent);
}

void check_name(const std::string& what, const std::string& text)
{
    if (text.empty() || text.find_first_of(",\"\n\r") != std::string::npos)
        throw UsageError(what + " must be non-empty and free of commas, quotes and newlines");
}

json scale_json(const RatingScale& s) { return json::array({s.min, s.max}); }

// ---------------------------------------------------------------- commands

struct ClusterArgs {
    std::string ratings;
    std::size_t k = 16;
    std::string scale = "1,5";
    std::uint64_t seed = 0;
    std::size_t restarts = 10;
    std::size_t max_iters = 100;
    std::size_t min_support = 5;
    double floor = kDefaultVarianceFloor;
    double shift = 0.0;
    std::string out;
};

int cmd_cluster(const ClusterArgs& a, std::ostream& out)
{
    const RatingScale scale = parse_scale(a.scale);
    if (!(a.floor > 0.0))
        throw UsageError("--variance-floor must be positive");
    const RatingsTable table = load_ratings(a.ratings, scale);
    if (table.num_users() == 0)
        throw UsageError("'" + a.ratings + "' holds no ratings");
    ClusteringConfig cfg;
    cfg.k = a.k;
    cfg.max_iters = a.max_iters;
    cfg.restarts = a.restarts;
    cfg.min_item_support = a.min_support;
    cfg.seed = a.seed;
    const Clustering clustering = cluster_users(table, cfg);
    GroupModel model = estimate_model(table, clustering.assignment, a.k, a.floor, a.min_support);
    model.metadata["clustering"] = "kmeans++ on item-mean imputed rating vectors";
    if (a.shift != 0.0)
        model = model.shifted(a.shift);

    std::vector<std::size_t> sizes(a.k, 0);
    for (auto g : clustering.assignment)
        ++sizes[g];
    const json provenance = {
        {"tool", tool_line()},
        {"command", "cluster"},
        {"seed", a.seed},
        {"config",
            {{"ratings", a.ratings}, {"k", a.k}, {"scale", scale_json(scale)}, {"restarts", a.restarts},
                {"max_iters", a.max_iters}, {"min_item_support", a.min_support}, {"variance_floor", a.floor},
                {"rating_shift", a.shift}}},
        {"data",
            {{"users", table.num_users()}, {"items", table.num_items()}, {"ratings", table.size()},
                {"duplicates_dropped", table.duplicates_dropped}}},
        {"clustering",
            {{"method", "kmeans"}, {"wcss", clustering.wcss}, {"iterations", clustering.wcss_trace.size()},
                {"restart_kept", clustering.restart}, {"group_sizes", sizes}}},
    };
    const std::string path = a.out.empty() ? (fs::path(default_out_dir()) / "model.json").string() : a.out;
    ensure_parent(path);
    save_model(path, model, provenance);
    out << "wrote " << path << " (" << model.num_groups() << " groups, " << model.num_items() << " items, "
        << table.num_users() << " users)\n";
    return kExitOk;
}

struct SynthArgs {
    std::size_t groups = 16;
    std::size_t items = 200;
    double separation = 2.0;
    std::uint64_t seed = 0;
    std::string scale = "1,5";
    double floor = kDefaultVarianceFloor;
    double shift = 0.0;
    std::string out;
};

int cmd_synth(const SynthArgs& a, std::ostream& out)
{
    const RatingScale scale = parse_scale(a.scale);
    if (a.groups < 1 || a.items < 1)
        throw UsageError("--groups and --items must be at least 1");
    if (!(a.separation >= 0.0))
        throw UsageError("--separation must be non-negative");
    if (!(a.floor > 0.0))
        throw UsageError("--variance-floor must be positive");
    Rng rng(a.seed);
    GroupModel model = synth_model(a.groups, a.items, a.separation, rng, scale, a.floor);
    if (a.shift != 0.0)
        model = model.shifted(a.shift);
    const json provenance = {
        {"tool", tool_line()},
        {"command", "synth-model"},
        {"seed", a.seed},
        {"config",
            {{"groups", a.groups}, {"items", a.items}, {"separation", a.separation}, {"scale", scale_json(scale)},
                {"variance_floor", a.floor}, {"rating_shift", a.shift}}},
    };
    const std::string path = a.out.empty() ? (fs::path(default_out_dir()) / "model.json").string() : a.out;
    ensure_parent(path);
    save_model(path, model, provenance);
    out << "wrote " << path << " (" << a.groups << " groups, " << a.items << " items)\n";
    return kExitOk;
}

struct SimulateArgs {
    std::string model;
    std::size_t synth_groups = 0;
    std::size_t synth_items = 200;
    double separation = 2.0;
    std::string policies = "lba:beta=1,lba:beta=0,tree,oracle";
    std::size_t horizon = 25;
    std::size_t users = 1000;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
    bool clamp = false;
    double shift = 0.0;
    std::size_t per_group_step = 15;
    std::size_t trace_users = 1;
    std::string dataset;
    std::string out_dir;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out)
{
    if (a.model.empty() == (a.synth_groups == 0))
        throw UsageError("give exactly one model source: --model FILE or --synth-groups G");
    if (a.horizon < 1)
        throw UsageError("--horizon must be at least 1");
    if (a.users < 1)
        throw UsageError("--users-per-group must be at least 1");
    if (a.jobs < 1)
        throw UsageError("--jobs must be at least 1");
    if (a.per_group_step < 1)
        throw UsageError("--per-group-step must be at least 1");

    json model_echo;
    std::optional<GroupModel> loaded;
    std::string dataset = a.dataset;
    if (!a.model.empty()) {
        loaded.emplace(load_model(a.model));
        model_echo = {{"source", "file"}, {"path", a.model}};
        if (dataset.empty())
            dataset = fs::path(a.model).stem().string();
    } else {
        if (a.synth_items < 1 || !(a.separation >= 0.0))
            throw UsageError("--synth-items must be at least 1 and --separation non-negative");
        Rng rng = make_rng(a.seed, {kModelStream});
        loaded.emplace(synth_model(a.synth_groups, a.synth_items, a.separation, rng));
        model_echo = {{"source", "synth"}, {"groups", a.synth_groups}, {"items", a.synth_items},
            {"separation", a.separation}};
        if (dataset.empty())
            dataset = "synth";
    }
    check_name("--dataset", dataset);
    GroupModel model = a.shift != 0.0 ? loaded->shifted(a.shift) : *loaded;
    if (a.horizon > model.num_items())
        throw UsageError("--horizon " + std::to_string(a.horizon) + " exceeds the model's " +
            std::to_string(model.num_items()) + " items");

    const auto specs = parse_policy_list(a.policies);
    if (specs.empty())
        throw UsageError("--policies is empty");
    std::vector<BuiltPolicy> built;
    std::vector<std::shared_ptr<const EpisodePolicy>> policies;
    std::set<std::string> labels;
    json policy_echo = json::array();
    for (std::size_t i = 0; i < specs.size(); ++i) {
        built.push_back(build_policy(specs[i], i, model, a.seed, a.horizon));
        const std::string label = built.back().policy->name();
        if (!labels.insert(label).second)
            throw UsageError("policy '" + label + "' is listed twice");
        policies.push_back(built.back().policy);
        policy_echo.push_back(built.back().echo);
    }

    const std::size_t fig_step = std::min(a.per_group_step, a.horizon);
    const json config = {
        {"command", "simulate"},
        {"model", model_echo},
        {"rating_shift", a.shift},
        {"dataset", dataset},
        {"regret", "sum of the n largest mu(g*, v) minus sum of mu(g*, v) over the n items asked"},
        {"policies", policy_echo},
        {"horizon", a.horizon},
        {"users_per_group", a.users},
        {"seed", a.seed},
        {"clamp", a.clamp},
        {"per_group_step", fig_step},
        {"trace_users", a.trace_users},
    };

    EvalConfig cfg;
    cfg.users_per_group = a.users;
    cfg.horizon = a.horizon;
    cfg.seed = a.seed;
    cfg.jobs = a.jobs;
    cfg.clamp = a.clamp;
    cfg.trace = true;
    const MetricsSummary summary = evaluate(model, policies, cfg);

    const std::string seed = std::to_string(a.seed);
    const std::size_t G = model.num_groups();
    const std::string n_all = std::to_string(G * a.users);
    const std::string n_group = std::to_string(a.users);

    CsvWriter steps("steps", seed, config);
    CsvWriter trace("trace", seed, config);
    CsvWriter per_group("per_group", seed, config);
    CsvWriter result("summary", seed, config);
    for (const auto& pm : summary.policies) {
        for (std::size_t s = 0; s < a.horizon; ++s) {
            const auto& o = pm.overall[s];
            const std::string step = std::to_string(s + 1);
            steps.row({pm.name, "all", step, num(o.accuracy), num(o.accuracy_se), num(o.regret), num(o.regret_se),
                n_all});
            trace.row({pm.name, "all", step, num(o.posterior_true), num(o.future_regret_true), num(o.regret)});
        }
        for (GroupIndex g = 0; g < G; ++g) {
            for (std::size_t s = 0; s < a.horizon; ++s) {
                const auto& o = pm.per_group[g][s];
                const std::string step = std::to_string(s + 1);
                steps.row({pm.name, std::to_string(g), step, num(o.accuracy), num(o.accuracy_se), num(o.regret),
                    num(o.regret_se), n_group});
                trace.row({pm.name, std::to_string(g), step, num(o.posterior_true), num(o.future_regret_true),
                    num(o.regret)});
            }
            const auto& f = pm.per_group[g][fig_step - 1];
            per_group.row({pm.name, std::to_string(g), std::to_string(fig_step), num(f.accuracy),
                num(f.accuracy_se), n_group});
        }
        const auto& last = pm.overall.back();
        result.row({dataset, pm.name, std::to_string(G), std::to_string(a.horizon), num(last.accuracy),
            num(last.accuracy_se), num(last.regret), num(last.regret_se), n_all});
    }

    CsvWriter episodes("episodes", seed, config);
    const std::size_t traced = std::min(a.trace_users, a.users);
    for (std::size_t p = 0; p < policies.size(); ++p) {
        for (GroupIndex g = 0; g < G; ++g) {
            for (std::size_t u = 0; u < traced; ++u) {
                const auto ep = evaluation_episode(model, *policies[p], p, g, u, cfg);
                for (std::size_t s = 0; s < ep.steps.size(); ++s) {
                    const auto& st = ep.steps[s];
                    episodes.row({policies[p]->name(), std::to_string(g), std::to_string(u), std::to_string(s + 1),
                        std::to_string(st.item), num(st.rating), std::to_string(st.estimate), num(st.posterior[g]),
                        num(st.future_regret_true), num(st.cumulative_regret)});
                }
            }
        }
    }

    const fs::path dir = a.out_dir.empty() ? fs::path(default_out_dir()) : fs::path(a.out_dir);
    fs::create_directories(dir);
    const std::vector<std::pair<std::string, const CsvWriter*>> files{{"steps.csv", &steps},
        {"summary.csv", &result}, {"per_group.csv", &per_group}, {"trace.csv", &trace},
        {"episodes.csv", &episodes}};
    for (const auto& [name, w] : files)
        write_text_file((dir / name).string(), w->text());
    std::size_t tree_count = 0;
    for (const auto& b : built)
        tree_count += b.tree ? 1 : 0;
    std::size_t tree_index = 0;
    for (const auto& b : built) {
        if (!b.tree)
            continue;
        ++tree_index;
        const std::string name = tree_count == 1 ? "tree.json" : "tree" + std::to_string(tree_index) + ".json";
        save_tree((dir / name).string(), *b.tree);
    }

    out << "dataset " << dataset << ", " << G << " groups, " << a.users << " users/group, horizon " << a.horizon
        << "\n";
    for (const auto& pm : summary.policies) {
        char line[160];
        std::snprintf(line, sizeof line, "  %-28s accuracy %.3f  regret %.2f\n", pm.name.c_str(),
            pm.overall.back().accuracy, pm.overall.back().regret);
        out << line;
    }
    out << "wrote " << dir.string() << "\n";
    return kExitOk;
}

struct ReportArgs {
    std::vector<std::string> inputs;
    std::string out_dir;
};

struct ReportCell {
    double accuracy = 0;
    double regret = 0;
};

int cmd_report(const ReportArgs& a, std::ostream& out)
{
    std::optional<long long> horizon;
    std::string horizon_source;
    std::set<long long> columns;
    std::vector<std::pair<std::string, std::string>> rows; // (dataset, policy) in first-seen order
    std::map<std::pair<std::string, std::string>, std::map<long long, ReportCell>> cells;
    std::set<std::string> seeds;
    json inputs = json::array();

    for (const auto& path : a.inputs) {
        std::string kind;
        const auto problems = check_file(path, &kind);
        if (!problems.empty())
            throw UsageError("'" + path + "': " + problems.front());
        if (kind != "summary")
            throw UsageError("'" + path + "' has schema '" + kind + "', expected 'summary'");
        const CsvFile f = read_csv(path);
        seeds.insert(f.meta.at("seed"));
        inputs.push_back({{"path", path}, {"seed", f.meta.at("seed")}});
        for (const auto& row : f.rows) {
            long long groups = 0, h = 0;
            double acc = 0, reg = 0;
            parse_int(row[2], groups);
            parse_int(row[3], h);
            parse_num(row[4], acc);
            parse_num(row[6], reg);
            if (!horizon) {
                horizon = h;
                horizon_source = path;
            } else if (*horizon != h) {
                throw UsageError("conflicting horizons: " + std::to_string(*horizon) + " in '" + horizon_source +
                    "' vs " + std::to_string(h) + " in '" + path + "'");
            }
            const auto key = std::make_pair(row[0], row[1]);
            if (!cells.count(key))
                rows.push_back(key);
            if (cells[key].count(groups))
                throw UsageError("duplicate entry for dataset '" + row[0] + "', policy '" + row[1] + "', " +
                    std::to_string(groups) + " groups");
            cells[key][groups] = {acc, reg};
            columns.insert(groups);
        }
    }
    if (rows.empty())
        throw UsageError("the inputs hold no summary rows");

    // best accuracy and lowest regret per dataset and column
    std::map<std::pair<std::string, long long>, ReportCell> best;
    for (const auto& key : rows) {
        for (const auto& [g, c] : cells[key]) {
            const auto bk = std::make_pair(key.first, g);
            auto it = best.find(bk);
            if (it == best.end()) {
                best[bk] = c;
            } else {
                it->second.accuracy = std::max(it->second.accuracy, c.accuracy);
                it->second.regret = std::min(it->second.regret, c.regret);
            }
        }
    }

    std::string seed_text;
    for (const auto& s : seeds)
        seed_text += (seed_text.empty() ? "" : ";") + s;
    const json config = {{"command", "report"}, {"inputs", inputs}, {"horizon", *horizon}};
    CsvWriter csv("report", seed_text, config);

    std::ostringstream text;
    text << "# tool: " << tool_line() << "\n# schema: report_text\n# seed: " << seed_text
         << "\n# config: " << config.dump() << "\n# horizon: " << *horizon << "\n";
    text << "# * marks the best accuracy and the lowest regret per dataset and column\n";
    std::size_t dw = 7, pw = 6;
    for (const auto& [d, p] : rows) {
        dw = std::max(dw, d.size());
        pw = std::max(pw, p.size());
    }
    auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w > s.size() ? w - s.size() : 0, ' '); };
    text << pad("dataset", dw) << "  " << pad("policy", pw);
    for (long long g : columns) {
        char head[48];
        std::snprintf(head, sizeof head, "  %16s", ("groups=" + std::to_string(g)).c_str());
        text << head;
    }
    text << "\n" << pad("", dw) << "  " << pad("", pw);
    for (std::size_t i = 0; i < columns.size(); ++i)
        text << "  " << "accuracy  regret";
    text << "\n";
    for (const auto& key : rows) {
        text << pad(key.first, dw) << "  " << pad(key.second, pw);
        for (long long g : columns) {
            const auto it = cells[key].find(g);
            if (it == cells[key].end()) {
                text << "  " << std::string(8, ' ') << "-" << std::string(7, ' ');
                continue;
            }
            const auto& b = best[{key.first, g}];
            const bool ba = it->second.accuracy == b.accuracy;
            const bool br = it->second.regret == b.regret;
            char cell[64];
            std::snprintf(cell, sizeof cell, "  %7.3f%c %6.2f%c", it->second.accuracy, ba ? '*' : ' ',
                it->second.regret, br ? '*' : ' ');
            text << cell;
            csv.row({key.first, key.second, std::to_string(g), std::to_string(*horizon), num(it->second.accuracy),
                num(it->second.regret), ba ? "1" : "0", br ? "1" : "0"});
        }
        text << "\n";
    }

    const fs::path dir = a.out_dir.empty() ? fs::path(default_out_dir()) : fs::path(a.out_dir);
    fs::create_directories(dir);
    write_text_file((dir / "report.txt").string(), text.str());
    write_text_file((dir / "report.csv").string(), csv.text());
    out << text.str();
    return kExitOk;
}

int cmd_check_schema(const std::vector<std::string>& files, std::ostream& out)
{
    bool ok = true;
    for (const auto& path : files) {
        std::string kind;
        const auto problems = check_file(path, &kind);
        if (problems.empty()) {
            out << path << ": ok (" << kind << ")\n";
            continue;
        }
        ok = false;
        for (const auto& p : problems)
            out << path << ": " << p << "\n";
    }
    return ok ? kExitOk : kExitValidation;
}

} // namespace

std::string PolicySpec::get(const std::string& key, const std::string& fallback) const
{
    for (const auto& [k, v] : params)
        if (k == key)
            return v;
    return fallback;
}

std::vector<PolicySpec> parse_policy_list(const std::string& text)
{
    std::vector<PolicySpec> out;
    auto add_param = [&](const std::string& token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos || eq == 0)
            throw UsageError("malformed policy parameter '" + token + "' (expected key=value)");
        const std::string key = token.substr(0, eq);
        for (const auto& [k, v] : out.back().params)
            if (k == key)
                throw UsageError("policy '" + out.back().name + "' sets '" + key + "' twice");
        out.back().params.emplace_back(key, token.substr(eq + 1));
    };
    for (const auto& raw : split(text, ',')) {
        const std::string token = raw;
        if (token.empty())
            throw UsageError("empty entry in policy list '" + text + "'");
        const auto colon = token.find(':');
        if (colon == std::string::npos && token.find('=') != std::string::npos) {
            if (out.empty())
                throw UsageError("policy list starts with a parameter: '" + token + "'");
            add_param(token);
            continue;
        }
        PolicySpec spec;
        spec.name = token.substr(0, colon);
        if (spec.name.empty())
            throw UsageError("policy with an empty name in '" + text + "'");
        out.push_back(spec);
        if (colon != std::string::npos)
            add_param(token.substr(colon + 1));
    }
    return out;
}

const std::vector<std::string>& available_policies()
{
    static const std::vector<std::string> names{"lba", "explore_mc", "tree", "oracle", "random", "cbb"};
    return names;
}

std::vector<std::string> check_file(const std::string& path, std::string* kind)
{
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const std::exception& e) {
        return {e.what()};
    }
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        try {
            const json doc = json::parse(text);
            const std::string format = doc.value("format", "");
            if (format == kTreeFormat) {
                tree_from_json(doc);
                if (kind)
                    *kind = "tree";
            } else {
                model_from_json(doc);
                if (kind)
                    *kind = "model";
            }
        } catch (const std::exception& e) {
            return {e.what()};
        }
        return {};
    }
    try {
        return check_csv(path, kind);
    } catch (const std::exception& e) {
        return {e.what()};
    }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Cold-start onboarding for recommender systems: group models, item selection and evaluation",
        kToolName};
    app.set_version_flag("--version", tool_line());
    app.require_subcommand(1);

    std::function<int()> action;

    ClusterArgs ca;
    auto* cluster = app.add_subcommand("cluster", "cluster users of a ratings CSV and estimate a group model");
    cluster->add_option("--ratings", ca.ratings, "CSV with header user_id,item_id,rating")->required();
    cluster->add_option("--k", ca.k, "number of groups")->capture_default_str();
    cluster->add_option("--scale", ca.scale, "rating scale as min,max")->capture_default_str();
    cluster->add_option("--seed", ca.seed, "master seed")->capture_default_str();
    cluster->add_option("--restarts", ca.restarts, "k-means restarts")->capture_default_str();
    cluster->add_option("--max-iters", ca.max_iters, "Lloyd iterations per restart")->capture_default_str();
    cluster->add_option("--min-item-support", ca.min_support, "ratings needed for a group-specific cell")
        ->capture_default_str();
    cluster->add_option("--variance-floor", ca.floor)->capture_default_str();
    cluster->add_option("--rating-shift", ca.shift, "added to every mean and to the scale")->capture_default_str();
    cluster->add_option("--out", ca.out, "model file (default $COLDSTART_OUT_DIR/model.json)");
    cluster->callback([&] { action = [&] { return cmd_cluster(ca, out); }; });

    SynthArgs sa;
    auto* synth = app.add_subcommand("synth-model", "generate a random group model");
    synth->add_option("--groups", sa.groups)->capture_default_str();
    synth->add_option("--items", sa.items)->capture_default_str();
    synth->add_option("--separation", sa.separation, "spread of group means per item")->capture_default_str();
    synth->add_option("--seed", sa.seed)->capture_default_str();
    synth->add_option("--scale", sa.scale, "rating scale as min,max")->capture_default_str();
    synth->add_option("--variance-floor", sa.floor)->capture_default_str();
    synth->add_option("--rating-shift", sa.shift)->capture_default_str();
    synth->add_option("--out", sa.out, "model file (default $COLDSTART_OUT_DIR/model.json)");
    synth->callback([&] { action = [&] { return cmd_synth(sa, out); }; });

    SimulateArgs ma;
    auto* sim = app.add_subcommand("simulate", "evaluate policies on synthetic users of a group model");
    sim->add_option("--model", ma.model, "group model file");
    sim->add_option("--synth-groups", ma.synth_groups, "use a random model with this many groups instead");
    sim->add_option("--synth-items", ma.synth_items)->capture_default_str();
    sim->add_option("--separation", ma.separation, "separation of the random model")->capture_default_str();
    sim->add_option("--policies", ma.policies, "name[:key=value[,key=value]...][,name...]")->capture_default_str();
    sim->add_option("--horizon", ma.horizon)->capture_default_str();
    sim->add_option("--users-per-group", ma.users)->capture_default_str();
    sim->add_option("--seed", ma.seed)->capture_default_str();
    sim->add_option("--jobs", ma.jobs, "worker threads; results do not depend on it")->capture_default_str();
    sim->add_flag("--clamp", ma.clamp, "clamp sampled ratings to the rating scale");
    sim->add_option("--rating-shift", ma.shift)->capture_default_str();
    sim->add_option("--per-group-step", ma.per_group_step, "step reported in per_group.csv")->capture_default_str();
    sim->add_option("--trace-users", ma.trace_users, "users per group written to episodes.csv")
        ->capture_default_str();
    sim->add_option("--dataset", ma.dataset, "dataset label (default: model file stem)");
    sim->add_option("--out-dir", ma.out_dir, "output directory (default $COLDSTART_OUT_DIR or .)");
    sim->callback([&] { action = [&] { return cmd_simulate(ma, out); }; });

    ReportArgs ra;
    auto* report = app.add_subcommand("report", "merge summary.csv files into one table");
    report->add_option("inputs", ra.inputs, "summary.csv files")->required();
    report->add_option("--out-dir", ra.out_dir, "output directory (default $COLDSTART_OUT_DIR or .)");
    report->callback([&] { action = [&] { return cmd_report(ra, out); }; });

    std::vector<std::string> files;
    auto* check = app.add_subcommand("check-schema", "validate files written by this tool");
    check->add_option("files", files)->required();
    check->callback([&] { action = [&] { return cmd_check_schema(files, out); }; });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << tool_line() << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    }

    try {
        return action ? action() : kExitValidation;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const PreconditionError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const IndexError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const StructuralError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const NotImplementedError& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

} // namespace coldstart::cli
