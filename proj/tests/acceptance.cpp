// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "cli.hpp"
#include "oracles.hpp"

#include "coldstart/model_io.hpp"
#include "coldstart/policy.hpp"
#include "coldstart/simulation.hpp"
#include "coldstart/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace coldstart;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const Outcome& o, double seconds)
{
    std::printf("criterion %d %-34s %s  (%s; %.1fs)\n", id, title.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str(),
        seconds);
    std::fflush(stdout);
    if (!o.pass)
        ++failures;
}

template <class F>
void run_criterion(int id, const std::string& title, F&& body)
{
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
    report(id, title, o, took.count());
}

std::string fmt(const char* f, double a)
{
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

RatingHistory random_history(const GroupModel& m, std::size_t len, Rng& rng, bool grid)
{
    std::vector<ItemIndex> items(m.num_items());
    for (std::size_t i = 0; i < items.size(); ++i)
        items[i] = i;
    std::shuffle(items.begin(), items.end(), rng);
    std::uniform_real_distribution<double> cont(0.0, 6.0);
    std::uniform_int_distribution<int> level(1, 5);
    RatingHistory h;
    for (std::size_t i = 0; i < len && i < items.size(); ++i)
        h.add(items[i], grid ? level(rng) : cont(rng));
    return h;
}

// ------------------------------------------------------------ criterion 1

Outcome posterior_suite()
{
    Rng rng(101);
    double worst_norm = 0, worst_order = 0, worst_direct = 0;
    std::size_t compared = 0, cases = 0;
    bool finite = true;
    for (int trial = 0; trial < 20000; ++trial) {
        const std::size_t G = 1 + trial % 8;
        const auto m = oracle::random_model(G, 12, rng);
        const auto h = random_history(m, trial % 11, rng, false);
        const auto p = posterior(m, h);
        ++cases;
        double total = 0;
        for (double x : p.probs) {
            finite = finite && std::isfinite(x) && x >= 0;
            total += x;
        }
        worst_norm = std::max(worst_norm, std::abs(total - 1.0));

        auto obs = h.observations();
        std::shuffle(obs.begin(), obs.end(), rng);
        RatingHistory permuted;
        for (const auto& o : obs)
            permuted.add(o.item, o.rating);
        const auto q = posterior(m, permuted);
        for (std::size_t g = 0; g < G; ++g)
            worst_order = std::max(worst_order, std::abs(p[g] - q[g]));

        // direct space is only meaningful while the densities do not underflow
        double max_abs_ll = 0;
        for (std::size_t g = 0; g < G; ++g) {
            double ll = 0;
            for (const auto& o : h)
                ll += std::log(oracle::gaussian_pdf(o.rating, m.mean(g, o.item), m.variance(g, o.item)));
            max_abs_ll = std::max(max_abs_ll, std::abs(ll));
        }
        if (max_abs_ll <= 30) {
            ++compared;
            const auto direct = oracle::direct_posterior(m, h);
            for (std::size_t g = 0; g < G; ++g)
                worst_direct = std::max(worst_direct, std::abs(p[g] - direct[g]));
        }
    }

    // likelihood gaps of 1e4 nats and beyond
    for (double gap : {1e4, 1e5, 1e6}) {
        for (std::size_t G : {2, 5, 16}) {
            std::vector<double> mu(G, 0.0), s2(G, 1.0);
            for (std::size_t g = 1; g < G; ++g)
                mu[g] = std::sqrt(2.0 * gap) * static_cast<double>(g) / static_cast<double>(G - 1);
            const GroupModel m(G, 1, mu, s2, {-1e4, 1e4});
            for (double r : {0.0, mu.back(), 0.5 * mu.back()}) {
                const auto p = posterior(m, {{0, r}});
                double total = 0;
                for (double x : p.probs) {
                    finite = finite && std::isfinite(x);
                    total += x;
                }
                worst_norm = std::max(worst_norm, std::abs(total - 1.0));
                ++cases;
            }
        }
    }

    const bool pass = worst_norm <= 1e-9 && worst_order <= 1e-12 && worst_direct <= 1e-9 && finite && compared > 1000;
    std::ostringstream d;
    d << cases << " cases; max |sum-1| " << worst_norm << ", order " << worst_order << ", direct " << worst_direct
      << " over " << compared << ", finite " << (finite ? "yes" : "no");
    return {pass, d.str()};
}

// ------------------------------------------------------------ criterion 2

GroupModel formula_model(std::size_t G, std::size_t N, Rng& rng, int flavour)
{
    if (flavour == 0)
        return oracle::random_model(G, N, rng);
    // grid means and variances produce exact ties in rankings and scores
    std::uniform_int_distribution<int> level(1, 5), var(1, 2);
    std::vector<double> mu(G * N), s2(G * N);
    for (std::size_t i = 0; i < G * N; ++i) {
        mu[i] = level(rng);
        s2[i] = 0.5 * var(rng);
    }
    if (flavour == 2 && N >= 2) {
        // duplicate item columns tie in every score
        for (std::size_t g = 0; g < G; ++g) {
            mu[g * N + N - 1] = mu[g * N];
            s2[g * N + N - 1] = s2[g * N];
        }
    }
    return GroupModel(G, N, mu, s2);
}

Outcome formula_oracles()
{
    Rng rng(202);
    double worst = 0;
    std::size_t argmax_mismatch = 0, scores = 0;
    const double betas[] = {0.0, 0.5, 0.9, 1.0};
    for (int c = 0; c < 1000; ++c) {
        const std::size_t G = 1 + c % 4;
        const std::size_t N = 4 + (c / 4) % 5;
        const auto m = formula_model(G, N, rng, c % 3);
        const auto h = random_history(m, (c / 3) % 4, rng, c % 2 == 0);
        const double beta = c % 5 == 4 ? std::uniform_real_distribution<double>(0, 1)(rng) : betas[c % 4];
        const auto rated = h.rated_mask(N);
        const auto post = posterior(m, h);
        for (GroupIndex g = 0; g < G; ++g) {
            worst = std::max(worst, std::abs(future_reward(m, rated, g, beta) - oracle::future_reward(m, rated, g, beta)));
            for (GroupIndex k = 0; k < G; ++k)
                worst = std::max(
                    worst, std::abs(future_loss(m, rated, g, k, beta) - oracle::future_loss(m, rated, g, k, beta)));
            worst = std::max(worst,
                std::abs(future_regret(m, rated, post, g, beta) - oracle::future_regret(m, rated, post.probs, g, beta)));
        }
        PolicyConfig cfg;
        cfg.beta = beta;
        for (const auto& s : score_items_lba(m, h, cfg)) {
            worst = std::max(worst, std::abs(s.score - oracle::lba_score(m, h, s.item, beta)));
            ++scores;
        }
        if (select_item_lba(m, h, cfg) != oracle::lba_argmax(m, h, beta))
            ++argmax_mismatch;
    }
    std::ostringstream d;
    d << "1000 cases, " << scores << " item scores; max abs diff " << worst << ", argmax mismatches "
      << argmax_mismatch;
    return {worst <= 1e-12 && argmax_mismatch == 0, d.str()};
}

// ------------------------------------------------------------ criterion 3

Outcome linear_vs_mc()
{
    Rng rng(303);
    double total = 0, worst = 0;
    for (int t = 0; t < 100; ++t) {
        const auto m = oracle::random_model(3, 10, rng);
        // history drawn from a random group, as a new user would produce
        const GroupIndex source = std::uniform_int_distribution<GroupIndex>(0, 2)(rng);
        const auto user = sample_user(m, source, rng);
        std::vector<ItemIndex> items(10);
        for (std::size_t i = 0; i < 10; ++i)
            items[i] = i;
        std::shuffle(items.begin(), items.end(), rng);
        const std::size_t len = t % 4;
        RatingHistory h;
        for (std::size_t i = 0; i < len; ++i)
            h.add(items[i], user.ratings[items[i]]);
        const ItemIndex v = items[len];
        const GroupIndex g = std::uniform_int_distribution<GroupIndex>(0, 2)(rng);
        const double lin = expected_posterior_linear(m, h, v, g);
        const double mc = expected_posterior_mc(m, h, v, g, 10000, rng);
        total += std::abs(lin - mc);
        worst = std::max(worst, std::abs(lin - mc));
    }
    const double mean = total / 100;
    return {mean <= 0.05, fmt("mean |linear - MC| %.4f", mean) + fmt(", max %.4f, tolerance 0.05", worst)};
}

// ------------------------------------------------------------ criteria 4-7

struct Scenario {
    MetricsSummary summary;
    std::vector<std::string> names;
};

constexpr std::size_t kGroups = 16, kItems = 200, kHorizon = 25, kUsers = 200;
constexpr double kSeparation = 2.0;
constexpr std::uint64_t kSeed = 20240611;
constexpr std::size_t kFigureStep = 15;
const char* const kLba1 = "lba(beta=1)";
const char* const kLba0 = "lba(beta=0)";
const char* const kMc = "explore_mc(samples=32)";

Scenario run_scenario()
{
    Rng mrng(kSeed);
    const auto model = synth_model(kGroups, kItems, kSeparation, mrng);
    Rng trng(kSeed + 1);
    TrainConfig tcfg; // 1000 synthetic users per group, depth 25
    auto tree = std::make_shared<const DecisionTree>(train_tree(model, tcfg, trng));

    PolicyConfig one, zero, mc;
    zero.beta = 0.0;
    mc.mode = SelectionMode::ExploreMc;
    mc.mc_samples = 32;
    std::vector<std::shared_ptr<const EpisodePolicy>> policies{std::make_shared<LbaPolicy>(one),
        std::make_shared<LbaPolicy>(zero), std::make_shared<TreePolicy>(tree), std::make_shared<OraclePolicy>(),
        std::make_shared<RandomPolicy>(), std::make_shared<ExploreMcPolicy>(mc)};
    EvalConfig cfg;
    cfg.users_per_group = kUsers;
    cfg.horizon = kHorizon;
    cfg.seed = kSeed;
    cfg.trace = true;
    cfg.keep_episodes = true;
    cfg.jobs = std::max(1u, std::thread::hardware_concurrency());
    Scenario s{evaluate(model, policies, cfg), {}};
    for (const auto& p : policies)
        s.names.push_back(p->name());
    return s;
}

double final_accuracy(const Scenario& s, const std::string& name) { return s.summary.policy(name).overall.back().accuracy; }
double final_regret(const Scenario& s, const std::string& name) { return s.summary.policy(name).overall.back().regret; }

Outcome orderings(const Scenario& s)
{
    const double a1 = final_accuracy(s, kLba1), a0 = final_accuracy(s, kLba0), at = final_accuracy(s, "tree");
    const double ro = final_regret(s, "oracle"), r0 = final_regret(s, kLba0), r1 = final_regret(s, kLba1),
                 rt = final_regret(s, "tree");
    const bool acc = a1 >= a0 && a0 >= at - 0.02;
    const bool reg = ro <= r0 && r0 <= r1 && r1 <= rt;
    char d[256];
    std::snprintf(d, sizeof d, "accuracy lba1 %.3f, lba0 %.3f, tree %.3f; regret oracle %.2f, lba0 %.2f, lba1 %.2f, tree %.2f",
        a1, a0, at, ro, r0, r1, rt);
    return {acc && reg, d};
}

Outcome upper_bound(const Scenario& s)
{
    const double mc = final_accuracy(s, kMc);
    bool pass = true;
    std::ostringstream d;
    d << "explore_mc " << fmt("%.3f", mc);
    for (const auto& name : s.names) {
        if (name == kMc)
            continue;
        const double other = final_accuracy(s, name);
        if (mc < other - 0.02) {
            pass = false;
            d << ", below " << name << " " << fmt("%.3f", other);
        }
    }
    double worst_drop = 0;
    std::string worst_name;
    for (const auto& pm : s.summary.policies) {
        double best = 0;
        for (const auto& st : pm.overall) {
            if (best - st.accuracy > worst_drop) {
                worst_drop = best - st.accuracy;
                worst_name = pm.name;
            }
            best = std::max(best, st.accuracy);
        }
    }
    d << "; largest dip below an earlier step " << fmt("%.3f", worst_drop);
    if (!worst_name.empty())
        d << " (" << worst_name << ")";
    return {pass && worst_drop <= 0.03, d.str()};
}

Outcome exploitation(const Scenario& s)
{
    const auto& pm = s.summary.policy(kLba1);
    std::size_t confident = 0, bad_future = 0, bad_growth = 0, late = 0;
    double worst_ratio = 0, worst_growth = 0;
    for (const auto& ep : pm.episodes) {
        const auto& last = ep.steps.back();
        if (last.posterior[ep.true_group] <= 0.99)
            continue;
        ++confident;
        double peak = 0;
        for (const auto& st : ep.steps)
            peak = std::max(peak, st.future_regret_true);
        const double ratio = peak > 0 ? last.future_regret_true / peak : 0.0;
        worst_ratio = std::max(worst_ratio, ratio);
        if (ratio > 0.10)
            ++bad_future;
        const double total = last.cumulative_regret;
        const double growth = total - ep.steps[ep.steps.size() - 6].cumulative_regret;
        const double rel = total > 0 ? growth / total : (growth > 0 ? 1.0 : 0.0);
        worst_growth = std::max(worst_growth, rel);
        if (rel > 0.10) {
            ++bad_growth;
            // diagnostic only: did the posterior settle above 0.99 inside the growth window?
            std::size_t settled = ep.steps.size();
            while (settled > 0 && ep.steps[settled - 1].posterior[ep.true_group] > 0.99)
                --settled;
            if (settled + 5 >= ep.steps.size())
                ++late;
        }
    }
    std::ostringstream d;
    d << confident << "/" << pm.episodes.size() << " episodes end with P(g*) > 0.99; final/peak future regret max "
      << fmt("%.4f", worst_ratio) << " (" << bad_future << " over 10%), last-5-step regret growth max "
      << fmt("%.4f", worst_growth) << " of total (" << bad_growth << " over 10%, " << late
      << " of them above 0.99 only within the last 5 steps)";
    return {confident > 0 && bad_future == 0 && bad_growth == 0, d.str()};
}

double spread(const PolicyMetrics& pm, std::size_t step)
{
    double lo = 1, hi = 0;
    for (const auto& g : pm.per_group) {
        lo = std::min(lo, g[step - 1].accuracy);
        hi = std::max(hi, g[step - 1].accuracy);
    }
    return hi - lo;
}

Outcome group_spread(const Scenario& s)
{
    const double tree = spread(s.summary.policy("tree"), kFigureStep);
    const double lba = spread(s.summary.policy(kLba1), kFigureStep);
    char d[200];
    std::snprintf(d, sizeof d, "step %zu per-group accuracy spread: tree %.3f, lba1 %.3f (final step: tree %.3f, lba1 %.3f)",
        kFigureStep, tree, lba, spread(s.summary.policy("tree"), kHorizon), spread(s.summary.policy(kLba1), kHorizon));
    return {tree >= 2 * lba, d};
}

// ------------------------------------------------------------ criterion 8

struct CliRun {
    int code;
    std::string out;
};

CliRun cli(const std::vector<std::string>& args)
{
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str() + err.str()};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Every file under `dir`, relative name -> bytes.
std::vector<std::pair<std::string, std::string>> snapshot(const fs::path& dir)
{
    std::vector<std::pair<std::string, std::string>> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file())
            files.emplace_back(fs::relative(e.path(), dir).string(), slurp(e.path()));
    std::sort(files.begin(), files.end());
    return files;
}

// Runs the whole command set into `dir`; returns the concatenated console output.
std::string pipeline(const fs::path& dir, const std::string& jobs)
{
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::string console;
    auto step = [&](const std::vector<std::string>& args) {
        const auto r = cli(args);
        if (r.code != 0)
            throw std::runtime_error("command failed: " + args.front() + ": " + r.out);
        console += r.out;
    };

    // ratings drawn from a known model, written with full precision
    Rng mrng(808);
    const auto truth = synth_model(4, 30, 3.0, mrng);
    std::ofstream csv(dir / "ratings.csv");
    csv.precision(17);
    csv << "user_id,item_id,rating\n";
    Rng urng(809);
    std::bernoulli_distribution seen(0.6);
    for (std::size_t u = 0; u < 120; ++u) {
        const auto user = sample_user(truth, u % 4, urng, true);
        for (ItemIndex v = 0; v < 30; ++v)
            if (seen(urng))
                csv << "u" << u << ",i" << v << "," << user.ratings[v] << "\n";
    }
    csv.close();

    const auto d = dir.string();
    step({"cluster", "--ratings", d + "/ratings.csv", "--k", "4", "--scale", "1,5", "--seed", "7", "--out",
        d + "/clustered.json"});
    step({"synth-model", "--groups", "3", "--items", "25", "--separation", "2.5", "--seed", "7", "--out",
        d + "/synth.json"});
    const std::string policies = "lba:beta=1,lba:beta=0,tree:depth=8,users=200,oracle,random,explore_mc:samples=16";
    step({"simulate", "--model", d + "/clustered.json", "--policies", policies, "--horizon", "10",
        "--users-per-group", "6", "--seed", "7", "--jobs", jobs, "--out-dir", d + "/sim_clustered"});
    step({"simulate", "--model", d + "/synth.json", "--policies", policies, "--horizon", "10", "--users-per-group",
        "6", "--seed", "7", "--jobs", jobs, "--out-dir", d + "/sim_synth"});
    step({"report", d + "/sim_clustered/summary.csv", d + "/sim_synth/summary.csv", "--out-dir", d + "/report"});
    std::vector<std::string> check{"check-schema"};
    for (const auto& sub : {"sim_clustered", "sim_synth", "report"})
        for (const auto& e : fs::directory_iterator(dir / sub))
            check.push_back(e.path().string());
    std::sort(check.begin() + 1, check.end());
    check.push_back(d + "/clustered.json");
    step(check);
    return console;
}

Outcome determinism()
{
    const auto root = fs::temp_directory_path() / "coldstart_acceptance";
    const auto first_console = pipeline(root / "run", "1");
    const auto first = snapshot(root / "run");
    const auto second_console = pipeline(root / "run", "1");
    const auto second = snapshot(root / "run");
    const auto threaded_console = pipeline(root / "run", "3");
    const auto threaded = snapshot(root / "run");
    fs::remove_all(root);

    std::size_t differing = 0;
    std::string example;
    for (const auto* other : {&second, &threaded}) {
        if (other->size() != first.size()) {
            ++differing;
            example = "file sets differ";
            continue;
        }
        for (std::size_t i = 0; i < first.size(); ++i)
            if ((*other)[i] != first[i]) {
                ++differing;
                example = first[i].first;
            }
    }
    const bool console = first_console == second_console && first_console == threaded_console;
    std::ostringstream d;
    d << first.size() << " files from cluster, synth-model, simulate, report and check-schema, run 3x (--jobs 1,1,3); "
      << differing << " differences" << (example.empty() ? "" : " (e.g. " + example + ")") << ", console output "
      << (console ? "identical" : "differs");
    return {differing == 0 && console, d.str()};
}

} // namespace

int main()
{
    run_criterion(1, "posterior suite", posterior_suite);
    run_criterion(2, "formula oracles", formula_oracles);
    run_criterion(3, "linear vs Monte-Carlo exploration", linear_vs_mc);

    std::optional<Scenario> scenario;
    std::string scenario_error;
    const auto start = std::chrono::steady_clock::now();
    try {
        scenario = run_scenario();
    } catch (const std::exception& e) {
        scenario_error = e.what();
    }
    const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
    std::printf("shared run: %zu groups, %zu items, separation %.1f, horizon %zu, %zu users/group, seed %llu (%.1fs)\n",
        kGroups, kItems, kSeparation, kHorizon, kUsers, static_cast<unsigned long long>(kSeed), took.count());
    auto with_scenario = [&](Outcome (*f)(const Scenario&)) {
        return [&, f] { return scenario ? f(*scenario) : Outcome{false, "shared run failed: " + scenario_error}; };
    };
    run_criterion(4, "accuracy and regret orderings", with_scenario(orderings));
    run_criterion(5, "explore_mc upper bound", with_scenario(upper_bound));
    run_criterion(6, "transition to exploitation", with_scenario(exploitation));
    run_criterion(7, "per-group accuracy spread", with_scenario(group_spread));
    run_criterion(8, "CLI determinism", determinism);

    std::printf("%s: %d of 8 criteria failed\n", failures ? "FAILED" : "PASSED", failures);
    return failures ? 1 : 0;
}
