#include "coldstart/simulation.hpp"

#include "coldstart/baselines.hpp"
#include "coldstart/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace coldstart {

namespace {

std::string format_beta(double beta)
{
    std::ostringstream os;
    os << beta;
    return os.str();
}

// Stream tags for derive_seed.
constexpr std::uint64_t kUserStream = 0x75736572;
constexpr std::uint64_t kPolicyStream = 0x706f6c69;

// Running top-n vs chosen sums for one true group.
class RegretTracker {
public:
    RegretTracker(const GroupModel& model, GroupIndex g)
        : model_(model)
        , g_(g)
        , sorted_(model.mean_row(g).begin(), model.mean_row(g).end())
    {
        std::sort(sorted_.begin(), sorted_.end(), std::greater<>());
    }

    double push(ItemIndex v)
    {
        best_ += sorted_[n_++];
        chosen_ += model_.mean(g_, v);
        return best_ - chosen_;
    }

private:
    const GroupModel& model_;
    GroupIndex g_;
    std::vector<double> sorted_;
    std::size_t n_ = 0;
    double best_ = 0.0;
    double chosen_ = 0.0;
};

} // namespace

LbaPolicy::LbaPolicy(PolicyConfig config, std::string name)
    : config_(config)
    , name_(name.empty() ? "lba(beta=" + format_beta(config.beta) + ")" : std::move(name))
{
    config_.mode = SelectionMode::LbaLinear;
    config_.validate();
}

ItemIndex LbaPolicy::select(const StepContext& ctx) const
{
    return select_item_lba(ctx.model, ctx.history, config_, ctx.rng);
}

ExploreMcPolicy::ExploreMcPolicy(PolicyConfig config, std::string name)
    : config_(config)
    , name_(name.empty() ? "explore_mc(samples=" + std::to_string(config.mc_samples) + ")" : std::move(name))
{
    config_.mode = SelectionMode::ExploreMc;
    config_.validate();
}

ItemIndex ExploreMcPolicy::select(const StepContext& ctx) const
{
    return select_item_explore_mc(ctx.model, ctx.history, config_, ctx.rng);
}

TreePolicy::TreePolicy(std::shared_ptr<const DecisionTree> tree, std::string name)
    : tree_(std::move(tree))
    , name_(std::move(name))
{
    if (!tree_)
        throw PreconditionError("tree policy needs a trained tree");
}

ItemIndex TreePolicy::select(const StepContext& ctx) const
{
    const auto step = tree_policy_step(*tree_, ctx.history);
    if (const auto* ask = std::get_if<AskItem>(&step.action))
        return ask->item;
    const auto rated = ctx.history.rated_mask(ctx.model.num_items());
    const auto ranked = ranked_items(ctx.model, rated, step.estimate);
    if (ranked.empty())
        throw ExhaustedError("no unrated items left");
    return ranked.front();
}

GroupIndex TreePolicy::estimate(const StepContext& ctx) const
{
    return tree_policy_step(*tree_, ctx.history).estimate;
}

ItemIndex OraclePolicy::select(const StepContext& ctx) const
{
    return oracle_policy(ctx.model, ctx.true_group, ctx.history.rated_mask(ctx.model.num_items()));
}

ItemIndex RandomPolicy::select(const StepContext& ctx) const
{
    return random_policy(ctx.history.rated_mask(ctx.model.num_items()), ctx.model.num_items(), ctx.rng);
}

double cumulative_regret(const GroupModel& model, GroupIndex true_group, std::span<const ItemIndex> chosen, std::size_t n)
{
    model.check_group(true_group);
    if (n > chosen.size())
        throw PreconditionError("n exceeds the number of chosen items");
    std::vector<bool> seen(model.num_items(), false);
    RegretTracker tracker(model, true_group);
    double regret = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        model.check_item(chosen[i]);
        if (seen[chosen[i]])
            throw PreconditionError("chosen items must be distinct");
        seen[chosen[i]] = true;
        regret = tracker.push(chosen[i]);
    }
    return regret;
}

EpisodeResult run_episode(const EpisodePolicy& policy, const GroupModel& model, const SyntheticUser& user,
    std::size_t horizon, Rng& rng, const EpisodeConfig& cfg)
{
    model.check_group(user.group);
    if (user.ratings.size() != model.num_items())
        throw PreconditionError("user rating vector does not match the model's item count");
    if (horizon > model.num_items())
        throw PreconditionError("horizon exceeds the number of items");

    EpisodeResult result;
    result.true_group = user.group;
    result.horizon = horizon;
    result.steps.reserve(horizon);

    RatingHistory history;
    std::vector<double> log_w(model.num_groups(), 0.0);
    GroupPosterior post = GroupPosterior::uniform(model.num_groups());
    RegretTracker regret(model, user.group);

    for (std::size_t n = 0; n < horizon; ++n) {
        const StepContext before{model, history, post, user.group, rng};
        const ItemIndex item = policy.select(before);
        model.check_item(item);
        if (history.contains(item))
            throw ProtocolError("policy " + policy.name() + " asked for already-rated item " + std::to_string(item));

        const double rating = user.ratings[item];
        history.add(item, rating);
        for (GroupIndex g = 0; g < model.num_groups(); ++g)
            log_w[g] += log_likelihood_one(model, g, item, rating);
        post = normalize_log_weights(log_w);

        const StepContext after{model, history, post, user.group, rng};
        StepRecord rec{item, rating, post, policy.estimate(after), regret.push(item),
            std::numeric_limits<double>::quiet_NaN()};
        if (cfg.trace) {
            rec.future_regret_true = future_regret(
                model, history.rated_mask(model.num_items()), post, user.group, cfg.trace_beta);
        }
        result.steps.push_back(std::move(rec));
    }
    return result;
}

void EvalConfig::validate() const
{
    if (users_per_group < 1)
        throw PreconditionError("users_per_group must be at least 1");
    if (jobs < 1)
        throw PreconditionError("jobs must be at least 1");
}

const PolicyMetrics& MetricsSummary::policy(const std::string& name) const
{
    for (const auto& p : policies)
        if (p.name == name)
            return p;
    throw PreconditionError("no metrics for policy " + name);
}

SyntheticUser evaluation_user(const GroupModel& model, GroupIndex g, std::size_t index, std::uint64_t seed, bool clamp)
{
    Rng rng = make_rng(seed, {kUserStream, g, index});
    return sample_user(model, g, rng, clamp);
}

namespace {

struct StepOutcome {
    bool correct;
    double regret;
    double posterior_true;
    double future_regret_true;
};

StepStats summarize(const std::vector<const StepOutcome*>& outcomes)
{
    StepStats s;
    const double n = static_cast<double>(outcomes.size());
    if (outcomes.empty())
        return s;
    double hits = 0, sum = 0, sum_sq = 0, post = 0, fr = 0;
    for (const auto* o : outcomes) {
        hits += o->correct ? 1.0 : 0.0;
        sum += o->regret;
        sum_sq += o->regret * o->regret;
        post += o->posterior_true;
        fr += o->future_regret_true;
    }
    s.accuracy = hits / n;
    s.accuracy_se = std::sqrt(s.accuracy * (1.0 - s.accuracy) / n);
    s.regret = sum / n;
    const double var = n > 1 ? std::max(0.0, (sum_sq - sum * sum / n) / (n - 1)) : 0.0;
    s.regret_se = std::sqrt(var / n);
    s.posterior_true = post / n;
    s.future_regret_true = fr / n;
    return s;
}

EpisodeResult run_evaluation_episode(const EpisodePolicy& policy, std::size_t slot, const GroupModel& model,
    const SyntheticUser& user, std::size_t index, const EvalConfig& cfg)
{
    Rng rng = make_rng(cfg.seed, {kPolicyStream, user.group, index, slot});
    return run_episode(policy, model, user, cfg.horizon, rng, {cfg.trace, 1.0});
}

} // namespace

EpisodeResult evaluation_episode(const GroupModel& model, const EpisodePolicy& policy, std::size_t slot, GroupIndex g,
    std::size_t index, const EvalConfig& cfg)
{
    cfg.validate();
    model.check_group(g);
    return run_evaluation_episode(policy, slot, model, evaluation_user(model, g, index, cfg.seed, cfg.clamp), index, cfg);
}

MetricsSummary evaluate(const GroupModel& model, const std::vector<std::shared_ptr<const EpisodePolicy>>& policies,
    const EvalConfig& cfg)
{
    cfg.validate();
    if (cfg.horizon > model.num_items())
        throw PreconditionError("horizon exceeds the number of items");
    for (const auto& p : policies)
        if (!p)
            throw PreconditionError("null policy");

    const std::size_t G = model.num_groups();
    const std::size_t U = cfg.users_per_group;
    const std::size_t H = cfg.horizon;
    const std::size_t P = policies.size();
    const std::size_t episodes = G * U;

    // outcome[(p * episodes + e) * H + step]
    std::vector<StepOutcome> outcome(P * episodes * H);
    std::vector<EpisodeResult> kept(cfg.keep_episodes ? P * episodes : 0);

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t e = next.fetch_add(1);
            if (e >= episodes)
                return;
            try {
                const GroupIndex g = e / U;
                const std::size_t u = e % U;
                const SyntheticUser user = evaluation_user(model, g, u, cfg.seed, cfg.clamp);
                for (std::size_t p = 0; p < P; ++p) {
                    auto res = run_evaluation_episode(*policies[p], p, model, user, u, cfg);
                    for (std::size_t s = 0; s < H; ++s) {
                        const auto& st = res.steps[s];
                        outcome[(p * episodes + e) * H + s] = {st.estimate == g, st.cumulative_regret,
                            st.posterior[g], cfg.trace ? st.future_regret_true : 0.0};
                    }
                    if (cfg.keep_episodes)
                        kept[p * episodes + e] = std::move(res);
                }
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
                next = episodes;
                return;
            }
        }
    };

    const std::size_t jobs = std::min(cfg.jobs, std::max<std::size_t>(episodes, 1));
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t j = 0; j < jobs; ++j)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }
    if (failure)
        std::rethrow_exception(failure);

    MetricsSummary summary;
    summary.num_groups = G;
    summary.users_per_group = U;
    summary.horizon = H;
    summary.seed = cfg.seed;
    for (std::size_t p = 0; p < P; ++p) {
        PolicyMetrics pm;
        pm.name = policies[p]->name();
        pm.per_group.assign(G, std::vector<StepStats>(H));
        pm.overall.resize(H);
        std::vector<const StepOutcome*> pooled, group;
        for (std::size_t s = 0; s < H; ++s) {
            pooled.clear();
            for (GroupIndex g = 0; g < G; ++g) {
                group.clear();
                for (std::size_t u = 0; u < U; ++u)
                    group.push_back(&outcome[(p * episodes + g * U + u) * H + s]);
                pm.per_group[g][s] = summarize(group);
                pooled.insert(pooled.end(), group.begin(), group.end());
            }
            pm.overall[s] = summarize(pooled);
        }
        if (cfg.keep_episodes)
            pm.episodes.assign(std::make_move_iterator(kept.begin() + p * episodes),
                std::make_move_iterator(kept.begin() + (p + 1) * episodes));
        summary.policies.push_back(std::move(pm));
    }
    return summary;
}

} // namespace coldstart
