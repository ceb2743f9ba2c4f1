#pragma once

#include "coldstart/decision_tree.hpp"
#include "coldstart/group_model.hpp"
#include "coldstart/policy.hpp"
#include "coldstart/rng.hpp"
#include "coldstart/synthetic_user.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace coldstart {

/// Everything a policy may look at when choosing the next item. Only the
/// oracle baseline reads `true_group`.
struct StepContext {
    const GroupModel& model;
    const RatingHistory& history;
    const GroupPosterior& posterior;
    GroupIndex true_group;
    Rng& rng;
};

/// Item-selection strategy driven by run_episode. Implementations hold no
/// per-episode state, so one instance can serve concurrent episodes.
class EpisodePolicy {
public:
    virtual ~EpisodePolicy() = default;
    virtual std::string name() const = 0;
    virtual ItemIndex select(const StepContext& ctx) const = 0;
    /// Group estimate once the step's rating is in the history.
    virtual GroupIndex estimate(const StepContext& ctx) const { return ctx.posterior.argmax(); }
};

class LbaPolicy : public EpisodePolicy {
public:
    explicit LbaPolicy(PolicyConfig config, std::string name = "");
    std::string name() const override { return name_; }
    ItemIndex select(const StepContext& ctx) const override;
    const PolicyConfig& config() const { return config_; }

private:
    PolicyConfig config_;
    std::string name_;
};

class ExploreMcPolicy : public EpisodePolicy {
public:
    explicit ExploreMcPolicy(PolicyConfig config, std::string name = "");
    std::string name() const override { return name_; }
    ItemIndex select(const StepContext& ctx) const override;

private:
    PolicyConfig config_;
    std::string name_;
};

/// Asks the tree's split items; once a leaf is reached, recommends the
/// predicted group's best remaining items.
class TreePolicy : public EpisodePolicy {
public:
    explicit TreePolicy(std::shared_ptr<const DecisionTree> tree, std::string name = "tree");
    std::string name() const override { return name_; }
    ItemIndex select(const StepContext& ctx) const override;
    GroupIndex estimate(const StepContext& ctx) const override;

private:
    std::shared_ptr<const DecisionTree> tree_;
    std::string name_;
};

class OraclePolicy : public EpisodePolicy {
public:
    explicit OraclePolicy(std::string name = "oracle")
        : name_(std::move(name))
    {
    }
    std::string name() const override { return name_; }
    ItemIndex select(const StepContext& ctx) const override;

private:
    std::string name_;
};

class RandomPolicy : public EpisodePolicy {
public:
    explicit RandomPolicy(std::string name = "random")
        : name_(std::move(name))
    {
    }
    std::string name() const override { return name_; }
    ItemIndex select(const StepContext& ctx) const override;

private:
    std::string name_;
};

/// Expected cumulative regret after the first n chosen items:
/// (sum of the n largest mu(g*, .)) - (sum of mu(g*, chosen[0..n))).
double cumulative_regret(const GroupModel& model, GroupIndex true_group, std::span<const ItemIndex> chosen, std::size_t n);

struct StepRecord {
    ItemIndex item;
    double rating;
    GroupPosterior posterior;
    GroupIndex estimate;
    double cumulative_regret;
    double future_regret_true; // future_regret(g*) on the updated history; NaN unless traced
};

struct EpisodeResult {
    GroupIndex true_group = 0;
    std::size_t horizon = 0;
    std::vector<StepRecord> steps;

    /// Estimate after the last step; the uniform-prior argmax (group 0) when no step ran.
    GroupIndex final_estimate() const { return steps.empty() ? 0 : steps.back().estimate; }
};

struct EpisodeConfig {
    bool trace = false;       // fill StepRecord::future_regret_true
    double trace_beta = 1.0;  // discount used for that diagnostic
};

/// Asks `horizon` items one at a time, revealing the user's fixed rating each time.
/// Throws PreconditionError if horizon > num_items and ProtocolError if the
/// policy repeats an item.
EpisodeResult run_episode(const EpisodePolicy& policy, const GroupModel& model, const SyntheticUser& user,
    std::size_t horizon, Rng& rng, const EpisodeConfig& cfg = {});

struct StepStats {
    double accuracy = 0.0;
    double accuracy_se = 0.0;
    double regret = 0.0;
    double regret_se = 0.0;
    double posterior_true = 0.0;
    double future_regret_true = 0.0;
};

struct PolicyMetrics {
    std::string name;
    std::vector<std::vector<StepStats>> per_group; // [group][step - 1]
    std::vector<StepStats> overall;                // [step - 1], pooled over groups
    std::vector<EpisodeResult> episodes;           // [group * users_per_group + user], if kept
};

struct EvalConfig {
    std::size_t users_per_group = 1000;
    std::size_t horizon = 25;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
    bool clamp = false;
    bool trace = false;
    bool keep_episodes = false;

    void validate() const;
};

struct MetricsSummary {
    std::size_t num_groups = 0;
    std::size_t users_per_group = 0;
    std::size_t horizon = 0;
    std::uint64_t seed = 0;
    std::vector<PolicyMetrics> policies;

    const PolicyMetrics& policy(const std::string& name) const;
};

/// The user for (group, index) under `seed`: identical for every policy.
SyntheticUser evaluation_user(const GroupModel& model, GroupIndex g, std::size_t index, std::uint64_t seed, bool clamp);

/// The episode `evaluate` runs for the policy in position `slot` of its list
/// and user (g, index); reproduces that run exactly.
EpisodeResult evaluation_episode(const GroupModel& model, const EpisodePolicy& policy, std::size_t slot, GroupIndex g,
    std::size_t index, const EvalConfig& cfg);

/// Runs every policy against the same synthetic users (paired comparison).
/// Output is bit-identical for a given seed whatever `jobs` is.
MetricsSummary evaluate(const GroupModel& model, const std::vector<std::shared_ptr<const EpisodePolicy>>& policies,
    const EvalConfig& cfg);

} // namespace coldstart
