#include "coldstart/policy.hpp"

#include "coldstart/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace coldstart {

namespace {

// The Monte-Carlo scorer ignores groups whose log weight trails the leader
// by more than this (relative mass below e^-30) and draws no ratings from
// groups whose posterior is below kMcMinWeight.
constexpr double kMcPruneLogGap = 30.0;
constexpr double kMcMinWeight = 1e-9;

void check_rated(const GroupModel& model, const ItemMask& rated)
{
    if (rated.size() != model.num_items())
        throw PreconditionError("rated mask length does not match the model's item count");
}

void check_beta(double beta)
{
    if (!(beta >= 0.0 && beta <= 1.0))
        throw PreconditionError("beta must lie in [0, 1]");
}

void check_unrated(const GroupModel& model, const RatingHistory& history, ItemIndex item)
{
    model.check_item(item);
    if (history.contains(item))
        throw PreconditionError("item " + std::to_string(item) + " already rated");
}

// Log weight of group h after also observing rating r of item v is
// offset + quad * (r - mean)^2, laid out per item for the groups in play.
struct ItemTerms {
    std::vector<double> mean;
    std::vector<double> quad;
    std::vector<double> offset;

    void load(const GroupModel& model, const std::vector<double>& log_w, const std::vector<GroupIndex>& groups,
        ItemIndex v)
    {
        const std::size_t n = groups.size();
        mean.resize(n);
        quad.resize(n);
        offset.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            const GroupIndex h = groups[k];
            mean[k] = model.mean(h, v);
            quad[k] = -0.5 / model.variance(h, v);
            offset[k] = log_w[h] - model.log_sd(h, v);
        }
    }

    // posterior share of slot k given rating r
    double share(std::size_t k, double r, std::vector<double>& scratch) const
    {
        const double total = fill(r, scratch);
        return scratch[k] / total;
    }

    // sum over slots of the squared posterior share given rating r
    double purity(double r, std::vector<double>& scratch) const
    {
        const double total = fill(r, scratch);
        double acc = 0.0;
        for (std::size_t j = 0; j < mean.size(); ++j)
            acc += scratch[j] * scratch[j];
        return acc / (total * total);
    }

private:
    // unnormalised shares (largest is 1) in scratch; returns their sum
    double fill(double r, std::vector<double>& scratch) const
    {
        const std::size_t n = mean.size();
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            const double d = r - mean[j];
            scratch[j] = offset[j] + quad[j] * d * d;
            top = std::max(top, scratch[j]);
        }
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double d = scratch[j] - top;
            scratch[j] = d < -kMcPruneLogGap ? 0.0 : std::exp(d);
            total += scratch[j];
        }
        return total;
    }
};

std::vector<GroupIndex> all_groups(const GroupModel& model)
{
    std::vector<GroupIndex> out(model.num_groups());
    std::iota(out.begin(), out.end(), GroupIndex{0});
    return out;
}

std::vector<GroupIndex> leading_groups(const std::vector<double>& log_w)
{
    const double top = *std::max_element(log_w.begin(), log_w.end());
    std::vector<GroupIndex> out;
    for (GroupIndex h = 0; h < log_w.size(); ++h)
        if (log_w[h] >= top - kMcPruneLogGap)
            out.push_back(h);
    return out;
}

// Average share of slot k over ratings drawn from that slot's group.
double mc_estimate(const ItemTerms& terms, std::size_t k, double sd, int samples, Rng& rng, std::vector<double>& scratch)
{
    std::normal_distribution<double> noise(terms.mean[k], sd);
    double acc = 0.0;
    for (int s = 0; s < samples; ++s)
        acc += terms.share(k, noise(rng), scratch);
    return acc / samples;
}

} // namespace

void PolicyConfig::validate() const
{
    check_beta(beta);
    if (mc_samples < 1)
        throw PreconditionError("mc_samples must be at least 1");
}

std::vector<ItemIndex> ranked_items(const GroupModel& model, const ItemMask& rated, GroupIndex g)
{
    model.check_group(g);
    check_rated(model, rated);
    std::vector<ItemIndex> items;
    items.reserve(model.num_items());
    for (ItemIndex v = 0; v < model.num_items(); ++v)
        if (!rated[v])
            items.push_back(v);
    const auto row = model.mean_row(g);
    std::stable_sort(items.begin(), items.end(), [&](ItemIndex a, ItemIndex b) { return row[a] > row[b]; });
    return items;
}

double expected_posterior_linear(const GroupModel& model, const RatingHistory& history, ItemIndex item, GroupIndex g)
{
    model.check_group(g);
    check_unrated(model, history, item);
    return hypothetical_posterior(model, history, item, model.mean(g, item))[g];
}

double expected_posterior_mc(
    const GroupModel& model, const RatingHistory& history, ItemIndex item, GroupIndex g, int samples, Rng& rng)
{
    model.check_group(g);
    check_unrated(model, history, item);
    if (samples < 1)
        throw PreconditionError("samples must be at least 1");
    const auto log_w = log_likelihoods(model, history);
    const auto groups = all_groups(model);
    ItemTerms terms;
    terms.load(model, log_w, groups, item);
    std::vector<double> scratch(groups.size());
    return mc_estimate(terms, g, std::sqrt(model.variance(g, item)), samples, rng, scratch);
}

double future_reward(const GroupModel& model, const ItemMask& rated, GroupIndex g, double beta)
{
    check_beta(beta);
    double total = 0.0;
    double discount = beta;
    for (ItemIndex v : ranked_items(model, rated, g)) {
        total += discount * model.mean(g, v);
        discount *= beta;
    }
    return total;
}

namespace {

double loss_between(const GroupModel& model, const std::vector<ItemIndex>& own, const std::vector<ItemIndex>& acted,
    GroupIndex g, double beta)
{
    double total = 0.0;
    double discount = beta;
    for (std::size_t i = 0; i < own.size(); ++i) {
        total += discount * std::abs(model.mean(g, own[i]) - model.mean(g, acted[i]));
        discount *= beta;
    }
    return total;
}

} // namespace

double future_loss(const GroupModel& model, const ItemMask& rated, GroupIndex g, GroupIndex h, double beta)
{
    check_beta(beta);
    model.check_group(h);
    if (g == h)
        return 0.0;
    return loss_between(model, ranked_items(model, rated, g), ranked_items(model, rated, h), g, beta);
}

double future_regret(
    const GroupModel& model, const ItemMask& rated, const GroupPosterior& posterior, GroupIndex h, double beta)
{
    model.check_group(h);
    return future_regrets(model, rated, posterior, beta)[h];
}

std::vector<double> future_regrets(
    const GroupModel& model, const ItemMask& rated, const GroupPosterior& posterior, double beta)
{
    check_beta(beta);
    check_rated(model, rated);
    if (posterior.size() != model.num_groups())
        throw PreconditionError("posterior length does not match the model's group count");
    const std::size_t G = model.num_groups();
    std::vector<double> regret(G, 0.0);
    if (beta == 0.0)
        return regret;

    std::vector<std::vector<ItemIndex>> rankings(G);
    for (GroupIndex g = 0; g < G; ++g)
        rankings[g] = ranked_items(model, rated, g);
    for (GroupIndex h = 0; h < G; ++h) {
        for (GroupIndex g = 0; g < G; ++g) {
            if (g == h || posterior[g] == 0.0)
                continue;
            regret[h] += posterior[g] * loss_between(model, rankings[g], rankings[h], g, beta);
        }
    }
    return regret;
}

std::vector<ItemScore> score_items_lba(const GroupModel& model, const RatingHistory& history, const PolicyConfig& config)
{
    config.validate();
    const auto log_w = log_likelihoods(model, history);
    const auto post = normalize_log_weights(log_w);
    const auto rated = history.rated_mask(model.num_items());
    const auto regret = future_regrets(model, rated, post, config.beta);
    const auto groups = all_groups(model);
    ItemTerms terms;
    std::vector<double> scratch(groups.size());

    std::vector<ItemScore> scores;
    for (ItemIndex v = 0; v < model.num_items(); ++v) {
        if (rated[v])
            continue;
        terms.load(model, log_w, groups, v);
        double score = 0.0;
        for (GroupIndex g = 0; g < model.num_groups(); ++g) {
            if (post[g] == 0.0)
                continue;
            const double mu = model.mean(g, v);
            const double concentrated = terms.share(g, mu, scratch);
            score += post[g] * concentrated * (regret[g] * regret[g] + mu);
        }
        scores.push_back({v, score});
    }
    return scores;
}

std::vector<ItemScore> score_items_explore_mc(
    const GroupModel& model, const RatingHistory& history, const PolicyConfig& config, Rng& rng)
{
    config.validate();
    const auto log_w = log_likelihoods(model, history);
    const auto post = normalize_log_weights(log_w);
    const auto active = leading_groups(log_w);
    ItemTerms terms;
    std::vector<double> scratch(active.size());

    std::vector<ItemScore> scores;
    for (ItemIndex v = 0; v < model.num_items(); ++v) {
        if (history.contains(v))
            continue;
        terms.load(model, log_w, active, v);
        double score = 0.0;
        for (std::size_t k = 0; k < active.size(); ++k) {
            const GroupIndex g = active[k];
            if (post[g] < kMcMinWeight)
                continue;
            std::normal_distribution<double> noise(terms.mean[k], std::sqrt(model.variance(g, v)));
            const int draws = std::max(1, static_cast<int>(std::lround(post[g] * config.mc_samples)));
            double acc = 0.0;
            for (int s = 0; s < draws; ++s)
                acc += terms.purity(noise(rng), scratch);
            score += post[g] * acc / draws;
        }
        scores.push_back({v, score});
    }
    return scores;
}

ItemIndex pick_best(const std::vector<ItemScore>& scores, TieBreak tie, Rng* rng)
{
    if (scores.empty())
        throw ExhaustedError("no unrated items left");
    double best = scores.front().score;
    for (const auto& s : scores)
        best = std::max(best, s.score);
    const double floor = best - kScoreTieTolerance * std::max(1.0, std::abs(best));
    std::vector<ItemIndex> ties;
    for (const auto& s : scores)
        if (s.score >= floor)
            ties.push_back(s.item);
    if (tie == TieBreak::LowestIndex || ties.size() == 1)
        return *std::min_element(ties.begin(), ties.end());
    if (rng == nullptr)
        throw PreconditionError("random tie-breaking needs a random generator");
    std::sort(ties.begin(), ties.end());
    std::uniform_int_distribution<std::size_t> pick(0, ties.size() - 1);
    return ties[pick(*rng)];
}

ItemIndex select_item_lba(const GroupModel& model, const RatingHistory& history, const PolicyConfig& config)
{
    return pick_best(score_items_lba(model, history, config), config.tie_break, nullptr);
}

ItemIndex select_item_lba(const GroupModel& model, const RatingHistory& history, const PolicyConfig& config, Rng& rng)
{
    return pick_best(score_items_lba(model, history, config), config.tie_break, &rng);
}

ItemIndex select_item_explore_mc(
    const GroupModel& model, const RatingHistory& history, const PolicyConfig& config, Rng& rng)
{
    auto scores = score_items_explore_mc(model, history, config, rng);
    return pick_best(scores, config.tie_break, &rng);
}

} // namespace coldstart
