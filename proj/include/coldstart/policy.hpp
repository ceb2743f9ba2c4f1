#pragma once

#include "coldstart/group_model.hpp"
#include "coldstart/rng.hpp"

#include <vector>

namespace coldstart {

/// rated[v] == true once item v has been rated.
using ItemMask = std::vector<bool>;

enum class SelectionMode { LbaLinear, ExploreMc };
enum class TieBreak { LowestIndex, Random };

struct PolicyConfig {
    double beta = 1.0;        // probability the user stays for the next recommendation
    int mc_samples = 1000;    // Monte-Carlo ratings per item, split across groups by posterior weight
    SelectionMode mode = SelectionMode::LbaLinear;
    TieBreak tie_break = TieBreak::LowestIndex;

    void validate() const;
};

struct ItemScore {
    ItemIndex item;
    double score;
};

/// Unrated items sorted by mu(g, .) descending, ties by ascending index.
std::vector<ItemIndex> ranked_items(const GroupModel& model, const ItemMask& rated, GroupIndex g);

/// Linearised expectation of the posterior on g after rating `item`:
/// the hypothetical posterior evaluated at the group mean rating mu(g, item).
double expected_posterior_linear(const GroupModel& model, const RatingHistory& history, ItemIndex item, GroupIndex g);

/// Monte-Carlo estimate of E[P(G=g | D_n, item, R(item)); G=g] with
/// R(item) ~ N(mu(g, item), sigma^2(g, item)).
double expected_posterior_mc(
    const GroupModel& model, const RatingHistory& history, ItemIndex item, GroupIndex g, int samples, Rng& rng);

/// sum_{i>=1} beta^i mu(g, v_{i,g}) over the ranked unrated items.
double future_reward(const GroupModel& model, const ItemMask& rated, GroupIndex g, double beta);

/// Discounted loss of recommending in group h's order to a user from group g.
double future_loss(const GroupModel& model, const ItemMask& rated, GroupIndex g, GroupIndex h, double beta);

/// Posterior-weighted future loss of acting as if the user were in group h.
double future_regret(
    const GroupModel& model, const ItemMask& rated, const GroupPosterior& posterior, GroupIndex h, double beta);

/// future_regret for every acting group; shares the per-group rankings.
std::vector<double> future_regrets(
    const GroupModel& model, const ItemMask& rated, const GroupPosterior& posterior, double beta);

/// Combined exploration/exploitation score of every unrated item:
///   sum_g P(g | D_n) * P(g | D_n, v, mu(g, v)) * (J_regret(g)^2 + mu(g, v))
/// with J_regret evaluated once on the current rated set.
std::vector<ItemScore> score_items_lba(const GroupModel& model, const RatingHistory& history, const PolicyConfig& config);

/// Pure exploration score sum_g P(g | D_n) * E[P(g | D_n, v, R(v)); G=g].
/// The same quantity equals E[sum_j P(j | D_n, v, R)^2] with R drawn from the
/// posterior predictive mixture; it is estimated that way, drawing about
/// mc_samples * P(g | D_n) ratings (at least one) from each group g.
std::vector<ItemScore> score_items_explore_mc(
    const GroupModel& model, const RatingHistory& history, const PolicyConfig& config, Rng& rng);

/// Scores this close to the maximum (relative to max(1, |max|)) count as tied,
/// so that mathematically equal scores computed along different rounding
/// paths still tie.
inline constexpr double kScoreTieTolerance = 1e-12;

/// Highest scoring item; ties resolved per `tie`. Throws ExhaustedError on an empty list.
ItemIndex pick_best(const std::vector<ItemScore>& scores, TieBreak tie, Rng* rng);

/// Throws ExhaustedError when nothing is left to rate.
ItemIndex select_item_lba(const GroupModel& model, const RatingHistory& history, const PolicyConfig& config);
ItemIndex select_item_lba(const GroupModel& model, const RatingHistory& history, const PolicyConfig& config, Rng& rng);

ItemIndex select_item_explore_mc(
    const GroupModel& model, const RatingHistory& history, const PolicyConfig& config, Rng& rng);

} // namespace coldstart
