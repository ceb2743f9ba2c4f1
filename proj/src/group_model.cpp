#include "coldstart/group_model.hpp"

#include "coldstart/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace coldstart {

GroupModel::GroupModel(std::size_t num_groups, std::size_t num_items, std::vector<double> mu,
    std::vector<double> sigma2, RatingScale scale, double variance_floor)
    : num_groups_(num_groups)
    , num_items_(num_items)
    , mu_(std::move(mu))
    , sigma2_(std::move(sigma2))
    , scale_(scale)
    , variance_floor_(variance_floor)
{
    if (num_groups_ < 1 || num_items_ < 1)
        throw PreconditionError("group model needs at least one group and one item");
    if (!(variance_floor_ > 0.0) || !std::isfinite(variance_floor_))
        throw PreconditionError("variance floor must be a positive finite number");
    const std::size_t cells = num_groups_ * num_items_;
    if (mu_.size() != cells || sigma2_.size() != cells)
        throw PreconditionError("mean/variance arrays must have num_groups * num_items entries");
    if (!(scale_.min <= scale_.max))
        throw PreconditionError("rating scale min exceeds max");

    log_sd_.resize(cells);
    for (std::size_t i = 0; i < cells; ++i) {
        if (!std::isfinite(mu_[i]))
            throw PreconditionError("non-finite mean in group model");
        if (std::isnan(sigma2_[i]) || std::isinf(sigma2_[i]))
            throw PreconditionError("non-finite variance in group model");
        sigma2_[i] = std::max(sigma2_[i], variance_floor_);
        log_sd_[i] = 0.5 * std::log(sigma2_[i]);
    }
}

void GroupModel::check_group(GroupIndex g) const
{
    if (g >= num_groups_)
        throw IndexError("group index " + std::to_string(g) + " out of range (num_groups=" +
                         std::to_string(num_groups_) + ")");
}

void GroupModel::check_item(ItemIndex v) const
{
    if (v >= num_items_)
        throw IndexError("item index " + std::to_string(v) + " out of range (num_items=" +
                         std::to_string(num_items_) + ")");
}

GroupModel GroupModel::shifted(double shift) const
{
    std::vector<double> mu = mu_;
    for (double& m : mu)
        m += shift;
    GroupModel out(num_groups_, num_items_, std::move(mu), sigma2_, {scale_.min + shift, scale_.max + shift},
        variance_floor_);
    out.item_labels = item_labels;
    out.group_labels = group_labels;
    out.metadata = metadata;
    std::ostringstream text;
    text << std::setprecision(17) << shift;
    out.metadata["rating_shift"] = text.str();
    return out;
}

RatingHistory::RatingHistory(std::initializer_list<Observation> obs)
{
    for (const auto& o : obs)
        add(o.item, o.rating);
}

void RatingHistory::add(ItemIndex item, double rating)
{
    if (contains(item))
        throw PreconditionError("item " + std::to_string(item) + " already rated");
    obs_.push_back({item, rating});
}

bool RatingHistory::contains(ItemIndex item) const
{
    return std::any_of(obs_.begin(), obs_.end(), [item](const Observation& o) { return o.item == item; });
}

std::vector<bool> RatingHistory::rated_mask(std::size_t num_items) const
{
    std::vector<bool> mask(num_items, false);
    for (const auto& o : obs_) {
        if (o.item >= num_items)
            throw IndexError("item index " + std::to_string(o.item) + " out of range");
        mask[o.item] = true;
    }
    return mask;
}

GroupIndex GroupPosterior::argmax() const
{
    return static_cast<GroupIndex>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

GroupPosterior GroupPosterior::uniform(std::size_t num_groups)
{
    return {std::vector<double>(num_groups, 1.0 / static_cast<double>(num_groups))};
}

GroupPosterior GroupPosterior::point_mass(std::size_t num_groups, GroupIndex g)
{
    GroupPosterior p{std::vector<double>(num_groups, 0.0)};
    p.probs.at(g) = 1.0;
    return p;
}

void validate_history(const GroupModel& model, const RatingHistory& history)
{
    for (const auto& o : history)
        model.check_item(o.item);
}

double log_likelihood_one(const GroupModel& model, GroupIndex g, ItemIndex v, double rating)
{
    const double d = rating - model.mean(g, v);
    return -model.log_sd(g, v) - d * d / (2.0 * model.variance(g, v));
}

double log_likelihood(const GroupModel& model, const RatingHistory& history, GroupIndex g)
{
    model.check_group(g);
    validate_history(model, history);
    double ll = 0.0;
    for (const auto& o : history)
        ll += log_likelihood_one(model, g, o.item, o.rating);
    return ll;
}

std::vector<double> log_likelihoods(const GroupModel& model, const RatingHistory& history)
{
    validate_history(model, history);
    std::vector<double> ll(model.num_groups(), 0.0);
    for (GroupIndex g = 0; g < model.num_groups(); ++g)
        for (const auto& o : history)
            ll[g] += log_likelihood_one(model, g, o.item, o.rating);
    return ll;
}

GroupPosterior normalize_log_weights(std::span<const double> log_weights)
{
    GroupPosterior p{std::vector<double>(log_weights.size(), 0.0)};
    if (log_weights.empty())
        return p;
    const double top = *std::max_element(log_weights.begin(), log_weights.end());
    double total = 0.0;
    for (std::size_t g = 0; g < log_weights.size(); ++g) {
        p.probs[g] = std::exp(log_weights[g] - top);
        total += p.probs[g];
    }
    for (double& x : p.probs)
        x /= total;
    return p;
}

GroupPosterior posterior(const GroupModel& model, const RatingHistory& history)
{
    const auto ll = log_likelihoods(model, history);
    return normalize_log_weights(ll);
}

GroupPosterior hypothetical_posterior(
    const GroupModel& model, const RatingHistory& history, ItemIndex item, double rating)
{
    model.check_item(item);
    if (history.contains(item))
        throw PreconditionError("hypothetical rating for already-rated item " + std::to_string(item));
    auto ll = log_likelihoods(model, history);
    for (GroupIndex g = 0; g < model.num_groups(); ++g)
        ll[g] += log_likelihood_one(model, g, item, rating);
    return normalize_log_weights(ll);
}

} // namespace coldstart
