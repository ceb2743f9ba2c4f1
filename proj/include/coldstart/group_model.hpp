#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace coldstart {

using GroupIndex = std::size_t;
using ItemIndex = std::size_t;

struct RatingScale {
    double min = 1.0;
    double max = 5.0;

    double midpoint() const { return 0.5 * (min + max); }
    bool contains(double r) const { return r >= min && r <= max; }
    bool operator==(const RatingScale&) const = default;
};

inline constexpr double kDefaultVarianceFloor = 0.05;

/// Per-group, per-item Gaussian rating statistics: the latent environment.
///
/// Means and variances are stored row-major, `[group * num_items + item]`.
/// Variances are clamped to `variance_floor` on construction, so every
/// likelihood evaluation is finite. Immutable once built.
class GroupModel {
public:
    GroupModel(std::size_t num_groups, std::size_t num_items, std::vector<double> mu,
        std::vector<double> sigma2, RatingScale scale = {}, double variance_floor = kDefaultVarianceFloor);

    std::size_t num_groups() const { return num_groups_; }
    std::size_t num_items() const { return num_items_; }

    double mean(GroupIndex g, ItemIndex v) const { return mu_[g * num_items_ + v]; }
    double variance(GroupIndex g, ItemIndex v) const { return sigma2_[g * num_items_ + v]; }
    /// log sigma(g, v), precomputed.
    double log_sd(GroupIndex g, ItemIndex v) const { return log_sd_[g * num_items_ + v]; }

    std::span<const double> mean_row(GroupIndex g) const { return {mu_.data() + g * num_items_, num_items_}; }
    const std::vector<double>& means() const { return mu_; }
    const std::vector<double>& variances() const { return sigma2_; }

    const RatingScale& scale() const { return scale_; }
    double variance_floor() const { return variance_floor_; }

    void check_group(GroupIndex g) const;
    void check_item(ItemIndex v) const;

    // Optional descriptive data; not used by any computation.
    std::vector<std::string> item_labels;
    std::vector<std::string> group_labels;
    std::map<std::string, std::string> metadata;

    /// Copy with every mean and the rating scale shifted by `shift`; recorded
    /// under metadata["rating_shift"].
    GroupModel shifted(double shift) const;

private:
    std::size_t num_groups_;
    std::size_t num_items_;
    std::vector<double> mu_;
    std::vector<double> sigma2_;
    std::vector<double> log_sd_;
    RatingScale scale_;
    double variance_floor_;
};

struct Observation {
    ItemIndex item;
    double rating;
};

/// Ordered ratings given by one user. Each item appears at most once.
class RatingHistory {
public:
    RatingHistory() = default;
    RatingHistory(std::initializer_list<Observation> obs);

    /// Throws PreconditionError if `item` is already present.
    void add(ItemIndex item, double rating);
    bool contains(ItemIndex item) const;

    std::size_t size() const { return obs_.size(); }
    bool empty() const { return obs_.empty(); }
    const std::vector<Observation>& observations() const { return obs_; }
    auto begin() const { return obs_.begin(); }
    auto end() const { return obs_.end(); }

    /// rated[v] is true for every item in the history.
    std::vector<bool> rated_mask(std::size_t num_items) const;

private:
    std::vector<Observation> obs_;
};

/// Probability vector over groups.
struct GroupPosterior {
    std::vector<double> probs;

    std::size_t size() const { return probs.size(); }
    double operator[](GroupIndex g) const { return probs[g]; }
    /// Most probable group, lowest index on ties.
    GroupIndex argmax() const;

    static GroupPosterior uniform(std::size_t num_groups);
    static GroupPosterior point_mass(std::size_t num_groups, GroupIndex g);
};

/// Throws IndexError when the history references items outside the model.
void validate_history(const GroupModel& model, const RatingHistory& history);

/// log p(D_n | G=g) without the group-independent -(n/2) log 2pi term:
/// -sum_i log sigma(g, v_i) - sum_i (r_i - mu(g, v_i))^2 / (2 sigma^2(g, v_i)).
double log_likelihood(const GroupModel& model, const RatingHistory& history, GroupIndex g);

/// Log-likelihood of a single rating under group g (same convention).
double log_likelihood_one(const GroupModel& model, GroupIndex g, ItemIndex v, double rating);

/// log_likelihood for every group.
std::vector<double> log_likelihoods(const GroupModel& model, const RatingHistory& history);

/// Normalises unnormalised log weights with a max shift.
GroupPosterior normalize_log_weights(std::span<const double> log_weights);

/// Posterior over groups under a uniform prior.
GroupPosterior posterior(const GroupModel& model, const RatingHistory& history);

/// Posterior after additionally observing (item, rating). The history is not modified.
GroupPosterior hypothetical_posterior(
    const GroupModel& model, const RatingHistory& history, ItemIndex item, double rating);

} // namespace coldstart
