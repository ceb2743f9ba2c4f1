#include "coldstart/clustering.hpp"

#include "coldstart/errors.hpp"
#include "coldstart/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace coldstart {

namespace {

struct SparseUsers {
    std::vector<std::vector<std::pair<std::size_t, double>>> rows;
    std::vector<double> item_mean;
};

SparseUsers make_sparse(const RatingsTable& table)
{
    SparseUsers s;
    s.rows.resize(table.num_users());
    std::vector<double> sum(table.num_items(), 0.0);
    std::vector<std::size_t> count(table.num_items(), 0);
    for (const auto& t : table.triples) {
        s.rows[t.user].push_back({t.item, t.rating});
        sum[t.item] += t.rating;
        ++count[t.item];
    }
    s.item_mean.resize(table.num_items());
    for (std::size_t v = 0; v < table.num_items(); ++v)
        s.item_mean[v] = count[v] ? sum[v] / static_cast<double>(count[v]) : table.scale.midpoint();
    for (auto& r : s.rows)
        std::sort(r.begin(), r.end());
    return s;
}

class KMeans {
public:
    KMeans(const SparseUsers& users, std::size_t k)
        : users_(users)
        , k_(k)
        , items_(users.item_mean.size())
        , centroids_(k * items_)
        , base_(k)
    {
    }

    Clustering run(Rng& rng, std::size_t max_iters)
    {
        seed_plus_plus(rng);
        Clustering out;
        out.assignment.assign(users_.rows.size(), 0);
        bool first = true;
        for (std::size_t it = 0; it < max_iters; ++it) {
            bool changed = false;
            for (std::size_t u = 0; u < users_.rows.size(); ++u) {
                const GroupIndex best = nearest(u).first;
                if (first || best != out.assignment[u])
                    changed = true;
                out.assignment[u] = best;
            }
            first = false;
            if (!changed)
                break;
            update(out.assignment);
            out.wcss_trace.push_back(objective(out.assignment));
        }
        out.wcss = objective(out.assignment);
        return out;
    }

private:
    void refresh_base(std::size_t c)
    {
        double b = 0.0;
        for (std::size_t v = 0; v < items_; ++v) {
            const double d = users_.item_mean[v] - centroids_[c * items_ + v];
            b += d * d;
        }
        base_[c] = b;
    }

    double distance(std::size_t u, std::size_t c) const
    {
        double d = base_[c];
        for (const auto& [v, r] : users_.rows[u]) {
            const double cv = centroids_[c * items_ + v];
            const double dm = users_.item_mean[v] - cv;
            const double dr = r - cv;
            d += dr * dr - dm * dm;
        }
        return std::max(d, 0.0);
    }

    std::pair<GroupIndex, double> nearest(std::size_t u) const
    {
        GroupIndex best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k_; ++c) {
            const double d = distance(u, c);
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        return {best, best_d};
    }

    void set_centroid_to_user(std::size_t c, std::size_t u)
    {
        std::copy(users_.item_mean.begin(), users_.item_mean.end(), centroids_.begin() + c * items_);
        for (const auto& [v, r] : users_.rows[u])
            centroids_[c * items_ + v] = r;
        refresh_base(c);
    }

    void seed_plus_plus(Rng& rng)
    {
        const std::size_t n = users_.rows.size();
        std::uniform_int_distribution<std::size_t> first(0, n - 1);
        set_centroid_to_user(0, first(rng));
        std::vector<double> d2(n, std::numeric_limits<double>::infinity());
        for (std::size_t c = 1; c < k_; ++c) {
            double total = 0.0;
            for (std::size_t u = 0; u < n; ++u) {
                d2[u] = std::min(d2[u], distance(u, c - 1));
                total += d2[u];
            }
            std::size_t pick = 0;
            if (total > 0.0) {
                double target = std::uniform_real_distribution<double>(0.0, total)(rng);
                pick = n - 1;
                for (std::size_t u = 0; u < n; ++u) {
                    target -= d2[u];
                    if (target < 0.0 && d2[u] > 0.0) {
                        pick = u;
                        break;
                    }
                }
            } else {
                pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
            }
            set_centroid_to_user(c, pick);
        }
    }

    void update(const std::vector<GroupIndex>& assignment)
    {
        std::vector<double> sum(k_ * items_, 0.0);
        std::vector<std::size_t> rated(k_ * items_, 0);
        std::vector<std::size_t> members(k_, 0);
        for (std::size_t u = 0; u < users_.rows.size(); ++u) {
            const std::size_t c = assignment[u];
            ++members[c];
            for (const auto& [v, r] : users_.rows[u]) {
                sum[c * items_ + v] += r;
                ++rated[c * items_ + v];
            }
        }
        for (std::size_t c = 0; c < k_; ++c) {
            if (members[c] == 0)
                continue; // empty cluster keeps its centroid
            const double m = static_cast<double>(members[c]);
            for (std::size_t v = 0; v < items_; ++v) {
                const std::size_t i = c * items_ + v;
                centroids_[i] =
                    (sum[i] + static_cast<double>(members[c] - rated[i]) * users_.item_mean[v]) / m;
            }
            refresh_base(c);
        }
    }

    double objective(const std::vector<GroupIndex>& assignment) const
    {
        double total = 0.0;
        for (std::size_t u = 0; u < users_.rows.size(); ++u)
            total += distance(u, assignment[u]);
        return total;
    }

    const SparseUsers& users_;
    std::size_t k_;
    std::size_t items_;
    std::vector<double> centroids_;
    std::vector<double> base_;
};

} // namespace

void ClusteringConfig::validate() const
{
    if (k < 1)
        throw PreconditionError("k must be at least 1");
    if (max_iters < 1)
        throw PreconditionError("max_iters must be at least 1");
    if (restarts < 1)
        throw PreconditionError("restarts must be at least 1");
}

Clustering cluster_users(const RatingsTable& table, const ClusteringConfig& cfg)
{
    cfg.validate();
    if (cfg.k > table.num_users())
        throw PreconditionError("k (" + std::to_string(cfg.k) + ") exceeds the number of users (" +
                                std::to_string(table.num_users()) + ")");
    const SparseUsers users = make_sparse(table);
    Clustering best;
    bool have = false;
    for (std::size_t r = 0; r < cfg.restarts; ++r) {
        Rng rng = make_rng(cfg.seed, {r});
        KMeans km(users, cfg.k);
        Clustering c = km.run(rng, cfg.max_iters);
        c.restart = r;
        if (!have || c.wcss < best.wcss) {
            best = std::move(c);
            have = true;
        }
    }
    return best;
}

GroupModel estimate_model(const RatingsTable& table, const std::vector<GroupIndex>& assignment, std::size_t k,
    double variance_floor, std::size_t min_item_support)
{
    if (assignment.size() != table.num_users())
        throw PreconditionError("assignment must cover every user");
    if (k < 1)
        throw PreconditionError("k must be at least 1");
    for (GroupIndex g : assignment)
        if (g >= k)
            throw IndexError("assignment refers to group " + std::to_string(g) + " but k=" + std::to_string(k));
    const std::size_t N = table.num_items();
    if (N == 0)
        throw PreconditionError("ratings table has no items");

    // two passes: means, then squared deviations
    std::vector<double> cell_sum(k * N, 0.0), item_sum(N, 0.0);
    std::vector<std::size_t> cell_n(k * N, 0), item_n(N, 0);
    for (const auto& t : table.triples) {
        const std::size_t i = assignment[t.user] * N + t.item;
        cell_sum[i] += t.rating;
        ++cell_n[i];
        item_sum[t.item] += t.rating;
        ++item_n[t.item];
    }
    std::vector<double> cell_mean(k * N, 0.0), item_mean(N, 0.0);
    for (std::size_t i = 0; i < k * N; ++i)
        if (cell_n[i])
            cell_mean[i] = cell_sum[i] / static_cast<double>(cell_n[i]);
    for (std::size_t v = 0; v < N; ++v)
        item_mean[v] = item_n[v] ? item_sum[v] / static_cast<double>(item_n[v]) : table.scale.midpoint();

    std::vector<double> cell_ss(k * N, 0.0), item_ss(N, 0.0);
    for (const auto& t : table.triples) {
        const std::size_t i = assignment[t.user] * N + t.item;
        const double dc = t.rating - cell_mean[i];
        const double di = t.rating - item_mean[t.item];
        cell_ss[i] += dc * dc;
        item_ss[t.item] += di * di;
    }

    std::vector<double> item_var(N, variance_floor);
    std::vector<std::string> unrated_items;
    for (std::size_t v = 0; v < N; ++v) {
        if (item_n[v] >= 2)
            item_var[v] = item_ss[v] / static_cast<double>(item_n[v] - 1);
        if (item_n[v] == 0)
            unrated_items.push_back(table.item_ids[v]);
    }

    const std::size_t support = std::max<std::size_t>(min_item_support, 1);
    std::vector<double> mu(k * N), sigma2(k * N);
    std::size_t support_fallbacks = 0;
    std::size_t floored_variances = 0;
    for (std::size_t g = 0; g < k; ++g) {
        for (std::size_t v = 0; v < N; ++v) {
            const std::size_t i = g * N + v;
            if (cell_n[i] >= support) {
                mu[i] = cell_mean[i];
                if (cell_n[i] >= 2) {
                    sigma2[i] = cell_ss[i] / static_cast<double>(cell_n[i] - 1);
                } else {
                    sigma2[i] = variance_floor;
                    ++floored_variances;
                }
            } else {
                ++support_fallbacks;
                mu[i] = item_mean[v];
                sigma2[i] = item_var[v];
            }
        }
    }

    GroupModel model(k, N, std::move(mu), std::move(sigma2), table.scale, variance_floor);
    model.item_labels = table.item_ids;
    for (std::size_t g = 0; g < k; ++g)
        model.group_labels.push_back("g" + std::to_string(g));
    model.metadata["support_fallback_cells"] = std::to_string(support_fallbacks);
    model.metadata["single_rating_variance_cells"] = std::to_string(floored_variances);
    model.metadata["min_item_support"] = std::to_string(min_item_support);
    if (!unrated_items.empty()) {
        std::string joined;
        for (const auto& id : unrated_items)
            joined += (joined.empty() ? "" : ",") + id;
        model.metadata["items_without_ratings"] = joined;
    }
    return model;
}

} // namespace coldstart
