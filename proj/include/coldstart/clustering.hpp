#pragma once

#include "coldstart/group_model.hpp"
#include "coldstart/ratings.hpp"

#include <cstdint>
#include <vector>

namespace coldstart {

struct ClusteringConfig {
    std::size_t k = 16;
    std::size_t max_iters = 100;
    std::size_t restarts = 10;
    std::size_t min_item_support = 5;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Clustering {
    std::vector<GroupIndex> assignment; // per user row
    double wcss = 0.0;                  // within-cluster sum of squares of the kept restart
    std::vector<double> wcss_trace;     // objective after each Lloyd iteration of the kept restart
    std::size_t restart = 0;            // which restart was kept
};

/// k-means (k-means++ seeding) on user rating vectors in which every missing
/// rating is imputed with the item's mean rating. The best of `restarts` runs
/// by within-cluster sum of squares is returned. Works on the sparse table:
/// distances to a centroid are the all-imputed distance corrected on the
/// user's rated items.
Clustering cluster_users(const RatingsTable& table, const ClusteringConfig& cfg);

/// Per-group sample mean and unbiased variance of every item.
///
/// Cells with fewer than `min_item_support` ratings use the item's global
/// mean/variance; a variance from fewer than two ratings is replaced by the
/// floor; items with no ratings at all get the scale midpoint and the floor.
/// Counts of each fallback are written to the model metadata.
GroupModel estimate_model(const RatingsTable& table, const std::vector<GroupIndex>& assignment, std::size_t k,
    double variance_floor = kDefaultVarianceFloor, std::size_t min_item_support = 5);

} // namespace coldstart
