#pragma once

#include "coldstart/group_model.hpp"
#include "coldstart/rng.hpp"

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

namespace coldstart {

/// One node of a binary CART tree, stored in preorder.
/// Internal nodes send `rating < threshold` to `left`, everything else to `right`.
struct TreeNode {
    bool leaf = true;
    ItemIndex split_item = 0;
    double threshold = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;
    GroupIndex majority = 0;
    std::size_t samples = 0;
};

class DecisionTree {
public:
    /// Validates structure; throws StructuralError on dangling/shared children,
    /// repeated split items on a path or an out-of-range majority group.
    DecisionTree(std::vector<TreeNode> nodes, std::size_t num_groups, std::size_t max_depth);

    const std::vector<TreeNode>& nodes() const { return nodes_; }
    const TreeNode& node(std::size_t i) const { return nodes_.at(i); }
    std::size_t num_groups() const { return num_groups_; }
    std::size_t max_depth() const { return max_depth_; }
    /// Longest root-to-leaf path, in edges.
    std::size_t depth() const;

    /// Group predicted for a user whose full rating vector is known.
    GroupIndex predict(std::span<const double> ratings) const;

private:
    std::vector<TreeNode> nodes_;
    std::size_t num_groups_;
    std::size_t max_depth_;
};

struct TrainConfig {
    std::size_t users_per_group = 1000;
    std::size_t max_depth = 25;
    std::size_t min_leaf = 5;
    /// 0 scans every midpoint between consecutive sorted ratings;
    /// k > 0 restricts candidates to k quantile cut points per item.
    std::size_t candidate_thresholds = 0;

    void validate() const;
};

/// Labelled synthetic users, ratings stored row-major [user * num_items + item].
struct TrainingSet {
    std::size_t num_items = 0;
    std::vector<double> ratings;
    std::vector<GroupIndex> labels;

    std::size_t size() const { return labels.size(); }
    std::span<const double> row(std::size_t u) const { return {ratings.data() + u * num_items, num_items}; }
};

TrainingSet make_training_set(const GroupModel& model, std::size_t users_per_group, Rng& rng);

/// Greedy Gini CART on a labelled sample.
DecisionTree train_tree(const TrainingSet& data, std::size_t num_groups, const TrainConfig& cfg);

/// Samples `cfg.users_per_group` synthetic users per group and trains on them.
DecisionTree train_tree(const GroupModel& model, const TrainConfig& cfg, Rng& rng);

/// Fraction of `data` classified correctly.
double tree_accuracy(const DecisionTree& tree, const TrainingSet& data);

struct AskItem {
    ItemIndex item;
};
struct Prediction {
    GroupIndex group;
};

struct TreeStep {
    std::variant<AskItem, Prediction> action;
    GroupIndex estimate; // majority group of the deepest node reached
    std::size_t node;
    std::size_t depth;
};

/// Walks the tree using the ratings already in `history`. Returns the next
/// split item to ask, or the leaf prediction when a leaf is reached.
TreeStep tree_policy_step(const DecisionTree& tree, const RatingHistory& history);

} // namespace coldstart
