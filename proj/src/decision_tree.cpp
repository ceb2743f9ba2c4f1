#include "coldstart/decision_tree.hpp"

#include "coldstart/errors.hpp"
#include "coldstart/synthetic_user.hpp"

#include <algorithm>
#include <numeric>

namespace coldstart {

namespace {

GroupIndex majority_of(const std::vector<std::size_t>& counts)
{
    return static_cast<GroupIndex>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

double gini(const std::vector<std::size_t>& counts, std::size_t total)
{
    if (total == 0)
        return 0.0;
    double sum_sq = 0.0;
    for (std::size_t c : counts) {
        const double p = static_cast<double>(c) / static_cast<double>(total);
        sum_sq += p * p;
    }
    return 1.0 - sum_sq;
}

struct Split {
    bool found = false;
    ItemIndex item = 0;
    double threshold = 0.0;
    double impurity = 0.0; // weighted child gini
};

class Builder {
public:
    Builder(const TrainingSet& data, std::size_t num_groups, const TrainConfig& cfg)
        : data_(data)
        , num_groups_(num_groups)
        , cfg_(cfg)
        , used_(data.num_items, false)
    {
    }

    std::vector<TreeNode> build()
    {
        std::vector<std::size_t> all(data_.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        grow(all, 0);
        return std::move(nodes_);
    }

private:
    std::size_t grow(const std::vector<std::size_t>& rows, std::size_t depth)
    {
        std::vector<std::size_t> counts(num_groups_, 0);
        for (std::size_t r : rows)
            ++counts[data_.labels[r]];

        const std::size_t id = nodes_.size();
        nodes_.push_back({});
        nodes_[id].majority = majority_of(counts);
        nodes_[id].samples = rows.size();

        const bool pure = std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }) <= 1;
        if (pure || depth >= cfg_.max_depth || rows.size() < 2 * cfg_.min_leaf)
            return id;

        const Split split = best_split(rows, counts);
        if (!split.found)
            return id;

        std::vector<std::size_t> left, right;
        for (std::size_t r : rows)
            (data_.row(r)[split.item] < split.threshold ? left : right).push_back(r);

        used_[split.item] = true;
        nodes_[id].leaf = false;
        nodes_[id].split_item = split.item;
        nodes_[id].threshold = split.threshold;
        const std::size_t l = grow(left, depth + 1);
        const std::size_t r = grow(right, depth + 1);
        nodes_[id].left = l;
        nodes_[id].right = r;
        used_[split.item] = false;
        return id;
    }

    Split best_split(const std::vector<std::size_t>& rows, const std::vector<std::size_t>& counts)
    {
        const std::size_t n = rows.size();
        const double parent = gini(counts, n);
        Split best;
        best.impurity = parent;

        std::vector<std::pair<double, GroupIndex>> column(n);
        std::vector<std::size_t> left_counts(num_groups_);
        std::vector<std::size_t> right_counts(num_groups_);

        for (ItemIndex v = 0; v < data_.num_items; ++v) {
            if (used_[v])
                continue;
            for (std::size_t i = 0; i < n; ++i)
                column[i] = {data_.row(rows[i])[v], data_.labels[rows[i]]};
            std::sort(column.begin(), column.end());

            std::fill(left_counts.begin(), left_counts.end(), 0);
            right_counts = counts;
            std::size_t next_cut = 0;
            for (std::size_t pos = 1; pos < n; ++pos) {
                // move column[pos-1] to the left side
                ++left_counts[column[pos - 1].second];
                --right_counts[column[pos - 1].second];
                if (pos < cfg_.min_leaf || n - pos < cfg_.min_leaf)
                    continue;
                if (column[pos - 1].first == column[pos].first)
                    continue;
                if (cfg_.candidate_thresholds > 0) {
                    // only the cut points closest to the k quantile positions
                    while (next_cut < cfg_.candidate_thresholds && quantile_pos(next_cut, n) < pos)
                        ++next_cut;
                    if (next_cut >= cfg_.candidate_thresholds || quantile_pos(next_cut, n) != pos)
                        continue;
                }
                const double nl = static_cast<double>(pos);
                const double nr = static_cast<double>(n - pos);
                const double impurity =
                    (nl * gini(left_counts, pos) + nr * gini(right_counts, n - pos)) / static_cast<double>(n);
                if (impurity < best.impurity - 1e-12) {
                    best.found = true;
                    best.item = v;
                    best.threshold = 0.5 * (column[pos - 1].first + column[pos].first);
                    best.impurity = impurity;
                }
            }
        }
        return best;
    }

    std::size_t quantile_pos(std::size_t k, std::size_t n) const
    {
        return ((k + 1) * n) / (cfg_.candidate_thresholds + 1);
    }

    const TrainingSet& data_;
    std::size_t num_groups_;
    const TrainConfig& cfg_;
    std::vector<bool> used_;
    std::vector<TreeNode> nodes_;
};

} // namespace

DecisionTree::DecisionTree(std::vector<TreeNode> nodes, std::size_t num_groups, std::size_t max_depth)
    : nodes_(std::move(nodes))
    , num_groups_(num_groups)
    , max_depth_(max_depth)
{
    if (nodes_.empty())
        throw StructuralError("decision tree has no nodes");
    std::vector<int> parents(nodes_.size(), 0);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const auto& nd = nodes_[i];
        if (nd.majority >= num_groups_)
            throw StructuralError("node " + std::to_string(i) + " predicts an out-of-range group");
        if (nd.leaf)
            continue;
        // preorder: children come strictly after their parent, so no cycles
        if (nd.left <= i || nd.right <= i || nd.left >= nodes_.size() || nd.right >= nodes_.size() ||
            nd.left == nd.right)
            throw StructuralError("node " + std::to_string(i) + " has invalid children");
        ++parents[nd.left];
        ++parents[nd.right];
    }
    if (parents[0] != 0)
        throw StructuralError("root node has a parent");
    for (std::size_t i = 1; i < nodes_.size(); ++i)
        if (parents[i] != 1)
            throw StructuralError("node " + std::to_string(i) + " is unreachable or shared");

    // distinct split items along every root-to-leaf path
    std::vector<std::pair<std::size_t, std::vector<ItemIndex>>> stack{{0, {}}};
    while (!stack.empty()) {
        auto [id, path] = std::move(stack.back());
        stack.pop_back();
        const auto& nd = nodes_[id];
        if (nd.leaf)
            continue;
        if (std::find(path.begin(), path.end(), nd.split_item) != path.end())
            throw StructuralError("item " + std::to_string(nd.split_item) + " repeated on a tree path");
        path.push_back(nd.split_item);
        stack.push_back({nd.left, path});
        stack.push_back({nd.right, std::move(path)});
    }
}

std::size_t DecisionTree::depth() const
{
    std::vector<std::size_t> d(nodes_.size(), 0);
    std::size_t deepest = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        deepest = std::max(deepest, d[i]);
        if (!nodes_[i].leaf) {
            d[nodes_[i].left] = d[i] + 1;
            d[nodes_[i].right] = d[i] + 1;
        }
    }
    return deepest;
}

GroupIndex DecisionTree::predict(std::span<const double> ratings) const
{
    std::size_t id = 0;
    while (!nodes_[id].leaf) {
        const auto& nd = nodes_[id];
        id = ratings[nd.split_item] < nd.threshold ? nd.left : nd.right;
    }
    return nodes_[id].majority;
}

void TrainConfig::validate() const
{
    if (users_per_group < 1)
        throw PreconditionError("users_per_group must be at least 1");
    if (max_depth < 1)
        throw PreconditionError("max_depth must be at least 1");
    if (min_leaf < 1)
        throw PreconditionError("min_leaf must be at least 1");
}

TrainingSet make_training_set(const GroupModel& model, std::size_t users_per_group, Rng& rng)
{
    TrainingSet data;
    data.num_items = model.num_items();
    data.ratings.reserve(model.num_groups() * users_per_group * model.num_items());
    for (GroupIndex g = 0; g < model.num_groups(); ++g) {
        for (std::size_t u = 0; u < users_per_group; ++u) {
            const auto user = sample_user(model, g, rng);
            data.ratings.insert(data.ratings.end(), user.ratings.begin(), user.ratings.end());
            data.labels.push_back(g);
        }
    }
    return data;
}

DecisionTree train_tree(const TrainingSet& data, std::size_t num_groups, const TrainConfig& cfg)
{
    cfg.validate();
    if (data.size() == 0)
        throw PreconditionError("cannot train a decision tree on an empty sample");
    Builder builder(data, num_groups, cfg);
    return DecisionTree(builder.build(), num_groups, cfg.max_depth);
}

DecisionTree train_tree(const GroupModel& model, const TrainConfig& cfg, Rng& rng)
{
    cfg.validate();
    const auto data = make_training_set(model, cfg.users_per_group, rng);
    return train_tree(data, model.num_groups(), cfg);
}

double tree_accuracy(const DecisionTree& tree, const TrainingSet& data)
{
    if (data.size() == 0)
        return 0.0;
    std::size_t hits = 0;
    for (std::size_t u = 0; u < data.size(); ++u)
        hits += tree.predict(data.row(u)) == data.labels[u];
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

TreeStep tree_policy_step(const DecisionTree& tree, const RatingHistory& history)
{
    std::size_t id = 0;
    std::size_t depth = 0;
    for (;;) {
        const auto& nd = tree.node(id);
        if (nd.leaf)
            return {Prediction{nd.majority}, nd.majority, id, depth};
        const auto it = std::find_if(history.begin(), history.end(),
            [&](const Observation& o) { return o.item == nd.split_item; });
        if (it == history.end())
            return {AskItem{nd.split_item}, nd.majority, id, depth};
        id = it->rating < nd.threshold ? nd.left : nd.right;
        ++depth;
    }
}

} // namespace coldstart
