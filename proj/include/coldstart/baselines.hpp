#pragma once

#include "coldstart/decision_tree.hpp"
#include "coldstart/group_model.hpp"
#include "coldstart/policy.hpp"
#include "coldstart/rng.hpp"

namespace coldstart {

/// Best remaining item for the true group: the regret reference.
ItemIndex oracle_policy(const GroupModel& model, GroupIndex true_group, const ItemMask& rated);

/// Uniformly random unrated item.
ItemIndex random_policy(const ItemMask& rated, std::size_t num_items, Rng& rng);

} // namespace coldstart
