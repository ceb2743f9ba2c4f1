#include "coldstart/baselines.hpp"

#include "coldstart/errors.hpp"

namespace coldstart {

ItemIndex oracle_policy(const GroupModel& model, GroupIndex true_group, const ItemMask& rated)
{
    const auto ranked = ranked_items(model, rated, true_group);
    if (ranked.empty())
        throw ExhaustedError("no unrated items left");
    return ranked.front();
}

ItemIndex random_policy(const ItemMask& rated, std::size_t num_items, Rng& rng)
{
    if (rated.size() != num_items)
        throw PreconditionError("rated mask length does not match num_items");
    std::vector<ItemIndex> open;
    for (ItemIndex v = 0; v < num_items; ++v)
        if (!rated[v])
            open.push_back(v);
    if (open.empty())
        throw ExhaustedError("no unrated items left");
    std::uniform_int_distribution<std::size_t> pick(0, open.size() - 1);
    return open[pick(rng)];
}

} // namespace coldstart
