#pragma once

#include "coldstart/group_model.hpp"
#include "coldstart/rng.hpp"

#include <vector>

namespace coldstart {

/// A simulated new user: a group and one fixed rating per item.
struct SyntheticUser {
    GroupIndex group = 0;
    std::vector<double> ratings;
};

/// ratings[v] ~ N(mu(g, v), sigma^2(g, v)) independently. With `clamp` set the
/// draws are clipped to the model's rating scale.
SyntheticUser sample_user(const GroupModel& model, GroupIndex g, Rng& rng, bool clamp = false);

} // namespace coldstart
