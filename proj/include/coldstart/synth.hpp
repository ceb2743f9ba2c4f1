#pragma once

#include "coldstart/group_model.hpp"
#include "coldstart/rng.hpp"

namespace coldstart {

/// Random group model for controlled experiments.
///
/// Each item gets a base mean uniform on the middle half of `scale`; group g's
/// mean is base + separation * (u - 1/2) with u ~ U(0, 1), so `separation` is
/// the width of the spread of group means for an item (0 makes all groups
/// identical). Per-item variances are uniform in [0.25, 1.5] and shared by all
/// groups, so means are the only signal distinguishing groups.
GroupModel synth_model(std::size_t num_groups, std::size_t num_items, double separation, Rng& rng,
    RatingScale scale = {}, double variance_floor = kDefaultVarianceFloor);

} // namespace coldstart
