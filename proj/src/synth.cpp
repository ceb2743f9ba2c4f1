#include "coldstart/synth.hpp"

#include "coldstart/errors.hpp"
#include "coldstart/synthetic_user.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace coldstart {

GroupModel synth_model(
    std::size_t num_groups, std::size_t num_items, double separation, Rng& rng, RatingScale scale, double variance_floor)
{
    if (!(separation >= 0.0) || !std::isfinite(separation))
        throw PreconditionError("separation must be a finite non-negative number");
    if (num_groups < 1 || num_items < 1)
        throw PreconditionError("synthetic model needs at least one group and one item");

    const double quarter = 0.25 * (scale.max - scale.min);
    std::uniform_real_distribution<double> base_dist(scale.midpoint() - quarter, scale.midpoint() + quarter);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> var_dist(0.25, 1.5);

    std::vector<double> base(num_items), var(num_items);
    for (std::size_t v = 0; v < num_items; ++v) {
        base[v] = base_dist(rng);
        var[v] = var_dist(rng);
    }
    std::vector<double> mu(num_groups * num_items), sigma2(num_groups * num_items);
    for (std::size_t g = 0; g < num_groups; ++g) {
        for (std::size_t v = 0; v < num_items; ++v) {
            mu[g * num_items + v] = base[v] + separation * (unit(rng) - 0.5);
            sigma2[g * num_items + v] = var[v];
        }
    }
    GroupModel model(num_groups, num_items, std::move(mu), std::move(sigma2), scale, variance_floor);
    std::ostringstream sep;
    sep << separation;
    model.metadata["generator"] = "synth";
    model.metadata["separation"] = sep.str();
    return model;
}

SyntheticUser sample_user(const GroupModel& model, GroupIndex g, Rng& rng, bool clamp)
{
    model.check_group(g);
    SyntheticUser user;
    user.group = g;
    user.ratings.resize(model.num_items());
    std::normal_distribution<double> z(0.0, 1.0);
    for (ItemIndex v = 0; v < model.num_items(); ++v) {
        double r = model.mean(g, v) + std::sqrt(model.variance(g, v)) * z(rng);
        if (clamp)
            r = std::clamp(r, model.scale().min, model.scale().max);
        user.ratings[v] = r;
    }
    return user;
}

} // namespace coldstart
