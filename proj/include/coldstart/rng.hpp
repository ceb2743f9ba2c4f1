#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace coldstart {

using Rng = std::mt19937_64;

/// Mixes a master seed with stream identifiers into an independent sub-seed.
/// Used so each (group, user, policy) episode owns its own generator and
/// results do not depend on scheduling order.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> stream);

inline Rng make_rng(std::uint64_t master, std::initializer_list<std::uint64_t> stream)
{
    return Rng(derive_seed(master, stream));
}

} // namespace coldstart
