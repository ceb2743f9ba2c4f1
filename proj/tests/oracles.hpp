#pragma once

// Independent reference computations for the tests. Everything here is
// written directly from the defining formulas, in direct (not log) space and
// without sharing code with the library beyond the GroupModel accessors.

#include "coldstart/group_model.hpp"
#include "coldstart/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using coldstart::GroupModel;
using coldstart::RatingHistory;

inline double gaussian_pdf(double r, double mu, double var)
{
    return std::exp(-(r - mu) * (r - mu) / (2.0 * var)) / std::sqrt(2.0 * std::numbers::pi * var);
}

/// Bayes rule with the full Gaussian density product and a uniform prior.
inline std::vector<double> direct_posterior(const GroupModel& m, const std::vector<coldstart::Observation>& obs)
{
    std::vector<double> w(m.num_groups(), 1.0 / static_cast<double>(m.num_groups()));
    for (std::size_t g = 0; g < m.num_groups(); ++g)
        for (const auto& o : obs)
            w[g] *= oracle::gaussian_pdf(o.rating, m.mean(g, o.item), m.variance(g, o.item));
    double z = 0.0;
    for (double x : w)
        z += x;
    for (double& x : w)
        x /= z;
    return w;
}

inline std::vector<double> direct_posterior(const GroupModel& m, const RatingHistory& h)
{
    return oracle::direct_posterior(m, h.observations());
}

/// Selection-sort ranking of unrated items by mu(g, .) descending, lowest index on ties.
inline std::vector<std::size_t> selection_rank(const GroupModel& m, const std::vector<bool>& rated, std::size_t g)
{
    std::vector<bool> taken = rated;
    std::vector<std::size_t> out;
    for (;;) {
        bool any = false;
        std::size_t best = 0;
        for (std::size_t v = 0; v < m.num_items(); ++v) {
            if (taken[v])
                continue;
            if (!any || m.mean(g, v) > m.mean(g, best)) {
                best = v;
                any = true;
            }
        }
        if (!any)
            return out;
        taken[best] = true;
        out.push_back(best);
    }
}

inline double future_reward(const GroupModel& m, const std::vector<bool>& rated, std::size_t g, double beta)
{
    const auto rank = oracle::selection_rank(m, rated, g);
    double s = 0.0;
    for (std::size_t i = 0; i < rank.size(); ++i)
        s += std::pow(beta, static_cast<double>(i + 1)) * m.mean(g, rank[i]);
    return s;
}

inline double future_loss(const GroupModel& m, const std::vector<bool>& rated, std::size_t g, std::size_t h, double beta)
{
    const auto rg = oracle::selection_rank(m, rated, g);
    const auto rh = oracle::selection_rank(m, rated, h);
    double s = 0.0;
    for (std::size_t i = 0; i < rg.size(); ++i)
        s += std::pow(beta, static_cast<double>(i + 1)) * std::abs(m.mean(g, rg[i]) - m.mean(g, rh[i]));
    return s;
}

inline double future_regret(
    const GroupModel& m, const std::vector<bool>& rated, const std::vector<double>& post, std::size_t h, double beta)
{
    double s = 0.0;
    for (std::size_t g = 0; g < m.num_groups(); ++g)
        s += post[g] * oracle::future_loss(m, rated, g, h, beta);
    return s;
}

/// Every term of the combined selection score recomputed from scratch.
inline double lba_score(const GroupModel& m, const RatingHistory& h, std::size_t v, double beta)
{
    const auto post = oracle::direct_posterior(m, h);
    const auto rated = h.rated_mask(m.num_items());
    double score = 0.0;
    for (std::size_t g = 0; g < m.num_groups(); ++g) {
        auto extended = h.observations();
        extended.push_back({v, m.mean(g, v)});
        const double hyp = oracle::direct_posterior(m, extended)[g];
        const double reg = oracle::future_regret(m, rated, post, g, beta);
        score += post[g] * hyp * (reg * reg + m.mean(g, v));
    }
    return score;
}

/// Unrated item with the highest lba_score; the lowest index among scores
/// within 1e-12 (relative to max(1, |max|)) of the maximum.
inline std::size_t lba_argmax(const GroupModel& m, const RatingHistory& h, double beta)
{
    std::vector<double> score(m.num_items(), -HUGE_VAL);
    double top = -HUGE_VAL;
    for (std::size_t v = 0; v < m.num_items(); ++v) {
        if (h.contains(v))
            continue;
        score[v] = oracle::lba_score(m, h, v, beta);
        top = std::max(top, score[v]);
    }
    const double cut = top - 1e-12 * std::max(1.0, std::abs(top));
    for (std::size_t v = 0; v < m.num_items(); ++v)
        if (!h.contains(v) && score[v] >= cut)
            return v;
    return 0;
}

/// E[P(G=g | D, v, R); R ~ N(mu(g,v), sigma^2(g,v))] by composite Simpson on mu +- 6 sigma.
inline double expected_posterior_quadrature(const GroupModel& m, const RatingHistory& h, std::size_t v, std::size_t g,
    int intervals = 20000)
{
    const double mu = m.mean(g, v);
    const double sd = std::sqrt(m.variance(g, v));
    const double a = mu - 6 * sd;
    const double b = mu + 6 * sd;
    const double step = (b - a) / intervals;
    auto f = [&](double r) {
        auto ext = h.observations();
        ext.push_back({v, r});
        return oracle::gaussian_pdf(r, mu, m.variance(g, v)) * oracle::direct_posterior(m, ext)[g];
    };
    double s = f(a) + f(b);
    for (int i = 1; i < intervals; ++i)
        s += f(a + i * step) * (i % 2 ? 4.0 : 2.0);
    return s * step / 3.0;
}

/// Regret against the best n-subset found by enumerating every subset.
inline double subset_regret(const GroupModel& m, std::size_t g, const std::vector<std::size_t>& chosen, std::size_t n)
{
    const std::size_t N = m.num_items();
    double best = -1e300;
    for (std::size_t mask = 0; mask < (std::size_t{1} << N); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcountll(mask)) != n)
            continue;
        double s = 0.0;
        for (std::size_t v = 0; v < N; ++v)
            if (mask >> v & 1)
                s += m.mean(g, v);
        best = std::max(best, s);
    }
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        c += m.mean(g, chosen[i]);
    return best - c;
}

/// Means uniform on [1, 5], variances uniform on [0.25, 1.5].
inline GroupModel random_model(std::size_t groups, std::size_t items, coldstart::Rng& rng)
{
    std::uniform_real_distribution<double> mean(1.0, 5.0), var(0.25, 1.5);
    std::vector<double> mu(groups * items), s2(groups * items);
    for (auto& x : mu)
        x = mean(rng);
    for (auto& x : s2)
        x = var(rng);
    return GroupModel(groups, items, mu, s2);
}

inline GroupModel identical_groups(std::size_t groups, std::size_t items)
{
    std::vector<double> mu, s2;
    for (std::size_t g = 0; g < groups; ++g)
        for (std::size_t v = 0; v < items; ++v) {
            mu.push_back(1.0 + 0.5 * static_cast<double>(v % 7));
            s2.push_back(0.5 + 0.1 * static_cast<double>(v % 3));
        }
    return GroupModel(groups, items, mu, s2);
}

/// 2 groups, 1 item, mu = (0, 1), sigma^2 = (1, 1).
inline GroupModel two_group_unit()
{
    return GroupModel(2, 1, {0.0, 1.0}, {1.0, 1.0}, {-5.0, 5.0});
}

} // namespace oracle
