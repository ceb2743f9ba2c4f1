#include "coldstart/ratings.hpp"

#include "coldstart/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

namespace coldstart {

namespace {

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_fields(const std::string& line)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, comma - start)));
        if (comma == std::string::npos)
            return out;
        start = comma + 1;
    }
}

bool parse_double(const std::string& s, double& out)
{
    if (s.empty())
        return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (*first == '+')
        ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && std::isfinite(out);
}

} // namespace

void RatingsTable::add(const std::string& user_id, const std::string& item_id, double rating)
{
    auto [uit, new_user] = user_index.try_emplace(user_id, user_ids.size());
    if (new_user)
        user_ids.push_back(user_id);
    auto [iit, new_item] = item_index.try_emplace(item_id, item_ids.size());
    if (new_item)
        item_ids.push_back(item_id);
    triples.push_back({uit->second, iit->second, rating});
}

RatingsTable load_ratings(std::istream& in, RatingScale scale)
{
    RatingsTable table;
    table.scale = scale;
    std::set<std::pair<std::size_t, std::size_t>> seen;
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string body = trim(line);
        if (body.empty())
            continue;
        const auto fields = split_fields(body);
        if (!header_seen) {
            header_seen = true;
            if (fields.size() != 3 || fields[0] != "user_id" || fields[1] != "item_id" || fields[2] != "rating")
                throw ParseError("expected header 'user_id,item_id,rating'", lineno);
            continue;
        }
        if (fields.size() != 3)
            throw ParseError("expected 3 fields, found " + std::to_string(fields.size()), lineno);
        if (fields[0].empty() || fields[1].empty())
            throw ParseError("empty user or item id", lineno);
        double rating = 0.0;
        if (!parse_double(fields[2], rating))
            throw ParseError("rating '" + fields[2] + "' is not a number", lineno);
        if (!scale.contains(rating))
            throw ParseError("rating " + fields[2] + " outside scale [" + std::to_string(scale.min) + ", " +
                                 std::to_string(scale.max) + "]",
                lineno);

        const auto u = table.user_index.find(fields[0]);
        const auto v = table.item_index.find(fields[1]);
        if (u != table.user_index.end() && v != table.item_index.end() && seen.count({u->second, v->second})) {
            ++table.duplicates_dropped;
            continue;
        }
        table.add(fields[0], fields[1], rating);
        seen.insert({table.triples.back().user, table.triples.back().item});
    }
    return table;
}

RatingsTable load_ratings(const std::string& path, RatingScale scale)
{
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open ratings file '" + path + "'");
    return load_ratings(in, scale);
}

std::pair<RatingsTable, RatingsTable> split_users(const RatingsTable& table, double holdout_fraction, Rng& rng)
{
    if (!(holdout_fraction >= 0.0 && holdout_fraction <= 1.0))
        throw PreconditionError("holdout fraction must lie in [0, 1]");
    std::vector<std::size_t> order(table.num_users());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_hold = static_cast<std::size_t>(holdout_fraction * static_cast<double>(order.size()) + 0.5);
    std::vector<bool> held(table.num_users(), false);
    for (std::size_t i = 0; i < n_hold; ++i)
        held[order[i]] = true;

    RatingsTable train, holdout;
    for (auto* t : {&train, &holdout}) {
        t->scale = table.scale;
        // keep identical item columns in both halves
        for (const auto& id : table.item_ids) {
            t->item_index.emplace(id, t->item_ids.size());
            t->item_ids.push_back(id);
        }
    }
    for (const auto& tr : table.triples)
        (held[tr.user] ? holdout : train).add(table.user_ids[tr.user], table.item_ids[tr.item], tr.rating);
    return {std::move(train), std::move(holdout)};
}

} // namespace coldstart
