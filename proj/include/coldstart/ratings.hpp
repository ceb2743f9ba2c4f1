#pragma once

#include "coldstart/group_model.hpp"
#include "coldstart/rng.hpp"

#include <istream>
#include <string>
#include <unordered_map>
#include <vector>

namespace coldstart {

struct RatingTriple {
    std::size_t user; // dense row index
    std::size_t item; // dense column index
    double rating;
};

/// Explicit ratings with dense user/item index maps built at load time.
struct RatingsTable {
    std::vector<RatingTriple> triples;
    std::vector<std::string> user_ids;
    std::vector<std::string> item_ids;
    std::unordered_map<std::string, std::size_t> user_index;
    std::unordered_map<std::string, std::size_t> item_index;
    RatingScale scale;
    std::size_t duplicates_dropped = 0;

    std::size_t num_users() const { return user_ids.size(); }
    std::size_t num_items() const { return item_ids.size(); }
    std::size_t size() const { return triples.size(); }

    /// Appends a rating, registering unseen user/item ids. No duplicate check.
    void add(const std::string& user_id, const std::string& item_id, double rating);
};

/// Reads `user_id,item_id,rating` CSV (header required when the file is not
/// empty). Rows are parsed one at a time. Throws ParseError with the line
/// number on malformed rows or ratings outside `scale`.
RatingsTable load_ratings(std::istream& in, RatingScale scale);
RatingsTable load_ratings(const std::string& path, RatingScale scale);

/// Per-user split into (train, holdout); a `holdout_fraction` share of users
/// goes to the holdout table. Item columns are shared by both.
std::pair<RatingsTable, RatingsTable> split_users(const RatingsTable& table, double holdout_fraction, Rng& rng);

} // namespace coldstart
