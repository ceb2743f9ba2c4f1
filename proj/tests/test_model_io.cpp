#include "coldstart/errors.hpp"
#include "coldstart/model_io.hpp"
#include "coldstart/synth.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cstring>
#include <filesystem>

using namespace coldstart;
using nlohmann::json;

namespace {

std::string temp_path(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / "coldstart_model_io";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b)
{
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

} // namespace

TEST_CASE("group model round trip is bit-exact")
{
    Rng rng(1);
    for (int trial = 0; trial < 10; ++trial) {
        auto m = oracle::random_model(1 + trial % 5, 7 + trial, rng);
        // awkward values: tiny, huge, negative, non-terminating binary fractions
        std::vector<double> mu = m.means();
        mu[0] = 0.1;
        mu[mu.size() - 1] = -1.0 / 3.0;
        m = GroupModel(m.num_groups(), m.num_items(), mu, m.variances(), {-10, 10}, 1e-7);
        m.metadata["note"] = "x";
        m.group_labels.assign(m.num_groups(), "g");
        const std::string path = temp_path("model.json");
        save_model(path, m, json{{"seed", trial}});
        const auto back = load_model(path);
        CHECK(same_bits(back.means(), m.means()));
        CHECK(same_bits(back.variances(), m.variances()));
        CHECK(back.scale() == m.scale());
        CHECK(back.variance_floor() == m.variance_floor());
        CHECK(back.metadata == m.metadata);
        CHECK(back.group_labels == m.group_labels);
        CHECK(load_model_provenance(path)["seed"] == trial);

        // saving the loaded model reproduces the file byte for byte
        const std::string again = temp_path("model2.json");
        save_model(again, back, json{{"seed", trial}});
        CHECK(read_text_file(path) == read_text_file(again));
    }
}

TEST_CASE("malformed group models are rejected")
{
    Rng rng(2);
    const auto good = model_to_json(oracle::random_model(2, 3, rng));
    CHECK_NOTHROW(model_from_json(good));

    auto wrong_format = good;
    wrong_format["format"] = "something-else";
    CHECK_THROWS_AS(model_from_json(wrong_format), ParseError);

    auto wrong_version = good;
    wrong_version["version"] = 99;
    CHECK_THROWS_AS(model_from_json(wrong_version), ParseError);

    auto short_mu = good;
    short_mu["mu"].erase(0);
    CHECK_THROWS(model_from_json(short_mu));

    auto missing = good;
    missing.erase("sigma2");
    CHECK_THROWS_AS(model_from_json(missing), ParseError);

    const std::string path = temp_path("garbage.json");
    write_text_file(path, "{ not json");
    CHECK_THROWS_AS(load_model(path), ParseError);
    CHECK_THROWS_AS(load_model(temp_path("does-not-exist.json")), ParseError);
}

TEST_CASE("decision tree round trip")
{
    Rng mrng(3);
    const auto m = synth_model(4, 20, 2.0, mrng);
    Rng rng(4);
    TrainConfig cfg;
    cfg.users_per_group = 200;
    cfg.max_depth = 8;
    const auto tree = train_tree(m, cfg, rng);
    const std::string path = temp_path("tree.json");
    save_tree(path, tree);
    const auto back = load_tree(path);
    REQUIRE(back.nodes().size() == tree.nodes().size());
    CHECK(back.num_groups() == tree.num_groups());
    CHECK(back.depth() == tree.depth());
    for (std::size_t i = 0; i < tree.nodes().size(); ++i) {
        const auto& a = tree.node(i);
        const auto& b = back.node(i);
        CHECK(a.leaf == b.leaf);
        CHECK(a.split_item == b.split_item);
        CHECK(std::memcmp(&a.threshold, &b.threshold, sizeof(double)) == 0);
        CHECK(a.left == b.left);
        CHECK(a.right == b.right);
        CHECK(a.majority == b.majority);
        CHECK(a.samples == b.samples);
    }

    auto doc = tree_to_json(tree);
    doc["nodes"][0]["left"] = 0; // a cycle back to the root
    CHECK_THROWS(tree_from_json(doc));
    auto model_doc = model_to_json(m);
    CHECK_THROWS_AS(tree_from_json(model_doc), ParseError);
}
