#include "coldstart/model_io.hpp"

#include "coldstart/errors.hpp"

#include <fstream>
#include <sstream>

namespace coldstart {

using nlohmann::json;

namespace {

void expect_format(const json& doc, const char* format)
{
    if (!doc.is_object() || !doc.contains("format") || doc["format"] != format)
        throw ParseError(std::string("not a ") + format + " document");
    if (doc.value("version", 0) != kFormatVersion)
        throw ParseError(std::string("unsupported ") + format + " version");
}

json parse_file(const std::string& path)
{
    try {
        return json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw ParseError("'" + path + "': " + e.what());
    }
}

} // namespace

json model_to_json(const GroupModel& model, const json& provenance)
{
    json doc;
    doc["format"] = kModelFormat;
    doc["version"] = kFormatVersion;
    doc["num_groups"] = model.num_groups();
    doc["num_items"] = model.num_items();
    doc["rating_scale"] = {model.scale().min, model.scale().max};
    doc["variance_floor"] = model.variance_floor();
    doc["mu"] = model.means();
    doc["sigma2"] = model.variances();
    doc["item_labels"] = model.item_labels;
    doc["group_labels"] = model.group_labels;
    doc["metadata"] = model.metadata;
    if (!provenance.is_null())
        doc["provenance"] = provenance;
    return doc;
}

GroupModel model_from_json(const json& doc)
{
    expect_format(doc, kModelFormat);
    try {
        const auto scale = doc.at("rating_scale").get<std::vector<double>>();
        if (scale.size() != 2)
            throw ParseError("rating_scale must have two entries");
        GroupModel model(doc.at("num_groups").get<std::size_t>(), doc.at("num_items").get<std::size_t>(),
            doc.at("mu").get<std::vector<double>>(), doc.at("sigma2").get<std::vector<double>>(),
            RatingScale{scale[0], scale[1]}, doc.at("variance_floor").get<double>());
        model.item_labels = doc.value("item_labels", std::vector<std::string>{});
        model.group_labels = doc.value("group_labels", std::vector<std::string>{});
        model.metadata = doc.value("metadata", std::map<std::string, std::string>{});
        return model;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed group model: ") + e.what());
    }
}

void save_model(const std::string& path, const GroupModel& model, const json& provenance)
{
    write_text_file(path, model_to_json(model, provenance).dump(2) + "\n");
}

GroupModel load_model(const std::string& path)
{
    return model_from_json(parse_file(path));
}

json load_model_provenance(const std::string& path)
{
    const json doc = parse_file(path);
    expect_format(doc, kModelFormat);
    return doc.value("provenance", json());
}

json tree_to_json(const DecisionTree& tree)
{
    json doc;
    doc["format"] = kTreeFormat;
    doc["version"] = kFormatVersion;
    doc["num_groups"] = tree.num_groups();
    doc["max_depth"] = tree.max_depth();
    json nodes = json::array();
    for (const auto& n : tree.nodes()) {
        json j;
        j["majority"] = n.majority;
        j["samples"] = n.samples;
        if (n.leaf) {
            j["leaf"] = true;
        } else {
            j["leaf"] = false;
            j["item"] = n.split_item;
            j["threshold"] = n.threshold;
            j["left"] = n.left;
            j["right"] = n.right;
        }
        nodes.push_back(std::move(j));
    }
    doc["nodes"] = std::move(nodes);
    return doc;
}

DecisionTree tree_from_json(const json& doc)
{
    expect_format(doc, kTreeFormat);
    try {
        std::vector<TreeNode> nodes;
        for (const auto& j : doc.at("nodes")) {
            TreeNode n;
            n.leaf = j.at("leaf").get<bool>();
            n.majority = j.at("majority").get<std::size_t>();
            n.samples = j.value("samples", std::size_t{0});
            if (!n.leaf) {
                n.split_item = j.at("item").get<std::size_t>();
                n.threshold = j.at("threshold").get<double>();
                n.left = j.at("left").get<std::size_t>();
                n.right = j.at("right").get<std::size_t>();
            }
            nodes.push_back(n);
        }
        return DecisionTree(std::move(nodes), doc.at("num_groups").get<std::size_t>(),
            doc.at("max_depth").get<std::size_t>());
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed decision tree: ") + e.what());
    }
}

void save_tree(const std::string& path, const DecisionTree& tree)
{
    write_text_file(path, tree_to_json(tree).dump(2) + "\n");
}

DecisionTree load_tree(const std::string& path)
{
    return tree_from_json(parse_file(path));
}

void write_text_file(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write '" + path + "'");
    out << text;
    if (!out)
        throw std::runtime_error("write to '" + path + "' failed");
}

std::string read_text_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace coldstart
