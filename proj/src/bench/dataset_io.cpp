#include "bench/dataset_io.hpp"

#include <fstream>
#include <map>

#include <json.hpp>

#include "util/error.hpp"

namespace memsteer::bench {

using nlohmann::json;

namespace {

[[noreturn]] void line_fail(size_t line_no, const std::string& what) {
    fail(ErrorKind::schema, "line " + std::to_string(line_no) + ": " + what);
}

json require(const json& j, const char* field, size_t line_no) {
    if (!j.contains(field)) line_fail(line_no, std::string("missing field '") + field + "'");
    return j.at(field);
}

}  // namespace

void write_scenes_jsonl(const std::filesystem::path& path,
                        const std::vector<std::string>& attributes,
                        std::span<const Scene> scenes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::not_found, "cannot open " + path.string() + " for writing");
    for (const auto& scene : scenes) {
        for (const auto& img : scene.images) {
            json feats = json::object();
            for (size_t k = 0; k < attributes.size(); ++k) feats[attributes[k]] = img.features[k];
            json line = {{"scene_id", img.scene_id}, {"image_id", img.id}, {"features", feats}};
            if (img.memorability.has_value()) line["memorability"] = *img.memorability;
            out << line.dump() << '\n';
        }
    }
    if (!out) fail(ErrorKind::internal, "write failed: " + path.string());
}

void for_each_scene_record(const std::filesystem::path& path,
                           const std::vector<std::string>& attributes,
                           const std::function<void(size_t, ImageRecord&&)>& visit) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::not_found, "cannot open " + path.string());
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) line_fail(line_no, "invalid JSON");

        ImageRecord rec;
        rec.scene_id = require(j, "scene_id", line_no).get<std::string>();
        rec.id = require(j, "image_id", line_no).get<std::string>();
        json feats = require(j, "features", line_no);
        rec.features.resize(attributes.size());
        for (size_t k = 0; k < attributes.size(); ++k) {
            if (!feats.contains(attributes[k]))
                line_fail(line_no, "features missing attribute '" + attributes[k] + "'");
            double v = feats.at(attributes[k]).get<double>();
            if (!(v >= 0.0 && v <= 1.0))
                line_fail(line_no, "attribute '" + attributes[k] + "' outside [0,1]");
            rec.features[k] = v;
        }
        if (j.contains("memorability")) {
            double m = j.at("memorability").get<double>();
            if (!(m >= 0.0 && m <= 1.0)) line_fail(line_no, "memorability outside [0,1]");
            rec.memorability = m;
        }
        visit(line_no, std::move(rec));
    }
}

std::vector<Scene> read_scenes_jsonl(const std::filesystem::path& path,
                                     const std::vector<std::string>& attributes) {
    std::vector<Scene> scenes;
    std::map<std::string, size_t> index;
    for_each_scene_record(path, attributes, [&](size_t, ImageRecord&& rec) {
        auto [it, inserted] = index.emplace(rec.scene_id, scenes.size());
        if (inserted) scenes.push_back(Scene{rec.scene_id, {}});
        scenes[it->second].images.push_back(std::move(rec));
    });
    return scenes;
}

std::string_view split_name(SplitTag s) { return s == SplitTag::train ? "train" : "test"; }

SplitTag split_from_name(std::string_view name) {
    if (name == "train") return SplitTag::train;
    if (name == "test") return SplitTag::test;
    fail(ErrorKind::schema, "unknown split '" + std::string(name) + "'");
}

void write_pairs_jsonl(const std::filesystem::path& path, std::span<const PairRecord> pairs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::not_found, "cannot open " + path.string() + " for writing");
    for (const auto& p : pairs) {
        json fb = json::array();
        for (const auto& a : p.feedback)
            fb.push_back({{"verb", std::string(verb_name(a.verb))},
                          {"attribute", a.attribute},
                          {"magnitude", a.magnitude}});
        json line = {{"scene_id", p.scene_id},
                     {"source_id", p.source_id},
                     {"dest_id", p.dest_id},
                     {"feedback", fb},
                     {"split", std::string(split_name(p.split))}};
        out << line.dump() << '\n';
    }
    if (!out) fail(ErrorKind::internal, "write failed: " + path.string());
}

std::vector<PairRecord> read_pairs_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::not_found, "cannot open " + path.string());
    std::vector<PairRecord> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) line_fail(line_no, "invalid JSON");
        PairRecord p;
        p.scene_id = require(j, "scene_id", line_no).get<std::string>();
        p.source_id = require(j, "source_id", line_no).get<std::string>();
        p.dest_id = require(j, "dest_id", line_no).get<std::string>();
        p.split = split_from_name(require(j, "split", line_no).get<std::string>());
        for (const auto& a : require(j, "feedback", line_no)) {
            FeedbackAction act;
            act.verb = verb_from_name(require(a, "verb", line_no).get<std::string>());
            act.attribute = require(a, "attribute", line_no).get<std::string>();
            act.magnitude = quantize_magnitude(require(a, "magnitude", line_no).get<double>());
            p.feedback.push_back(std::move(act));
        }
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace memsteer::bench
