#pragma once

#include <filesystem>
#include <functional>

#include "bench/feedback.hpp"
#include "bench/world.hpp"

namespace memsteer::bench {

inline constexpr int dataset_schema_version = 1;

// Scenes JSONL: one image per line,
//   {"scene_id":..., "image_id":..., "features":{name:value,...}, "memorability":...}
void write_scenes_jsonl(const std::filesystem::path& path,
                        const std::vector<std::string>& attributes,
                        std::span<const Scene> scenes);

// Streaming reader; the visitor sees one record at a time and the file is
// never materialized in memory. Malformed lines raise schema errors carrying
// the line number.
void for_each_scene_record(const std::filesystem::path& path,
                           const std::vector<std::string>& attributes,
                           const std::function<void(size_t line_no, ImageRecord&&)>& visit);

// Grouped by scene_id in first-appearance order.
std::vector<Scene> read_scenes_jsonl(const std::filesystem::path& path,
                                     const std::vector<std::string>& attributes);

enum class SplitTag { train, test };
std::string_view split_name(SplitTag s);
SplitTag split_from_name(std::string_view name);

// Pairs JSONL: {"scene_id":..., "source_id":..., "dest_id":...,
//               "feedback":[{"verb":...,"attribute":...,"magnitude":...}], "split":...}
struct PairRecord {
    std::string scene_id;
    std::string source_id;
    std::string dest_id;
    std::vector<FeedbackAction> feedback;
    SplitTag split = SplitTag::train;
};

void write_pairs_jsonl(const std::filesystem::path& path, std::span<const PairRecord> pairs);
std::vector<PairRecord> read_pairs_jsonl(const std::filesystem::path& path);

}  // namespace memsteer::bench
