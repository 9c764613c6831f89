#pragma once

#include <filesystem>

#include "bench/dataset_io.hpp"
#include "bench/feedback.hpp"
#include "bench/world.hpp"
#include "lm/model.hpp"

namespace memsteer::steer {

// Fixed prompt wordings used across the pipeline; pre-spaced for the
// word-level tokenizer.
inline constexpr std::string_view memorability_prompt_text =
    "determine the actions required to improve the memorability of this image";
inline constexpr std::string_view transform_prompt_text =
    "determine the actions required to transform the source image into the destination image";
inline constexpr std::string_view probe_prompt_text =
    "is this image memorable ? output only yes or no .";

struct Prompts {
    std::vector<int> memorability;  // student-facing feedback prompt
    std::vector<int> transform;     // teacher elicitation prompt
};
Prompts default_prompts(const lm::Vocab& vocab);

// Matched feedback texts for one scene: the teacher's destination-aware
// actions against the student's default reply to the same image and prompt.
struct ContrastPair {
    std::string scene_id;
    bench::ImageRecord source;
    std::vector<int> prompt;
    std::vector<int> aware_feedback;
    std::vector<int> neutral_feedback;
};

struct ContrastBuildStats {
    size_t scenes_in = 0;
    size_t pairs = 0;
    size_t skipped_small = 0;          // scenes with < 2 scored images
    size_t dropped_empty_teacher = 0;  // teacher produced no actions
    size_t degenerate = 0;             // all-tied scenes (kept)
};

// One pair per usable scene: source = least memorable image, destination =
// most memorable; aware feedback from the teacher on (source, dest), neutral
// feedback greedily generated by the student on the source alone under the
// feedback grammar.
std::vector<ContrastPair> build_contrast_set(std::span<const bench::Scene> train_scenes,
                                             const bench::TeacherOracle& teacher,
                                             const lm::Model& student, const lm::Vocab& vocab,
                                             const bench::FeedbackGrammar& grammar,
                                             const Prompts& prompts, const lm::GenParams& gen,
                                             ContrastBuildStats* stats = nullptr);

// JSONL: {"scene_id":..., "source_id":..., "prompt":..., "aware":..., "neutral":...}
void write_contrast_jsonl(const std::filesystem::path& path, std::span<const ContrastPair> pairs,
                          const lm::Vocab& vocab);

// Texts are re-encoded and source images resolved against the world by id.
std::vector<ContrastPair> read_contrast_jsonl(const std::filesystem::path& path,
                                              const lm::Vocab& vocab, const bench::World& world);

}  // namespace memsteer::steer
