#include "steer/contrast.hpp"

#include <fstream>

#include <json.hpp>

#include "util/error.hpp"

namespace memsteer::steer {

using nlohmann::json;

Prompts default_prompts(const lm::Vocab& vocab) {
    Prompts p;
    p.memorability = vocab.encode(memorability_prompt_text);
    p.transform = vocab.encode(transform_prompt_text);
    return p;
}

std::vector<ContrastPair> build_contrast_set(std::span<const bench::Scene> train_scenes,
                                             const bench::TeacherOracle& teacher,
                                             const lm::Model& student, const lm::Vocab& vocab,
                                             const bench::FeedbackGrammar& grammar,
                                             const Prompts& prompts, const lm::GenParams& gen,
                                             ContrastBuildStats* stats) {
    ContrastBuildStats local;
    ContrastBuildStats& st = stats ? *stats : local;
    st = {};
    st.scenes_in = train_scenes.size();

    auto mask = grammar.mask();
    std::vector<ContrastPair> pairs;
    for (const auto& scene : train_scenes) {
        auto ranked = bench::rank_and_pair(scene);
        if (!ranked) {
            st.skipped_small += 1;
            continue;
        }
        if (ranked->degenerate) st.degenerate += 1;

        auto aware_actions = teacher.elicit(*ranked->source, *ranked->dest, prompts.transform);
        if (aware_actions.empty()) {
            st.dropped_empty_teacher += 1;
            continue;
        }

        ContrastPair pair;
        pair.scene_id = scene.id;
        pair.source = *ranked->source;
        pair.prompt = prompts.memorability;
        pair.aware_feedback = grammar.render_tokens(aware_actions);

        lm::ChatTranscript t;
        t.image = lm::ImageInput{pair.source.id, pair.source.features};
        t.user_text = prompts.memorability;
        auto rendered = lm::render_chat(t, student.config);
        pair.neutral_feedback = lm::generate(student, rendered, gen, &mask);
        if (pair.neutral_feedback.empty())
            fail(ErrorKind::contract,
                 "student produced empty neutral feedback for scene " + scene.id +
                     " (generation budget too small?)");
        pairs.push_back(std::move(pair));
    }
    if (pairs.empty())
        fail(ErrorKind::contract, "no usable scenes: every scene was skipped or dropped");
    st.pairs = pairs.size();
    return pairs;
}

void write_contrast_jsonl(const std::filesystem::path& path, std::span<const ContrastPair> pairs,
                          const lm::Vocab& vocab) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::not_found, "cannot open " + path.string() + " for writing");
    for (const auto& p : pairs) {
        json line = {{"scene_id", p.scene_id},
                     {"source_id", p.source.id},
                     {"prompt", vocab.decode(p.prompt)},
                     {"aware", vocab.decode(p.aware_feedback)},
                     {"neutral", vocab.decode(p.neutral_feedback)}};
        out << line.dump() << '\n';
    }
    if (!out) fail(ErrorKind::internal, "write failed: " + path.string());
}

std::vector<ContrastPair> read_contrast_jsonl(const std::filesystem::path& path,
                                              const lm::Vocab& vocab, const bench::World& world) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::not_found, "cannot open " + path.string());
    std::vector<ContrastPair> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded())
            fail(ErrorKind::schema, "line " + std::to_string(line_no) + ": invalid JSON");
        for (const char* field : {"scene_id", "source_id", "prompt", "aware", "neutral"}) {
            if (!j.contains(field))
                fail(ErrorKind::schema, "line " + std::to_string(line_no) +
                                            ": missing field '" + field + "'");
        }
        ContrastPair p;
        p.scene_id = j.at("scene_id").get<std::string>();
        std::string source_id = j.at("source_id").get<std::string>();
        const bench::ImageRecord* img = world.find_image(source_id);
        if (!img)
            fail(ErrorKind::not_found,
                 "line " + std::to_string(line_no) + ": image '" + source_id + "' not in world");
        p.source = *img;
        p.prompt = vocab.encode(j.at("prompt").get<std::string>());
        p.aware_feedback = vocab.encode(j.at("aware").get<std::string>());
        p.neutral_feedback = vocab.encode(j.at("neutral").get<std::string>());
        if (p.aware_feedback.empty() || p.neutral_feedback.empty())
            fail(ErrorKind::schema,
                 "line " + std::to_string(line_no) + ": empty feedback text");
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace memsteer::steer
