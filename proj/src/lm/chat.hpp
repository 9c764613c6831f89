#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lm/config.hpp"

namespace memsteer::lm {

struct ImageInput {
    std::string id;
    std::vector<double> features;
};

// A chat turn: optional image, user prompt, optional assistant reply.
// An empty assistant list renders a generation prompt (no <eos>).
struct ChatTranscript {
    std::optional<ImageInput> image;
    std::vector<int> user_text;
    std::vector<int> assistant_text;
};

struct RenderedChat {
    std::vector<int> tokens;
    size_t assistant_begin = 0;  // first assistant content position
    size_t assistant_end = 0;    // one past the last content token (<eos> excluded)
    std::string sample_id;
    std::vector<double> image_features;  // empty when the transcript has no image

    size_t assistant_len() const { return assistant_end - assistant_begin; }
};

// [<bos>][<img> x P][<user>]user...[<assistant>]assistant...[<eos> if assistant nonempty]
// Deterministic; throws overflow with required vs available lengths.
RenderedChat render_chat(const ChatTranscript& t, const ModelConfig& config);

// Recover the assistant content tokens from a rendered sequence.
std::vector<int> extract_assistant(std::span<const int> tokens);

}  // namespace memsteer::lm
