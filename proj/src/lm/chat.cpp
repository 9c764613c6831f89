#include "lm/chat.hpp"

#include <string>

namespace memsteer::lm {

namespace {

void check_body_tokens(std::span<const int> tokens, const ModelConfig& config, const char* which) {
    for (int t : tokens) {
        if (t < num_special_tokens || t >= config.vocab_size)
            fail(ErrorKind::contract,
                 std::string(which) + " text contains a special or out-of-range token id " +
                     std::to_string(t));
    }
}

}  // namespace

RenderedChat render_chat(const ChatTranscript& t, const ModelConfig& config) {
    config.validate();
    check_body_tokens(t.user_text, config, "user");
    check_body_tokens(t.assistant_text, config, "assistant");

    int prefix = 0;
    if (t.image.has_value()) {
        if (config.image_prefix_len == 0)
            fail(ErrorKind::contract,
                 "transcript carries an image but the model has no image prefix");
        if (t.image->features.size() != static_cast<size_t>(config.feature_dim))
            fail(ErrorKind::contract, "image feature length " +
                                          std::to_string(t.image->features.size()) +
                                          " != feature_dim " + std::to_string(config.feature_dim));
        prefix = config.image_prefix_len;
    }

    bool has_assistant = !t.assistant_text.empty();
    size_t needed = 1 + static_cast<size_t>(prefix) + 1 + t.user_text.size() + 1 +
                    t.assistant_text.size() + (has_assistant ? 1 : 0);
    if (needed > static_cast<size_t>(config.max_seq_len))
        fail(ErrorKind::overflow, "rendered transcript needs " + std::to_string(needed) +
                                      " tokens but max_seq_len is " +
                                      std::to_string(config.max_seq_len));

    RenderedChat out;
    out.tokens.reserve(needed);
    out.tokens.push_back(tok_bos);
    for (int i = 0; i < prefix; ++i) out.tokens.push_back(tok_img);
    out.tokens.push_back(tok_user);
    out.tokens.insert(out.tokens.end(), t.user_text.begin(), t.user_text.end());
    out.tokens.push_back(tok_assistant);
    out.assistant_begin = out.tokens.size();
    out.tokens.insert(out.tokens.end(), t.assistant_text.begin(), t.assistant_text.end());
    out.assistant_end = out.tokens.size();
    if (has_assistant) out.tokens.push_back(tok_eos);

    if (t.image.has_value()) {
        out.sample_id = t.image->id;
        out.image_features = t.image->features;
    }
    return out;
}

std::vector<int> extract_assistant(std::span<const int> tokens) {
    size_t i = 0;
    while (i < tokens.size() && tokens[i] != tok_assistant) ++i;
    if (i == tokens.size()) fail(ErrorKind::contract, "no <assistant> marker in token sequence");
    std::vector<int> out;
    for (++i; i < tokens.size() && tokens[i] != tok_eos; ++i) out.push_back(tokens[i]);
    return out;
}

}  // namespace memsteer::lm
