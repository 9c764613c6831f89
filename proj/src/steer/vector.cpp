#include "steer/vector.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>

#include "util/binio.hpp"
#include "util/rng.hpp"

namespace memsteer::steer {

std::string_view pooling_name(Pooling p) {
    return p == Pooling::assistant_mean ? "assistant_mean" : "last_token";
}

Pooling pooling_from_name(std::string_view name) {
    if (name == "assistant_mean") return Pooling::assistant_mean;
    if (name == "last_token") return Pooling::last_token;
    fail(ErrorKind::schema, "unknown pooling '" + std::string(name) + "'");
}

lm::RenderedChat render_steering_input(const lm::ModelConfig& config,
                                       const bench::ImageRecord& image,
                                       std::span<const int> prompt,
                                       std::span<const int> feedback) {
    lm::ChatTranscript t;
    t.image = lm::ImageInput{image.id, image.features};
    t.user_text.assign(prompt.begin(), prompt.end());
    t.assistant_text.assign(feedback.begin(), feedback.end());
    return lm::render_chat(t, config);
}

std::vector<double> capture_pooled_activation(const lm::Model& m, const lm::RenderedChat& input,
                                              int layer, Pooling pooling) {
    if (input.assistant_len() == 0)
        fail(ErrorKind::contract, "capture requires a non-empty assistant span");
    lm::HookSpec hook;
    hook.layer = layer;
    hook.mode = lm::HookMode::capture;
    hook.positions = lm::HookPositions::assistant_span;
    hook.span_begin = input.assistant_begin;
    hook.span_end = input.assistant_end;
    auto result = lm::forward_chat(m, input, {&hook, 1});
    const auto& rec = result.captures.at(0);

    const size_t d = static_cast<size_t>(m.config.model_dim);
    if (pooling == Pooling::last_token) return rec.per_position.back().second;
    std::vector<double> mean(d, 0.0);
    for (const auto& [pos, vec] : rec.per_position)
        for (size_t i = 0; i < d; ++i) mean[i] += vec[i];
    const double inv = 1.0 / static_cast<double>(rec.per_position.size());
    for (auto& v : mean) v *= inv;
    return mean;
}

uint64_t contrast_dataset_hash(std::span<const ContrastPair> pairs) {
    // Order-independent: combine per-pair hashes with addition.
    uint64_t total = 0;
    for (const auto& p : pairs) {
        uint64_t h = fnv1a64(p.scene_id);
        h = fnv1a64(p.source.id, h);
        auto mix_tokens = [&h](std::span<const int> toks) {
            for (int t : toks) {
                uint32_t v = static_cast<uint32_t>(t);
                h = fnv1a64(&v, sizeof(v), h);
            }
        };
        mix_tokens(p.prompt);
        mix_tokens(p.aware_feedback);
        mix_tokens(p.neutral_feedback);
        total += h;
    }
    return total;
}

namespace {

std::vector<size_t> scene_order(std::span<const ContrastPair> pairs) {
    std::vector<size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (pairs[a].scene_id != pairs[b].scene_id) return pairs[a].scene_id < pairs[b].scene_id;
        return pairs[a].source.id < pairs[b].source.id;
    });
    return order;
}

void check_extract_inputs(std::span<const ContrastPair> pairs, const lm::Model& m, int layer) {
    if (pairs.empty()) fail(ErrorKind::contract, "steering extraction over an empty pair list");
    if (layer < 1 || layer > m.config.num_layers)
        fail(ErrorKind::contract, "steering layer " + std::to_string(layer) + " outside [1, " +
                                      std::to_string(m.config.num_layers) + "]");
    for (const auto& p : pairs)
        if (p.aware_feedback.empty() || p.neutral_feedback.empty())
            fail(ErrorKind::contract, "contrast pair for scene " + p.scene_id +
                                          " has empty feedback");
}

}  // namespace

SteeringVector extract_steering_vector(std::span<const ContrastPair> pairs, const lm::Model& m,
                                       int layer, Pooling pooling) {
    check_extract_inputs(pairs, m, layer);
    const size_t d = static_cast<size_t>(m.config.model_dim);

    SteeringVector out;
    out.layer = layer;
    out.pooling = pooling;
    out.variant = Variant::mean_of_diffs;
    out.num_pairs = static_cast<uint32_t>(pairs.size());
    out.dataset_hash = contrast_dataset_hash(pairs);
    out.seed = m.config.seed;
    out.direction.assign(d, 0.0);

    for (size_t idx : scene_order(pairs)) {
        const auto& p = pairs[idx];
        auto aware = capture_pooled_activation(
            m, render_steering_input(m.config, p.source, p.prompt, p.aware_feedback), layer,
            pooling);
        auto neutral = capture_pooled_activation(
            m, render_steering_input(m.config, p.source, p.prompt, p.neutral_feedback), layer,
            pooling);
        for (size_t i = 0; i < d; ++i) out.direction[i] += aware[i] - neutral[i];
    }
    const double inv = 1.0 / static_cast<double>(pairs.size());
    for (auto& v : out.direction) v *= inv;
    return out;
}

SteeringVector extract_diff_of_means(std::span<const ContrastPair> pairs, const lm::Model& m,
                                     int layer) {
    check_extract_inputs(pairs, m, layer);
    const size_t d = static_cast<size_t>(m.config.model_dim);

    std::vector<double> sum_aware(d, 0.0), sum_neutral(d, 0.0);
    size_t n_aware = 0, n_neutral = 0;

    for (size_t idx : scene_order(pairs)) {
        const auto& p = pairs[idx];
        for (int polarity = 0; polarity < 2; ++polarity) {
            const auto& feedback = polarity == 0 ? p.aware_feedback : p.neutral_feedback;
            auto input = render_steering_input(m.config, p.source, p.prompt, feedback);
            lm::HookSpec hook;
            hook.layer = layer;
            hook.mode = lm::HookMode::capture;
            hook.positions = lm::HookPositions::assistant_span;
            hook.span_begin = input.assistant_begin;
            hook.span_end = input.assistant_end;
            auto result = lm::forward_chat(m, input, {&hook, 1});
            auto& sum = polarity == 0 ? sum_aware : sum_neutral;
            auto& n = polarity == 0 ? n_aware : n_neutral;
            for (const auto& [pos, vec] : result.captures.at(0).per_position) {
                for (size_t i = 0; i < d; ++i) sum[i] += vec[i];
                n += 1;
            }
        }
    }

    SteeringVector out;
    out.layer = layer;
    out.pooling = Pooling::assistant_mean;
    out.variant = Variant::diff_of_means;
    out.num_pairs = static_cast<uint32_t>(pairs.size());
    out.dataset_hash = contrast_dataset_hash(pairs);
    out.seed = m.config.seed;
    out.direction.resize(d);
    for (size_t i = 0; i < d; ++i)
        out.direction[i] = sum_aware[i] / static_cast<double>(n_aware) -
                           sum_neutral[i] / static_cast<double>(n_neutral);
    return out;
}

namespace {
constexpr size_t vec_magic_len = sizeof(vector_magic);  // includes the trailing NUL
}

void save_vector(const SteeringVector& v, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::not_found, "cannot open " + path.string() + " for writing");
    write_bytes(out, vector_magic, vec_magic_len);
    write_u32(out, vector_format_version);
    write_u32(out, static_cast<uint32_t>(v.layer));
    write_u32(out, v.num_pairs);
    write_u8(out, static_cast<uint8_t>(v.pooling));
    write_u8(out, static_cast<uint8_t>(v.variant));
    write_u64(out, v.dataset_hash);
    write_i64(out, v.seed);
    write_u32(out, static_cast<uint32_t>(v.direction.size()));
    for (double x : v.direction) write_f64(out, x);
}

SteeringVector load_vector(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::not_found, "cannot open " + path.string());
    char magic[vec_magic_len];
    in.read(magic, vec_magic_len);
    if (static_cast<size_t>(in.gcount()) != vec_magic_len ||
        std::memcmp(magic, vector_magic, vec_magic_len) != 0)
        fail(ErrorKind::bad_magic, "not a steering vector file: " + path.string());
    uint32_t version = read_u32(in, "vector format version");
    if (version != vector_format_version)
        fail(ErrorKind::bad_version, "vector format version " + std::to_string(version) +
                                         " unsupported (expected " +
                                         std::to_string(vector_format_version) + ")");
    SteeringVector v;
    v.layer = static_cast<int>(read_u32(in, "vector layer"));
    v.num_pairs = read_u32(in, "vector pair count");
    uint8_t pooling = read_u8(in, "vector pooling");
    uint8_t variant = read_u8(in, "vector variant");
    if (pooling > 1) fail(ErrorKind::schema, "bad pooling tag in " + path.string());
    if (variant > 1) fail(ErrorKind::schema, "bad variant tag in " + path.string());
    v.pooling = static_cast<Pooling>(pooling);
    v.variant = static_cast<Variant>(variant);
    v.dataset_hash = read_u64(in, "vector dataset hash");
    v.seed = read_i64(in, "vector seed");
    uint32_t dim = read_u32(in, "vector length");
    v.direction.resize(dim);
    for (uint32_t i = 0; i < dim; ++i) v.direction[i] = read_f64(in, "vector payload");
    char extra;
    if (in.read(&extra, 1) && in.gcount() == 1)
        fail(ErrorKind::schema, "trailing bytes after the vector payload: " + path.string());
    return v;
}

std::vector<int> steered_generate(const lm::Model& m, const bench::FeedbackGrammar& grammar,
                                  const bench::ImageRecord& image, std::span<const int> prompt,
                                  const SteeringVector& vec, const SteeringConfig& config,
                                  const lm::GenParams& gen) {
    if (vec.layer != config.layer)
        fail(ErrorKind::contract, "vector extracted at layer " + std::to_string(vec.layer) +
                                      " but steering configured for layer " +
                                      std::to_string(config.layer));
    if (vec.direction.size() != static_cast<size_t>(m.config.model_dim))
        fail(ErrorKind::contract, "vector length " + std::to_string(vec.direction.size()) +
                                      " != model_dim " + std::to_string(m.config.model_dim));

    lm::ChatTranscript t;
    t.image = lm::ImageInput{image.id, image.features};
    t.user_text.assign(prompt.begin(), prompt.end());
    auto rendered = lm::render_chat(t, m.config);

    lm::HookSpec hook;
    hook.layer = config.layer;
    hook.mode = lm::HookMode::inject;
    hook.positions = config.positions;
    hook.span_begin = rendered.assistant_begin;
    hook.span_end = rendered.assistant_end;
    hook.inject_vector = vec.direction;
    hook.inject_scale = config.alpha;

    auto mask = grammar.mask();
    return lm::generate(m, rendered, gen, &mask, {&hook, 1});
}

}  // namespace memsteer::steer
