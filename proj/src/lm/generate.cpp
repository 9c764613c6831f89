#include <cmath>

#include "lm/model.hpp"
#include "util/rng.hpp"

namespace memsteer::lm {

namespace {

int pick_greedy(std::span<const double> logits, const std::vector<uint8_t>& allowed) {
    int best = -1;
    double best_v = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < logits.size(); ++i) {
        if (!allowed[i]) continue;
        if (logits[i] > best_v) {  // ties resolve to the lowest id
            best_v = logits[i];
            best = static_cast<int>(i);
        }
    }
    return best;
}

int pick_sampled(std::span<const double> logits, const std::vector<uint8_t>& allowed,
                 double temperature, Rng& rng) {
    double mx = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < logits.size(); ++i)
        if (allowed[i]) mx = std::max(mx, logits[i] / temperature);
    double total = 0.0;
    std::vector<double> w(logits.size(), 0.0);
    for (size_t i = 0; i < logits.size(); ++i) {
        if (!allowed[i]) continue;
        w[i] = std::exp(logits[i] / temperature - mx);
        total += w[i];
    }
    double u = rng.uniform() * total;
    double acc = 0.0;
    int last = -1;
    for (size_t i = 0; i < logits.size(); ++i) {
        if (!allowed[i]) continue;
        acc += w[i];
        last = static_cast<int>(i);
        if (u < acc) return last;
    }
    return last;
}

}  // namespace

std::vector<int> generate(const Model& m, const RenderedChat& prompt, const GenParams& params,
                          const StepMask* mask, std::span<const HookSpec> hooks) {
    const auto& cfg = m.config;
    const size_t V = static_cast<size_t>(cfg.vocab_size);
    if (prompt.tokens.empty()) fail(ErrorKind::contract, "generate from an empty prompt");
    if (prompt.tokens.size() > static_cast<size_t>(cfg.max_seq_len))
        fail(ErrorKind::overflow, "prompt does not fit the model window");
    if (params.mode == GenParams::Mode::temperature && params.temperature <= 0.0)
        fail(ErrorKind::contract, "temperature must be positive");

    std::vector<int> tokens(prompt.tokens);
    std::vector<int> generated;
    std::vector<HookSpec> step_hooks(hooks.begin(), hooks.end());
    std::vector<uint8_t> allowed(V);
    Rng rng(params.seed);

    for (int step = 0; step < params.max_new; ++step) {
        if (tokens.size() >= static_cast<size_t>(cfg.max_seq_len)) break;

        // Tokens emitted so far sit in the assistant turn, so span hooks
        // extend over them.
        for (auto& h : step_hooks)
            if (h.positions == HookPositions::assistant_span) h.span_end = tokens.size();

        auto result = forward(m, tokens, prompt.image_features, step_hooks);
        std::span<const double> row(result.logits.data() + (tokens.size() - 1) * V, V);

        std::fill(allowed.begin(), allowed.end(), uint8_t{1});
        if (mask) {
            std::fill(allowed.begin(), allowed.end(), uint8_t{0});
            (*mask)(generated, allowed);
            bool any = false;
            for (uint8_t a : allowed) any |= (a != 0);
            if (!any)
                fail(ErrorKind::dead_end,
                     "constrained decoding admits no token at step " + std::to_string(step));
        }

        int next = params.mode == GenParams::Mode::greedy
                       ? pick_greedy(row, allowed)
                       : pick_sampled(row, allowed, params.temperature, rng);
        if (next == tok_eos) break;
        tokens.push_back(next);
        generated.push_back(next);
    }
    return generated;
}

}  // namespace memsteer::lm
