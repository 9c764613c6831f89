#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lm/chat.hpp"
#include "lm/config.hpp"
#include "lm/hooks.hpp"

namespace memsteer::lm {

// Weight matrices are row-major [in_dim, out_dim]: y[o] = sum_i x[i] * w[i * out + o] + b[o].
struct Block {
    std::vector<double> ln1_g, ln1_b;
    std::vector<double> wq, bq, wk, bk, wv, bv, wo, bo;
    std::vector<double> ln2_g, ln2_b;
    std::vector<double> w1, b1, w2, b2;
};

struct NamedParam {
    std::string name;
    std::vector<size_t> shape;
    std::vector<double>* data;
};

// Decoder-only transformer: learned token + position embeddings, an optional
// image projection feeding the <img> prefix slots, pre-LN blocks with causal
// multi-head attention and a GELU MLP, final LN, untied output head.
// Double precision throughout; all math is single-threaded and bit-stable.
struct Model {
    ModelConfig config;

    std::vector<double> tok_emb;  // [V, d]
    std::vector<double> pos_emb;  // [S, d]
    std::vector<double> img_w;    // [K, P*d]
    std::vector<double> img_b;    // [P*d]
    std::vector<Block> blocks;
    std::vector<double> lnf_g, lnf_b;
    std::vector<double> head_w;  // [d, V]
    std::vector<double> head_b;  // [V]

    static Model init(const ModelConfig& config);  // seeded scaled-normal, fan-in

    std::vector<NamedParam> params();
    std::vector<NamedParam> params() const;  // views over const storage (do not write)
    size_t num_params() const;
};

struct LayerTrace {
    std::vector<double> x_in;                      // [T, d] residual into the block
    std::vector<double> ln1_xhat, ln1_mu, ln1_rs;  // normalized input, mean, 1/std
    std::vector<double> q, k, v;                   // [T, d]
    std::vector<double> att;                       // [H, T, T] probabilities
    std::vector<double> att_mix;                   // [T, d] head-concatenated context
    std::vector<double> x_mid;                     // [T, d] residual after attention
    std::vector<double> ln2_xhat, ln2_mu, ln2_rs;
    std::vector<double> mlp_pre;  // [T, ff]
    std::vector<double> mlp_act;  // [T, ff]
};

struct ForwardTrace {
    std::vector<double> x0;  // [T, d] embedding sum
    std::vector<LayerTrace> layers;
    std::vector<double> x_final;  // [T, d] residual into the final LN
    std::vector<double> lnf_xhat, lnf_mu, lnf_rs;
    std::vector<double> y;  // [T, d] final LN output (head input)
};

struct ForwardResult {
    size_t seq_len = 0;
    std::vector<double> logits;  // [T, V]
    std::vector<ActivationRecord> captures;
};

// `image_features`: empty unless the sequence carries an <img> prefix; when
// non-empty the tokens at positions 1..P must be <img> placeholders.
ForwardResult forward(const Model& m, std::span<const int> tokens,
                      std::span<const double> image_features, std::span<const HookSpec> hooks,
                      ForwardTrace* trace = nullptr);

ForwardResult forward_chat(const Model& m, const RenderedChat& chat,
                           std::span<const HookSpec> hooks = {});

struct GenParams {
    int max_new = 16;
    enum class Mode { greedy, temperature } mode = Mode::greedy;
    double temperature = 1.0;
    uint64_t seed = 0;
};

// Per-step token filter. Receives the tokens generated so far and marks
// admissible next tokens; all-zero is a constrained-decoding dead end.
using StepMask = std::function<void(std::span<const int> generated, std::vector<uint8_t>& allowed)>;

// Greedy or temperature decoding from a rendered prompt. Stops at <eos>, at
// max_new tokens, or at the model window. The returned tokens exclude <eos>.
std::vector<int> generate(const Model& m, const RenderedChat& prompt, const GenParams& params,
                          const StepMask* mask = nullptr, std::span<const HookSpec> hooks = {});

// Teacher-forced per-token negative log-likelihoods (natural log) of `target`
// given the rendered prompt. Hooks apply to the whole scored sequence.
std::vector<double> sequence_nll(const Model& m, const RenderedChat& prompt,
                                 std::span<const int> target, std::span<const HookSpec> hooks = {});

// Stable log(sum(exp(row))) helper shared by scoring and training.
double log_sum_exp(std::span<const double> row);

}  // namespace memsteer::lm
