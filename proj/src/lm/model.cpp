#include "lm/model.hpp"

#include <algorithm>
#include <cmath>

#include "util/rng.hpp"

namespace memsteer::lm {

namespace {

constexpr double ln_eps = 1e-5;

void fill_normal(std::vector<double>& v, Rng& rng, double scale) {
    for (auto& x : v) x = rng.normal() * scale;
}

}  // namespace

Model Model::init(const ModelConfig& config) {
    config.validate();
    Model m;
    m.config = config;
    const size_t d = static_cast<size_t>(config.model_dim);
    const size_t V = static_cast<size_t>(config.vocab_size);
    const size_t S = static_cast<size_t>(config.max_seq_len);
    const size_t P = static_cast<size_t>(config.image_prefix_len);
    const size_t K = static_cast<size_t>(config.feature_dim);
    const size_t ff = 4 * d;

    Rng rng(static_cast<uint64_t>(config.seed));
    const double emb_scale = 1.0 / std::sqrt(static_cast<double>(d));

    m.tok_emb.resize(V * d);
    fill_normal(m.tok_emb, rng, emb_scale);
    m.pos_emb.resize(S * d);
    fill_normal(m.pos_emb, rng, emb_scale);
    m.img_w.resize(K * P * d);
    fill_normal(m.img_w, rng, 1.0 / std::sqrt(static_cast<double>(K)));
    m.img_b.assign(P * d, 0.0);

    const double din = 1.0 / std::sqrt(static_cast<double>(d));
    const double ffin = 1.0 / std::sqrt(static_cast<double>(ff));
    m.blocks.resize(static_cast<size_t>(config.num_layers));
    for (auto& b : m.blocks) {
        b.ln1_g.assign(d, 1.0);
        b.ln1_b.assign(d, 0.0);
        b.wq.resize(d * d);
        fill_normal(b.wq, rng, din);
        b.bq.assign(d, 0.0);
        b.wk.resize(d * d);
        fill_normal(b.wk, rng, din);
        b.bk.assign(d, 0.0);
        b.wv.resize(d * d);
        fill_normal(b.wv, rng, din);
        b.bv.assign(d, 0.0);
        b.wo.resize(d * d);
        fill_normal(b.wo, rng, din);
        b.bo.assign(d, 0.0);
        b.ln2_g.assign(d, 1.0);
        b.ln2_b.assign(d, 0.0);
        b.w1.resize(d * ff);
        fill_normal(b.w1, rng, din);
        b.b1.assign(ff, 0.0);
        b.w2.resize(ff * d);
        fill_normal(b.w2, rng, ffin);
        b.b2.assign(d, 0.0);
    }
    m.lnf_g.assign(d, 1.0);
    m.lnf_b.assign(d, 0.0);
    m.head_w.resize(d * V);
    fill_normal(m.head_w, rng, din);
    m.head_b.assign(V, 0.0);
    return m;
}

std::vector<NamedParam> Model::params() {
    const size_t d = static_cast<size_t>(config.model_dim);
    const size_t V = static_cast<size_t>(config.vocab_size);
    const size_t S = static_cast<size_t>(config.max_seq_len);
    const size_t P = static_cast<size_t>(config.image_prefix_len);
    const size_t K = static_cast<size_t>(config.feature_dim);
    const size_t ff = 4 * d;

    std::vector<NamedParam> out;
    out.push_back({"tok_emb", {V, d}, &tok_emb});
    out.push_back({"pos_emb", {S, d}, &pos_emb});
    out.push_back({"img_w", {K, P * d}, &img_w});
    out.push_back({"img_b", {P * d}, &img_b});
    for (size_t i = 0; i < blocks.size(); ++i) {
        auto& b = blocks[i];
        std::string p = "blocks." + std::to_string(i) + ".";
        out.push_back({p + "ln1_g", {d}, &b.ln1_g});
        out.push_back({p + "ln1_b", {d}, &b.ln1_b});
        out.push_back({p + "wq", {d, d}, &b.wq});
        out.push_back({p + "bq", {d}, &b.bq});
        out.push_back({p + "wk", {d, d}, &b.wk});
        out.push_back({p + "bk", {d}, &b.bk});
        out.push_back({p + "wv", {d, d}, &b.wv});
        out.push_back({p + "bv", {d}, &b.bv});
        out.push_back({p + "wo", {d, d}, &b.wo});
        out.push_back({p + "bo", {d}, &b.bo});
        out.push_back({p + "ln2_g", {d}, &b.ln2_g});
        out.push_back({p + "ln2_b", {d}, &b.ln2_b});
        out.push_back({p + "w1", {d, ff}, &b.w1});
        out.push_back({p + "b1", {ff}, &b.b1});
        out.push_back({p + "w2", {ff, d}, &b.w2});
        out.push_back({p + "b2", {d}, &b.b2});
    }
    out.push_back({"lnf_g", {d}, &lnf_g});
    out.push_back({"lnf_b", {d}, &lnf_b});
    out.push_back({"head_w", {d, V}, &head_w});
    out.push_back({"head_b", {V}, &head_b});
    return out;
}

std::vector<NamedParam> Model::params() const {
    return const_cast<Model*>(this)->params();  // callers treat the views as read-only
}

size_t Model::num_params() const {
    size_t n = 0;
    for (const auto& p : params()) n += p.data->size();
    return n;
}

double log_sum_exp(std::span<const double> row) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : row) m = std::max(m, x);
    if (!std::isfinite(m)) fail(ErrorKind::contract, "log_sum_exp over an empty/-inf row");
    double s = 0.0;
    for (double x : row) s += std::exp(x - m);
    return m + std::log(s);
}

namespace {

bool hook_covers(const HookSpec& h, size_t t, size_t seq_len) {
    switch (h.positions) {
        case HookPositions::all:
            return true;
        case HookPositions::assistant_span:
            return t >= h.span_begin && t < h.span_end;
        case HookPositions::last_token:
            return t + 1 == seq_len;
    }
    return false;
}

void layer_norm(std::span<const double> x, std::span<const double> g, std::span<const double> b,
                std::span<double> y, double& mu_out, double& rs_out) {
    const size_t d = x.size();
    double mu = 0.0;
    for (double v : x) mu += v;
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (double v : x) var += (v - mu) * (v - mu);
    var /= static_cast<double>(d);
    double rs = 1.0 / std::sqrt(var + ln_eps);
    for (size_t i = 0; i < d; ++i) y[i] = g[i] * ((x[i] - mu) * rs) + b[i];
    mu_out = mu;
    rs_out = rs;
}

// y = x * W + b, W row-major [in, out]
void affine(std::span<const double> x_row, std::span<const double> w, std::span<const double> b,
            std::span<double> y_row, size_t in, size_t out) {
    for (size_t o = 0; o < out; ++o) y_row[o] = b[o];
    for (size_t i = 0; i < in; ++i) {
        const double xi = x_row[i];
        const double* wrow = w.data() + i * out;
        for (size_t o = 0; o < out; ++o) y_row[o] += xi * wrow[o];
    }
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

}  // namespace

ForwardResult forward(const Model& m, std::span<const int> tokens,
                      std::span<const double> image_features, std::span<const HookSpec> hooks,
                      ForwardTrace* trace) {
    const auto& cfg = m.config;
    const size_t T = tokens.size();
    const size_t d = static_cast<size_t>(cfg.model_dim);
    const size_t V = static_cast<size_t>(cfg.vocab_size);
    const size_t H = static_cast<size_t>(cfg.num_heads);
    const size_t hd = d / H;
    const size_t ff = 4 * d;
    const size_t P = static_cast<size_t>(cfg.image_prefix_len);
    const double att_scale = 1.0 / std::sqrt(static_cast<double>(hd));

    if (T == 0) fail(ErrorKind::contract, "forward on an empty token sequence");
    if (T > static_cast<size_t>(cfg.max_seq_len))
        fail(ErrorKind::overflow, "sequence length " + std::to_string(T) + " exceeds max_seq_len " +
                                      std::to_string(cfg.max_seq_len));
    for (int t : tokens)
        if (t < 0 || t >= cfg.vocab_size)
            fail(ErrorKind::contract, "token id " + std::to_string(t) + " out of vocabulary");

    bool has_image = !image_features.empty();
    if (has_image) {
        if (P == 0) fail(ErrorKind::contract, "image features given but image_prefix_len is 0");
        if (image_features.size() != static_cast<size_t>(cfg.feature_dim))
            fail(ErrorKind::contract, "image feature length mismatch");
        if (T < 1 + P) fail(ErrorKind::contract, "sequence too short for the image prefix");
        for (size_t j = 0; j < P; ++j)
            if (tokens[1 + j] != tok_img)
                fail(ErrorKind::contract, "expected <img> placeholders at positions 1.." +
                                              std::to_string(P));
    } else {
        for (int t : tokens)
            if (t == tok_img)
                fail(ErrorKind::contract, "<img> token present but no image features given");
    }

    for (const auto& h : hooks) {
        if (h.layer < 1 || h.layer > cfg.num_layers)
            fail(ErrorKind::contract, "hook layer " + std::to_string(h.layer) +
                                          " outside [1, " + std::to_string(cfg.num_layers) + "]");
        if (h.mode == HookMode::inject && h.inject_vector.size() != d)
            fail(ErrorKind::contract, "inject vector length " +
                                          std::to_string(h.inject_vector.size()) +
                                          " != model_dim " + std::to_string(d));
    }

    // Embeddings; <img> slots take the projected feature vector instead of the
    // token embedding.
    std::vector<double> x(T * d);
    std::vector<double> img_emb;
    if (has_image) {
        img_emb.resize(P * d);
        affine(image_features, m.img_w, m.img_b, img_emb, static_cast<size_t>(cfg.feature_dim),
               P * d);
    }
    for (size_t t = 0; t < T; ++t) {
        const double* pe = m.pos_emb.data() + t * d;
        double* xt = x.data() + t * d;
        if (has_image && t >= 1 && t <= P) {
            const double* ie = img_emb.data() + (t - 1) * d;
            for (size_t i = 0; i < d; ++i) xt[i] = ie[i] + pe[i];
        } else {
            const double* te = m.tok_emb.data() + static_cast<size_t>(tokens[t]) * d;
            for (size_t i = 0; i < d; ++i) xt[i] = te[i] + pe[i];
        }
    }

    ForwardResult result;
    result.seq_len = T;
    if (trace) {
        trace->x0 = x;
        trace->layers.assign(m.blocks.size(), {});
    }

    std::vector<double> ln_out(T * d), q(T * d), k(T * d), v(T * d), mix(T * d), proj(d);
    std::vector<double> att;  // [H, T, T], only when traced
    std::vector<double> att_row(T);
    std::vector<double> mlp_pre(T * ff), mlp_act(T * ff);

    for (size_t li = 0; li < m.blocks.size(); ++li) {
        const Block& blk = m.blocks[li];
        LayerTrace* lt = trace ? &trace->layers[li] : nullptr;
        if (lt) lt->x_in = x;

        // Attention sublayer.
        std::vector<double> mu(T), rs(T);
        for (size_t t = 0; t < T; ++t)
            layer_norm({x.data() + t * d, d}, blk.ln1_g, blk.ln1_b, {ln_out.data() + t * d, d},
                       mu[t], rs[t]);
        if (lt) {
            lt->ln1_mu = mu;
            lt->ln1_rs = rs;
            lt->ln1_xhat.resize(T * d);
            for (size_t t = 0; t < T; ++t)
                for (size_t i = 0; i < d; ++i)
                    lt->ln1_xhat[t * d + i] = (x[t * d + i] - mu[t]) * rs[t];
        }
        for (size_t t = 0; t < T; ++t) {
            affine({ln_out.data() + t * d, d}, blk.wq, blk.bq, {q.data() + t * d, d}, d, d);
            affine({ln_out.data() + t * d, d}, blk.wk, blk.bk, {k.data() + t * d, d}, d, d);
            affine({ln_out.data() + t * d, d}, blk.wv, blk.bv, {v.data() + t * d, d}, d, d);
        }
        if (lt) att.assign(H * T * T, 0.0);
        for (size_t h = 0; h < H; ++h) {
            const size_t off = h * hd;
            for (size_t t = 0; t < T; ++t) {
                double mx = -std::numeric_limits<double>::infinity();
                for (size_t j = 0; j <= t; ++j) {
                    double s = 0.0;
                    const double* qt = q.data() + t * d + off;
                    const double* kj = k.data() + j * d + off;
                    for (size_t c = 0; c < hd; ++c) s += qt[c] * kj[c];
                    att_row[j] = s * att_scale;
                    mx = std::max(mx, att_row[j]);
                }
                double denom = 0.0;
                for (size_t j = 0; j <= t; ++j) {
                    att_row[j] = std::exp(att_row[j] - mx);
                    denom += att_row[j];
                }
                double* out = mix.data() + t * d + off;
                for (size_t c = 0; c < hd; ++c) out[c] = 0.0;
                for (size_t j = 0; j <= t; ++j) {
                    double p = att_row[j] / denom;
                    if (lt) att[(h * T + t) * T + j] = p;
                    const double* vj = v.data() + j * d + off;
                    for (size_t c = 0; c < hd; ++c) out[c] += p * vj[c];
                }
            }
        }
        if (lt) {
            lt->q = q;
            lt->k = k;
            lt->v = v;
            lt->att = att;
            lt->att_mix = mix;
        }
        for (size_t t = 0; t < T; ++t) {
            affine({mix.data() + t * d, d}, blk.wo, blk.bo, proj, d, d);
            double* xt = x.data() + t * d;
            for (size_t i = 0; i < d; ++i) xt[i] += proj[i];
        }
        if (lt) lt->x_mid = x;

        // MLP sublayer.
        for (size_t t = 0; t < T; ++t)
            layer_norm({x.data() + t * d, d}, blk.ln2_g, blk.ln2_b, {ln_out.data() + t * d, d},
                       mu[t], rs[t]);
        if (lt) {
            lt->ln2_mu = mu;
            lt->ln2_rs = rs;
            lt->ln2_xhat.resize(T * d);
            for (size_t t = 0; t < T; ++t)
                for (size_t i = 0; i < d; ++i)
                    lt->ln2_xhat[t * d + i] = (x[t * d + i] - mu[t]) * rs[t];
        }
        std::vector<double> h2(d);
        for (size_t t = 0; t < T; ++t) {
            affine({ln_out.data() + t * d, d}, blk.w1, blk.b1, {mlp_pre.data() + t * ff, ff}, d,
                   ff);
            for (size_t i = 0; i < ff; ++i) mlp_act[t * ff + i] = gelu(mlp_pre[t * ff + i]);
            affine({mlp_act.data() + t * ff, ff}, blk.w2, blk.b2, h2, ff, d);
            double* xt = x.data() + t * d;
            for (size_t i = 0; i < d; ++i) xt[i] += h2[i];
        }
        if (lt) {
            lt->mlp_pre = mlp_pre;
            lt->mlp_act = mlp_act;
        }

        // Hook point: the residual-stream output of block li+1 (1-based).
        const int layer_1b = static_cast<int>(li) + 1;
        for (const auto& h : hooks) {
            if (h.layer != layer_1b) continue;
            if (h.mode == HookMode::capture) {
                ActivationRecord rec;
                rec.layer = layer_1b;
                for (size_t t = 0; t < T; ++t) {
                    if (!hook_covers(h, t, T)) continue;
                    rec.per_position.emplace_back(
                        t, std::vector<double>(x.begin() + static_cast<ptrdiff_t>(t * d),
                                               x.begin() + static_cast<ptrdiff_t>((t + 1) * d)));
                }
                result.captures.push_back(std::move(rec));
            } else {
                for (size_t t = 0; t < T; ++t) {
                    if (!hook_covers(h, t, T)) continue;
                    double* xt = x.data() + t * d;
                    for (size_t i = 0; i < d; ++i) xt[i] += h.inject_scale * h.inject_vector[i];
                }
            }
        }
    }

    if (trace) trace->x_final = x;
    std::vector<double> y(T * d);
    std::vector<double> mu(T), rs(T);
    for (size_t t = 0; t < T; ++t)
        layer_norm({x.data() + t * d, d}, m.lnf_g, m.lnf_b, {y.data() + t * d, d}, mu[t], rs[t]);
    if (trace) {
        trace->lnf_mu = mu;
        trace->lnf_rs = rs;
        trace->lnf_xhat.resize(T * d);
        for (size_t t = 0; t < T; ++t)
            for (size_t i = 0; i < d; ++i) trace->lnf_xhat[t * d + i] = (x[t * d + i] - mu[t]) * rs[t];
        trace->y = y;
    }

    result.logits.resize(T * V);
    for (size_t t = 0; t < T; ++t)
        affine({y.data() + t * d, d}, m.head_w, m.head_b, {result.logits.data() + t * V, V}, d, V);
    return result;
}

ForwardResult forward_chat(const Model& m, const RenderedChat& chat,
                           std::span<const HookSpec> hooks) {
    auto result = forward(m, chat.tokens, chat.image_features, hooks);
    for (auto& rec : result.captures) rec.sample_id = chat.sample_id;
    return result;
}

std::vector<double> sequence_nll(const Model& m, const RenderedChat& prompt,
                                 std::span<const int> target, std::span<const HookSpec> hooks) {
    if (target.empty()) fail(ErrorKind::contract, "sequence_nll with an empty target");
    if (prompt.tokens.empty()) fail(ErrorKind::contract, "sequence_nll with an empty prompt");
    const size_t V = static_cast<size_t>(m.config.vocab_size);
    std::vector<int> full(prompt.tokens);
    full.insert(full.end(), target.begin(), target.end());
    auto result = forward(m, full, prompt.image_features, hooks);
    std::vector<double> nll(target.size());
    const size_t base = prompt.tokens.size();
    for (size_t j = 0; j < target.size(); ++j) {
        std::span<const double> row(result.logits.data() + (base + j - 1) * V, V);
        nll[j] = log_sum_exp(row) - row[static_cast<size_t>(target[j])];
    }
    return nll;
}

}  // namespace memsteer::lm
