#include "lm/train.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "util/rng.hpp"

namespace memsteer::lm {

Model zeros_like(const Model& m) {
    Model z;
    z.config = m.config;
    z.blocks.resize(m.blocks.size());
    auto src = m.params();
    auto dst = z.params();
    for (size_t i = 0; i < src.size(); ++i) dst[i].data->assign(src[i].data->size(), 0.0);
    return z;
}

namespace {

double norm_cdf(double z) { return 0.5 * (1.0 + std::erf(z / std::numbers::sqrt2)); }
double norm_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}
double gelu_grad(double z) { return norm_cdf(z) + z * norm_pdf(z); }

// d(loss)/d(x) for y = g * (x - mu) * rs + b, given dy and saved xhat/rs.
void layer_norm_backward(std::span<const double> dy, std::span<const double> xhat, double rs,
                         std::span<const double> gamma, std::span<double> dgamma,
                         std::span<double> dbeta, std::span<double> dx) {
    const size_t d = dy.size();
    double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
    for (size_t i = 0; i < d; ++i) {
        double dxh = dy[i] * gamma[i];
        mean_dxhat += dxh;
        mean_dxhat_xhat += dxh * xhat[i];
        dgamma[i] += dy[i] * xhat[i];
        dbeta[i] += dy[i];
    }
    mean_dxhat /= static_cast<double>(d);
    mean_dxhat_xhat /= static_cast<double>(d);
    for (size_t i = 0; i < d; ++i) {
        double dxh = dy[i] * gamma[i];
        dx[i] = rs * (dxh - mean_dxhat - xhat[i] * mean_dxhat_xhat);
    }
}

// dW += x^T dy, db += dy, dx += dy W^T for y = x W + b with W [in, out].
void affine_backward(std::span<const double> x_row, std::span<const double> w,
                     std::span<const double> dy_row, std::span<double> dw, std::span<double> db,
                     std::span<double> dx_row, size_t in, size_t out) {
    for (size_t o = 0; o < out; ++o) db[o] += dy_row[o];
    for (size_t i = 0; i < in; ++i) {
        const double xi = x_row[i];
        const double* wrow = w.data() + i * out;
        double* dwrow = dw.data() + i * out;
        double acc = 0.0;
        for (size_t o = 0; o < out; ++o) {
            dwrow[o] += xi * dy_row[o];
            acc += dy_row[o] * wrow[o];
        }
        dx_row[i] += acc;
    }
}

void backward(const Model& m, std::span<const int> tokens,
              std::span<const double> image_features, const ForwardTrace& tr,
              std::span<const double> dlogits, Model& g) {
    const auto& cfg = m.config;
    const size_t T = tokens.size();
    const size_t d = static_cast<size_t>(cfg.model_dim);
    const size_t V = static_cast<size_t>(cfg.vocab_size);
    const size_t H = static_cast<size_t>(cfg.num_heads);
    const size_t hd = d / H;
    const size_t ff = 4 * d;
    const size_t P = static_cast<size_t>(cfg.image_prefix_len);
    const double att_scale = 1.0 / std::sqrt(static_cast<double>(hd));
    const bool has_image = !image_features.empty();

    // Output head.
    std::vector<double> dy(T * d, 0.0);
    for (size_t t = 0; t < T; ++t) {
        std::span<const double> drow(dlogits.data() + t * V, V);
        bool any = false;
        for (double v : drow)
            if (v != 0.0) {
                any = true;
                break;
            }
        if (!any) continue;  // rows outside the loss mask carry no gradient
        affine_backward({tr.y.data() + t * d, d}, m.head_w, drow, g.head_w, g.head_b,
                        {dy.data() + t * d, d}, d, V);
    }

    // Final layer norm.
    std::vector<double> dx(T * d, 0.0);
    for (size_t t = 0; t < T; ++t)
        layer_norm_backward({dy.data() + t * d, d}, {tr.lnf_xhat.data() + t * d, d}, tr.lnf_rs[t],
                            m.lnf_g, g.lnf_g, g.lnf_b, {dx.data() + t * d, d});

    std::vector<double> ln_out(d), dln_out(T * d), dmid(T * d), dpre(ff), dact(ff);
    std::vector<double> dq(T * d), dk(T * d), dv(T * d), dmix(T * d), dp(T);

    for (size_t li = m.blocks.size(); li-- > 0;) {
        const Block& blk = m.blocks[li];
        Block& gb = g.blocks[li];
        const LayerTrace& lt = tr.layers[li];

        // MLP sublayer: x_out = x_mid + w2 * gelu(w1 * ln2(x_mid) + b1) + b2.
        std::fill(dln_out.begin(), dln_out.end(), 0.0);
        for (size_t t = 0; t < T; ++t) {
            std::span<const double> dout(dx.data() + t * d, d);
            std::fill(dact.begin(), dact.end(), 0.0);
            affine_backward({lt.mlp_act.data() + t * ff, ff}, blk.w2, dout, gb.w2, gb.b2, dact,
                            ff, d);
            for (size_t i = 0; i < ff; ++i)
                dpre[i] = dact[i] * gelu_grad(lt.mlp_pre[t * ff + i]);
            for (size_t i = 0; i < d; ++i)
                ln_out[i] = blk.ln2_g[i] * lt.ln2_xhat[t * d + i] + blk.ln2_b[i];
            affine_backward(ln_out, blk.w1, dpre, gb.w1, gb.b1, {dln_out.data() + t * d, d}, d,
                            ff);
        }
        for (size_t t = 0; t < T; ++t)
            layer_norm_backward({dln_out.data() + t * d, d}, {lt.ln2_xhat.data() + t * d, d},
                                lt.ln2_rs[t], blk.ln2_g, gb.ln2_g, gb.ln2_b,
                                {dmid.data() + t * d, d});
        // dmid now holds the norm branch; add the residual path.
        for (size_t i = 0; i < T * d; ++i) dmid[i] += dx[i];

        // Attention sublayer: x_mid = x_in + wo * attention(ln1(x_in)) + bo.
        std::fill(dmix.begin(), dmix.end(), 0.0);
        for (size_t t = 0; t < T; ++t)
            affine_backward({lt.att_mix.data() + t * d, d}, blk.wo,
                            {dmid.data() + t * d, d}, gb.wo, gb.bo, {dmix.data() + t * d, d}, d,
                            d);

        std::fill(dq.begin(), dq.end(), 0.0);
        std::fill(dk.begin(), dk.end(), 0.0);
        std::fill(dv.begin(), dv.end(), 0.0);
        for (size_t h = 0; h < H; ++h) {
            const size_t off = h * hd;
            for (size_t t = 0; t < T; ++t) {
                const double* att_t = lt.att.data() + (h * T + t) * T;
                const double* dmix_t = dmix.data() + t * d + off;
                double dot = 0.0;
                for (size_t j = 0; j <= t; ++j) {
                    const double* vj = lt.v.data() + j * d + off;
                    double dpj = 0.0;
                    for (size_t c = 0; c < hd; ++c) dpj += dmix_t[c] * vj[c];
                    dp[j] = dpj;
                    dot += att_t[j] * dpj;
                    double* dvj = dv.data() + j * d + off;
                    for (size_t c = 0; c < hd; ++c) dvj[c] += att_t[j] * dmix_t[c];
                }
                const double* qt = lt.q.data() + t * d + off;
                double* dqt = dq.data() + t * d + off;
                for (size_t j = 0; j <= t; ++j) {
                    double ds = att_t[j] * (dp[j] - dot) * att_scale;
                    const double* kj = lt.k.data() + j * d + off;
                    double* dkj = dk.data() + j * d + off;
                    for (size_t c = 0; c < hd; ++c) {
                        dqt[c] += ds * kj[c];
                        dkj[c] += ds * qt[c];
                    }
                }
            }
        }

        std::fill(dln_out.begin(), dln_out.end(), 0.0);
        for (size_t t = 0; t < T; ++t) {
            for (size_t i = 0; i < d; ++i)
                ln_out[i] = blk.ln1_g[i] * lt.ln1_xhat[t * d + i] + blk.ln1_b[i];
            affine_backward(ln_out, blk.wq, {dq.data() + t * d, d}, gb.wq, gb.bq,
                            {dln_out.data() + t * d, d}, d, d);
            affine_backward(ln_out, blk.wk, {dk.data() + t * d, d}, gb.wk, gb.bk,
                            {dln_out.data() + t * d, d}, d, d);
            affine_backward(ln_out, blk.wv, {dv.data() + t * d, d}, gb.wv, gb.bv,
                            {dln_out.data() + t * d, d}, d, d);
        }
        for (size_t t = 0; t < T; ++t)
            layer_norm_backward({dln_out.data() + t * d, d}, {lt.ln1_xhat.data() + t * d, d},
                                lt.ln1_rs[t], blk.ln1_g, gb.ln1_g, gb.ln1_b,
                                {dx.data() + t * d, d});
        for (size_t i = 0; i < T * d; ++i) dx[i] += dmid[i];
    }

    // Embeddings and the image projection.
    std::vector<double> dimg(P * d, 0.0);
    for (size_t t = 0; t < T; ++t) {
        const double* dxt = dx.data() + t * d;
        double* gpos = g.pos_emb.data() + t * d;
        for (size_t i = 0; i < d; ++i) gpos[i] += dxt[i];
        if (has_image && t >= 1 && t <= P) {
            double* di = dimg.data() + (t - 1) * d;
            for (size_t i = 0; i < d; ++i) di[i] += dxt[i];
        } else {
            double* gtok = g.tok_emb.data() + static_cast<size_t>(tokens[t]) * d;
            for (size_t i = 0; i < d; ++i) gtok[i] += dxt[i];
        }
    }
    if (has_image) {
        const size_t K = image_features.size();
        for (size_t j = 0; j < P * d; ++j) g.img_b[j] += dimg[j];
        for (size_t k2 = 0; k2 < K; ++k2) {
            double fk = image_features[k2];
            double* gw = g.img_w.data() + k2 * P * d;
            for (size_t j = 0; j < P * d; ++j) gw[j] += fk * dimg[j];
        }
    }
}

struct RenderedBatch {
    std::vector<RenderedChat> chats;
    size_t total_targets = 0;
};

RenderedBatch render_batch(const Model& m, std::span<const ChatTranscript> batch) {
    RenderedBatch rb;
    for (const auto& t : batch) {
        RenderedChat r = render_chat(t, m.config);
        if (r.assistant_len() == 0)
            fail(ErrorKind::contract, "training transcript has an empty assistant turn");
        rb.total_targets += r.assistant_len() + 1;  // content plus the closing <eos>
        rb.chats.push_back(std::move(r));
    }
    return rb;
}

}  // namespace

double loss_and_grad(const Model& m, std::span<const ChatTranscript> batch, Model* grads) {
    if (batch.empty()) fail(ErrorKind::contract, "empty training batch");
    const size_t V = static_cast<size_t>(m.config.vocab_size);
    RenderedBatch rb = render_batch(m, batch);
    const double inv_total = 1.0 / static_cast<double>(rb.total_targets);

    double loss = 0.0;
    for (const auto& chat : rb.chats) {
        const size_t T = chat.tokens.size();
        ForwardTrace trace;
        auto result = forward(m, chat.tokens, chat.image_features, {}, grads ? &trace : nullptr);

        // Targets: positions assistant_begin..assistant_end, the last being <eos>.
        std::vector<double> dlogits;
        if (grads) dlogits.assign(T * V, 0.0);
        for (size_t p = chat.assistant_begin; p <= chat.assistant_end; ++p) {
            std::span<const double> row(result.logits.data() + (p - 1) * V, V);
            const auto target = static_cast<size_t>(chat.tokens[p]);
            double lse = log_sum_exp(row);
            loss += (lse - row[target]) * inv_total;
            if (grads) {
                double* drow = dlogits.data() + (p - 1) * V;
                for (size_t o = 0; o < V; ++o) drow[o] += std::exp(row[o] - lse) * inv_total;
                drow[target] -= inv_total;
            }
        }
        if (grads) backward(m, chat.tokens, chat.image_features, trace, dlogits, *grads);
    }
    return loss;
}

TrainLog train(Model& m, const std::vector<ChatTranscript>& corpus, const TrainConfig& cfg) {
    if (corpus.empty()) fail(ErrorKind::contract, "training corpus is empty");
    if (cfg.steps < 0) fail(ErrorKind::contract, "negative step count");
    if (cfg.batch < 1) fail(ErrorKind::contract, "batch must be >= 1");
    if (cfg.lr <= 0.0) fail(ErrorKind::contract, "learning rate must be positive");

    constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    Model grads = zeros_like(m);
    Model m1 = zeros_like(m);
    Model m2 = zeros_like(m);
    auto theta = m.params();
    auto gview = grads.params();
    auto m1view = m1.params();
    auto m2view = m2.params();

    Rng rng(cfg.seed);
    TrainLog log;
    std::vector<ChatTranscript> batch;
    for (int step = 0; step < cfg.steps; ++step) {
        batch.clear();
        for (int b = 0; b < cfg.batch; ++b)
            batch.push_back(
                corpus[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(corpus.size()) - 1))]);

        for (auto& gp : gview) std::fill(gp.data->begin(), gp.data->end(), 0.0);
        double loss = loss_and_grad(m, batch, &grads);
        if (!std::isfinite(loss))
            fail(ErrorKind::non_finite, "non-finite loss at step " + std::to_string(step));
        log.loss_per_step.push_back(loss);

        const double t = static_cast<double>(step + 1);
        const double bc1 = 1.0 - std::pow(beta1, t);
        const double bc2 = 1.0 - std::pow(beta2, t);
        for (size_t pi = 0; pi < theta.size(); ++pi) {
            auto& w = *theta[pi].data;
            auto& gv = *gview[pi].data;
            auto& mv = *m1view[pi].data;
            auto& vv = *m2view[pi].data;
            for (size_t i = 0; i < w.size(); ++i) {
                mv[i] = beta1 * mv[i] + (1.0 - beta1) * gv[i];
                vv[i] = beta2 * vv[i] + (1.0 - beta2) * gv[i] * gv[i];
                w[i] -= cfg.lr * (mv[i] / bc1) / (std::sqrt(vv[i] / bc2) + adam_eps);
            }
        }
        if (cfg.log_every > 0 && (step % cfg.log_every == 0 || step + 1 == cfg.steps))
            std::fprintf(stderr, "train step %d/%d loss %.6f\n", step + 1, cfg.steps, loss);
    }
    return log;
}

}  // namespace memsteer::lm
