#include "psd/decoding.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace psd {

namespace {

// rng substream labels; fixed so instrumentation changes never shift draws
enum : std::uint64_t {
    stream_autoregressive = 0,
    stream_draft = 1,
    stream_stage1 = 2,   // qualifier corrections (pyramid) / target corrections (2-model)
    stream_stage2 = 3,   // target corrections (pyramid)
    stream_accept = 4,   // stochastic acceptance draws
};

struct run_state {
    const decode_config& cfg;
    context ctx;
    sim_clock clock;
    decode_outcome out;
    bool halted = false;

    run_state(const context& prompt, const decode_config& config) : cfg(config), ctx(prompt) {
        cfg.validate();
        if (ctx.size() > cfg.max_context) {
            throw context_overflow_error("prompt exceeds maximum context length");
        }
    }

    int committed() const { return static_cast<int>(out.tokens.size()); }
    int remaining() const { return cfg.max_new_tokens - committed(); }
    bool done() const { return halted || remaining() <= 0; }

    void require_capacity(std::size_t extra) const {
        if (ctx.size() + extra > cfg.max_context) {
            throw context_overflow_error("decode would exceed maximum context length");
        }
    }

    void commit(token_id token, stage_kind stage, bool accepted,
                std::optional<double> div_q, std::optional<double> div_t) {
        if (done()) {
            return;  // round overshoot past max_new_tokens is truncated
        }
        step_record rec;
        rec.position = committed();
        rec.token = token;
        rec.stage = stage;
        rec.div_q = div_q;
        rec.div_t = div_t;
        rec.accepted = accepted;
        rec.sim_time = clock.now;
        ctx.push_back(token);
        out.tokens.push_back(token);
        out.records.push_back(std::move(rec));
        if (cfg.eos_token && token == *cfg.eos_token) {
            halted = true;
        }
    }

    decode_outcome finish() {
        out.sim_elapsed = clock.now;
        return std::move(out);
    }
};

// A model wired into a run: invocations advance the clock and the per-model
// call counter, outputs are scaled to the run temperature.
struct model_slot {
    const model_backend* model;
    std::int64_t* calls;
    sim_clock* clock;
    double temperature;

    distribution query_one(const context& ctx) const {
        ++*calls;
        clock->charge(model->info().latency_per_call);
        return apply_temperature(model->next_distribution(ctx), temperature);
    }

    // one verification pass = one forward invocation, whatever the block size;
    // yields distributions for positions 0..block.size()-1 plus the bonus
    // position when requested
    std::vector<distribution> pass(const context& base, std::span<const token_id> block,
                                   bool with_bonus) const {
        ++*calls;
        clock->charge(model->info().latency_per_call);
        std::vector<distribution> dists;
        dists.reserve(block.size() + (with_bonus ? 1 : 0));
        context scratch = base;
        for (token_id t : block) {
            dists.push_back(apply_temperature(model->next_distribution(scratch), temperature));
            scratch.push_back(t);
        }
        if (with_bonus) {
            dists.push_back(apply_temperature(model->next_distribution(scratch), temperature));
        }
        return dists;
    }
};

struct chain { // autoregressive draft proposals
    std::vector<token_id> tokens;
    std::vector<distribution> dists;
};

chain draft_chain(const model_slot& draft, const context& base, int length, bool propose_argmax,
                  rng_stream& rng) {
    chain c;
    context scratch = base;
    for (int j = 0; j < length; ++j) {
        distribution d = draft.query_one(scratch);
        const token_id t = propose_argmax ? argmax(d) : sample(d, rng);
        scratch.push_back(t);
        c.tokens.push_back(t);
        c.dists.push_back(std::move(d));
    }
    return c;
}

void check_shared_vocab(const model_backend& a, const model_backend& b) {
    if (a.vocab_size() != b.vocab_size()) {
        throw std::invalid_argument("decoders require backends over a shared vocabulary (" +
                                    a.info().name + ": " + std::to_string(a.vocab_size()) + ", " +
                                    b.info().name + ": " + std::to_string(b.vocab_size()) + ")");
    }
}

correction_rule rule_for(const decode_config& cfg) {
    return cfg.greedy ? correction_rule::use_argmax : correction_rule::use_sample;
}

// shared body of greedy-match SD and FSD: acceptance by divergence threshold,
// target corrections / bonus per round
decode_outcome two_model_decode(const model_backend& draft, const model_backend& target,
                                int l_draft, double tau, const divergence_kind& kind,
                                bool propose_argmax, const decode_config& cfg,
                                const context& prompt) {
    check_shared_vocab(draft, target);
    if (l_draft < 1) {
        throw std::invalid_argument("decode: speculative length must be >= 1");
    }
    if (!(tau >= 0.0)) {
        throw std::invalid_argument("decode: divergence threshold must be >= 0");
    }

    run_state st(prompt, cfg);
    const model_slot draft_slot{&draft, &st.out.calls.draft, &st.clock, cfg.temperature};
    const model_slot target_slot{&target, &st.out.calls.target, &st.clock, cfg.temperature};
    rng_stream root(cfg.seed);
    rng_stream rng_prop = root.derive(stream_draft);
    rng_stream rng_corr = root.derive(stream_stage1);
    const correction_rule rule = rule_for(cfg);

    while (!st.done()) {
        const int l = std::min(l_draft, st.remaining());
        st.require_capacity(static_cast<std::size_t>(l) + 1);

        chain proposals = draft_chain(draft_slot, st.ctx, l, propose_argmax || cfg.greedy, rng_prop);
        const auto vdists = target_slot.pass(st.ctx, proposals.tokens, true);
        const verify_result vr =
            verify_block(proposals.tokens, proposals.dists, vdists, tau, kind, rule, rng_corr);

        st.out.qd.rounds += 1;
        st.out.qd.proposed += l;
        st.out.qd.accepted += vr.accepted;
        st.out.qd.emitted += vr.accepted + (vr.extra ? 1 : 0);

        for (int i = 0; i < vr.accepted; ++i) {
            st.commit(proposals.tokens[i], stage_kind::draft, true, std::nullopt, vr.divs[i]);
        }
        if (vr.extra) {
            const std::optional<double> div_t =
                vr.full ? std::nullopt : std::optional<double>(vr.divs[vr.accepted]);
            st.commit(*vr.extra, stage_kind::target, false, std::nullopt, div_t);
        }
    }
    return st.finish();
}

decode_outcome stochastic_sd(const model_backend& draft, const model_backend& target,
                             int l_draft, const decode_config& cfg, const context& prompt) {
    check_shared_vocab(draft, target);
    if (l_draft < 1) {
        throw std::invalid_argument("decode: speculative length must be >= 1");
    }

    run_state st(prompt, cfg);
    const model_slot draft_slot{&draft, &st.out.calls.draft, &st.clock, cfg.temperature};
    const model_slot target_slot{&target, &st.out.calls.target, &st.clock, cfg.temperature};
    rng_stream root(cfg.seed);
    rng_stream rng_prop = root.derive(stream_draft);
    rng_stream rng_corr = root.derive(stream_stage1);
    rng_stream rng_accept = root.derive(stream_accept);

    while (!st.done()) {
        const int l = std::min(l_draft, st.remaining());
        st.require_capacity(static_cast<std::size_t>(l) + 1);

        // stochastic proposals are intrinsically sampled
        chain proposals = draft_chain(draft_slot, st.ctx, l, false, rng_prop);
        const auto tdists = target_slot.pass(st.ctx, proposals.tokens, true);

        int accepted = 0;
        bool rejected = false;
        for (int i = 0; i < l; ++i) {
            const token_id t = proposals.tokens[i];
            const double p_tgt = tdists[static_cast<std::size_t>(i)][t];
            const double p_dft = proposals.dists[static_cast<std::size_t>(i)][t];
            const double u = rng_accept.next_double();
            if (p_dft > 0.0 && u * p_dft < p_tgt) {
                ++accepted;
                st.commit(t, stage_kind::draft, true, std::nullopt, std::nullopt);
                continue;
            }
            // resample from the residual max(0, p_T - p_D), renormalized;
            // this is what keeps the committed marginal equal to the target's
            rejected = true;
            const auto& td = tdists[static_cast<std::size_t>(i)];
            std::vector<double> residual(static_cast<std::size_t>(td.size()));
            double sum = 0.0;
            for (std::int32_t v = 0; v < td.size(); ++v) {
                residual[static_cast<std::size_t>(v)] =
                    std::max(0.0, td[v] - proposals.dists[static_cast<std::size_t>(i)][v]);
                sum += residual[static_cast<std::size_t>(v)];
            }
            token_id correction;
            if (sum > 0.0) {
                for (double& r : residual) {
                    r /= sum;
                }
                correction = sample(distribution(std::move(residual)), rng_corr);
            } else {
                correction = sample(td, rng_corr);  // p_T == p_D pointwise
            }
            st.commit(correction, stage_kind::target, false, std::nullopt, std::nullopt);
            break;
        }

        st.out.qd.rounds += 1;
        st.out.qd.proposed += l;
        st.out.qd.accepted += accepted;
        st.out.qd.emitted += accepted + 1;

        if (!rejected) {
            const auto& bonus_dist = tdists.back();
            const token_id bonus =
                cfg.greedy ? argmax(bonus_dist) : sample(bonus_dist, rng_corr);
            st.commit(bonus, stage_kind::target, false, std::nullopt, std::nullopt);
        }
    }
    return st.finish();
}

} // namespace

void pyramid_config::validate() const {
    if (l_draft < 1 || l_qualifier < 1) {
        throw std::invalid_argument("pyramid_config: speculative lengths must be >= 1");
    }
    if (!(tau_t >= 0.0)) {
        throw std::invalid_argument("pyramid_config: tau_t must be >= 0");
    }
    if (mode == variant::psd_f && !(tau_q >= 0.0)) {
        throw std::invalid_argument("pyramid_config: tau_q must be >= 0");
    }
}

verify_result verify_block(std::span<const token_id> proposed,
                           std::span<const distribution> proposer,
                           std::span<const distribution> verifier,
                           double tau, const divergence_kind& kind,
                           correction_rule rule, rng_stream& rng) {
    if (proposed.empty()) {
        throw std::invalid_argument("verify_block: need at least one proposal");
    }
    if (proposer.size() != proposed.size()) {
        throw std::invalid_argument("verify_block: proposer distribution count mismatch");
    }
    if (verifier.size() != proposed.size() && verifier.size() != proposed.size() + 1) {
        throw std::invalid_argument("verify_block: verifier distribution count mismatch");
    }

    verify_result r;
    for (std::size_t i = 0; i < proposed.size(); ++i) {
        const double div = divergence(kind, verifier[i], proposer[i]);
        r.divs.push_back(div);
        if (div <= tau) {
            ++r.accepted;
            continue;
        }
        r.extra = rule == correction_rule::use_argmax ? argmax(verifier[i])
                                                      : sample(verifier[i], rng);
        return r;
    }
    r.full = true;
    if (verifier.size() == proposed.size() + 1) {
        const distribution& bonus = verifier.back();
        r.extra = rule == correction_rule::use_argmax ? argmax(bonus) : sample(bonus, rng);
    }
    return r;
}

decode_outcome decode_autoregressive(const model_backend& model, const context& prompt,
                                     const decode_config& cfg) {
    run_state st(prompt, cfg);
    const model_slot slot{&model, &st.out.calls.target, &st.clock, cfg.temperature};
    rng_stream rng = rng_stream(cfg.seed).derive(stream_autoregressive);

    while (!st.done()) {
        st.require_capacity(1);
        const distribution d = slot.query_one(st.ctx);
        const token_id t = cfg.greedy ? argmax(d) : sample(d, rng);
        st.commit(t, stage_kind::target, false, std::nullopt, std::nullopt);
    }
    return st.finish();
}

decode_outcome decode_sd(const model_backend& draft, const model_backend& target,
                         const context& prompt, int l_draft, sd_variant variant,
                         const decode_config& cfg) {
    if (variant == sd_variant::greedy_match) {
        return two_model_decode(draft, target, l_draft, 0.0, divergence_kind::top1(), true, cfg,
                                prompt);
    }
    return stochastic_sd(draft, target, l_draft, cfg, prompt);
}

decode_outcome decode_fsd(const model_backend& draft, const model_backend& target,
                          const context& prompt, int l_draft, double tau_t,
                          const divergence_kind& kind, const decode_config& cfg) {
    return two_model_decode(draft, target, l_draft, tau_t, kind, false, cfg, prompt);
}

decode_outcome decode_pyramid(const model_backend& draft, const model_backend& qualifier,
                              const model_backend& target, const context& prompt,
                              const pyramid_config& pc, const decode_config& cfg) {
    pc.validate();
    check_shared_vocab(draft, qualifier);
    check_shared_vocab(qualifier, target);

    run_state st(prompt, cfg);
    const model_slot draft_slot{&draft, &st.out.calls.draft, &st.clock, cfg.temperature};
    const model_slot qual_slot{&qualifier, &st.out.calls.qualifier, &st.clock, cfg.temperature};
    const model_slot target_slot{&target, &st.out.calls.target, &st.clock, cfg.temperature};

    rng_stream root(cfg.seed);
    rng_stream rng_prop = root.derive(stream_draft);
    rng_stream rng_qcorr = root.derive(stream_stage1);
    rng_stream rng_tcorr = root.derive(stream_stage2);
    const correction_rule rule = rule_for(cfg);
    const bool assisted = pc.mode == pyramid_config::variant::psd_a;

    struct block_token {
        token_id token;
        distribution qdist;  // qualifier's distribution, reused for the target comparison
        stage_kind stage;
        std::optional<double> div_q;
    };

    while (!st.done()) {
        const int want = std::min(pc.l_qualifier, st.remaining());

        // inner stage: draft proposes, qualifier verifies, until the block is full
        std::vector<block_token> block;
        context scratch = st.ctx;
        while (static_cast<int>(block.size()) < want) {
            const int l = std::min(pc.l_draft, want - static_cast<int>(block.size()));
            st.require_capacity(block.size() + static_cast<std::size_t>(l) + 2);

            chain proposals = draft_chain(draft_slot, scratch, l, assisted || cfg.greedy, rng_prop);
            const auto qdists = qual_slot.pass(scratch, proposals.tokens, true);
            const verify_result vr =
                assisted ? verify_block(proposals.tokens, proposals.dists, qdists, 0.0,
                                        divergence_kind::top1(), rule, rng_qcorr)
                         : verify_block(proposals.tokens, proposals.dists, qdists, pc.tau_q,
                                        pc.div, rule, rng_qcorr);

            st.out.qd.rounds += 1;
            st.out.qd.proposed += l;
            st.out.qd.accepted += vr.accepted;

            int appended = 0;
            for (int i = 0; i < vr.accepted; ++i) {
                block.push_back({proposals.tokens[i], qdists[static_cast<std::size_t>(i)],
                                 stage_kind::draft, vr.divs[static_cast<std::size_t>(i)]});
                scratch.push_back(proposals.tokens[i]);
                ++appended;
            }
            if (vr.extra && static_cast<int>(block.size()) < want) {
                // on rejection: the qualifier's correction (psd_f) or fallback
                // sample (psd_a); on full acceptance: the qualifier's bonus
                const stage_kind stage = !vr.full && assisted ? stage_kind::fallback
                                                              : stage_kind::qualifier;
                const std::optional<double> div_q =
                    vr.full ? std::nullopt : std::optional<double>(vr.divs[vr.accepted]);
                block.push_back({*vr.extra, qdists[static_cast<std::size_t>(vr.accepted)], stage,
                                 div_q});
                scratch.push_back(*vr.extra);
                ++appended;
            }
            st.out.qd.emitted += appended;
        }

        // outer stage: the target verifies the block against the qualifier's
        // stored distributions
        std::vector<token_id> block_tokens;
        std::vector<distribution> block_qdists;
        block_tokens.reserve(block.size());
        block_qdists.reserve(block.size());
        for (const auto& b : block) {
            block_tokens.push_back(b.token);
            block_qdists.push_back(b.qdist);
        }
        const auto tdists = target_slot.pass(st.ctx, block_tokens, true);
        const verify_result vr =
            verify_block(block_tokens, block_qdists, tdists, pc.tau_t, pc.div, rule, rng_tcorr);

        st.out.tq.rounds += 1;
        st.out.tq.proposed += static_cast<std::int64_t>(block.size());
        st.out.tq.accepted += vr.accepted;
        st.out.tq.emitted += vr.accepted + (vr.extra ? 1 : 0);

        for (int i = 0; i < vr.accepted; ++i) {
            const auto& b = block[static_cast<std::size_t>(i)];
            const bool accepted_token =
                b.stage == stage_kind::draft || b.stage == stage_kind::qualifier;
            st.commit(b.token, b.stage, accepted_token, b.div_q,
                      vr.divs[static_cast<std::size_t>(i)]);
        }
        if (vr.extra) {
            // rejection discards the block suffix; drafting restarts from the
            // corrected context on the next iteration
            const std::optional<double> div_t =
                vr.full ? std::nullopt : std::optional<double>(vr.divs[vr.accepted]);
            st.commit(*vr.extra, stage_kind::target, false, std::nullopt, div_t);
        }
    }
    return st.finish();
}

} // namespace psd
