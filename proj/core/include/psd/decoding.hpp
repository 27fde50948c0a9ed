#pragma once

#include "psd/core.hpp"
#include "psd/divergence.hpp"
#include "psd/models.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace psd {

// Bookkeeping for one verification stage. `accepted` counts verification
// events as they happened, including tokens a later stage rolled back;
// `emitted` additionally counts the correction or bonus token each round
// contributes.
struct stage_counters {
    std::int64_t rounds = 0;
    std::int64_t proposed = 0;
    std::int64_t accepted = 0;
    std::int64_t emitted = 0;
};

struct call_counts {
    std::int64_t draft = 0;
    std::int64_t qualifier = 0;
    std::int64_t target = 0;
};

struct decode_outcome {
    std::vector<token_id> tokens;       // committed, prompt excluded
    std::vector<step_record> records;   // one per committed token, in order
    stage_counters qd;                  // draft proposals vs their verifier
    stage_counters tq;                  // qualifier block vs target (pyramid only)
    call_counts calls;                  // forward invocations per model
    double sim_elapsed = 0.0;
};

struct pyramid_config {
    enum class variant { psd_f, psd_a };

    int l_draft = 2;                // tokens drafted per inner round
    int l_qualifier = 4;            // qualifier-approved block handed to the target
    double tau_q = 0.3;             // unused in psd_a mode
    double tau_t = 0.4;
    divergence_kind div = divergence_kind::tvd();
    variant mode = variant::psd_f;

    void validate() const;
};

enum class correction_rule { use_argmax, use_sample };

struct verify_result {
    int accepted = 0;                 // accepted prefix length
    std::optional<token_id> extra;    // correction on rejection, bonus on full acceptance
    bool full = false;
    std::vector<double> divs;         // divergence per scanned position
};

// Scans proposals left to right, accepting position i while
// divergence(kind, verifier[i], proposer[i]) <= tau. On the first rejection
// the correction token is drawn from verifier[i] by `rule`. When everything
// is accepted and verifier carries one extra distribution, the bonus token
// is drawn from it.
verify_result verify_block(std::span<const token_id> proposed,
                           std::span<const distribution> proposer,
                           std::span<const distribution> verifier,
                           double tau, const divergence_kind& kind,
                           correction_rule rule, rng_stream& rng);

decode_outcome decode_autoregressive(const model_backend& model, const context& prompt,
                                     const decode_config& cfg);

enum class sd_variant { greedy_match, stochastic };

// Standard speculative decoding. greedy_match proposes draft argmax tokens
// and accepts on exact top-1 agreement; stochastic uses the classical
// accept-with-min(1, p_T/p_D) rule with residual resampling, which preserves
// the target distribution exactly.
decode_outcome decode_sd(const model_backend& draft, const model_backend& target,
                         const context& prompt, int l_draft, sd_variant variant,
                         const decode_config& cfg);

// Fuzzy speculative decoding: acceptance by divergence(target, draft) <= tau.
decode_outcome decode_fsd(const model_backend& draft, const model_backend& target,
                          const context& prompt, int l_draft, double tau_t,
                          const divergence_kind& kind, const decode_config& cfg);

// Three-model decoding. The draft proposes l_draft tokens per inner round and
// the qualifier verifies them (psd_f: divergence <= tau_q; psd_a: exact top-1
// match with a qualifier-sampled fallback) until a block of l_qualifier
// exists. The target then verifies the block against the qualifier's stored
// distributions with tau_t; a rejection discards the block suffix and
// drafting restarts from the corrected context.
decode_outcome decode_pyramid(const model_backend& draft, const model_backend& qualifier,
                              const model_backend& target, const context& prompt,
                              const pyramid_config& pc, const decode_config& cfg);

} // namespace psd
