#pragma once

#include "psd/decoding.hpp"
#include "psd/models.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace psd {

struct throughput_inputs {
    double beta = 1.0;        // acceptance rate in [0, 1]
    int ell = 1;              // speculative length
    double v_proposer = 1.0;  // tokens/s
    double v_verifier = 1.0;  // tokens/s

    void validate() const;
};

// beta (ell + 1) / (ell / V_D + 1 / V_T)
double v_sd(const throughput_inputs& in);

// same form for the draft->qualifier stage: beta_QD (ell_D + 1) / (ell_D / V_D + 1 / V_Q)
double v_fsd_qd(const throughput_inputs& in);

// beta_TQ (ell_Q + 1) / (ell_Q / V_FSD + 1 / V_T)
double v_psd(double beta_tq, int ell_q, double v_fsd, double v_t);

enum class beta_stage { qd, tq };

// Per-token acceptance rate: accepted / proposed at that stage.
double estimate_beta(const decode_outcome& outcome, beta_stage stage);

// Per-round rate entering the throughput equations: mean tokens emitted per
// round (accepted prefix plus correction or bonus) divided by ell + 1.
double round_beta(const decode_outcome& outcome, beta_stage stage, int ell);

// Composed analytical prediction for a finished run, from the measured
// per-round rates and the wrapped model speeds (tokens/s).
double predicted_tok_s_sd(const decode_outcome& outcome, int l_draft, double v_d, double v_t);
double predicted_tok_s_pyramid(const decode_outcome& outcome, int l_draft, int l_qualifier,
                               double v_d, double v_q, double v_t);

// ---------------------------------------------------------------------------
// behavior analysis: entropy / confidence per decoding step

inline constexpr int behavior_bins = 32;

struct behavior_histogram {
    double lo = 0.0;
    double hi = 1.0;
    std::array<std::int64_t, behavior_bins> counts{};

    void add(double value);
    std::int64_t total() const;
};

struct model_behavior {
    std::string model;
    std::int64_t steps = 0;
    double mean_entropy = 0.0;
    double mean_confidence = 0.0;
    behavior_histogram entropy_hist;     // range [0, ln vocab]
    behavior_histogram confidence_hist;  // range [0, 1]
};

struct behavior_summary {
    std::vector<model_behavior> models;
};

// Decodes `steps` greedy steps per prompt with each model, recording the
// entropy and confidence of the model's raw next-token distribution at every
// step.
behavior_summary summarize_behavior(std::span<const backend_ptr> models,
                                    std::span<const context> prompts, int steps);

// CSV columns: model,metric,bin_lo,bin_hi,count
std::string behavior_csv(const behavior_summary& summary);
std::string behavior_json(const behavior_summary& summary);

} // namespace psd
