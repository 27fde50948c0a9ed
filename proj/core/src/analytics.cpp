#include "psd/analytics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace psd {

using nlohmann::json;

void throughput_inputs::validate() const {
    if (!(beta >= 0.0) || !(beta <= 1.0)) {
        throw std::invalid_argument("throughput_inputs: beta must be in [0, 1]");
    }
    if (ell < 1) {
        throw std::invalid_argument("throughput_inputs: ell must be >= 1");
    }
    if (!(v_proposer > 0.0) || !(v_verifier > 0.0)) {
        throw std::invalid_argument("throughput_inputs: speeds must be positive");
    }
}

double v_sd(const throughput_inputs& in) {
    in.validate();
    return in.beta * (in.ell + 1) / (in.ell / in.v_proposer + 1.0 / in.v_verifier);
}

double v_fsd_qd(const throughput_inputs& in) {
    return v_sd(in);  // same form, (beta_QD, ell_D, V_D, V_Q)
}

double v_psd(double beta_tq, int ell_q, double v_fsd, double v_t) {
    if (!(v_fsd > 0.0) || !(v_t > 0.0)) {
        throw std::invalid_argument("v_psd: speeds must be positive");
    }
    throughput_inputs in{beta_tq, ell_q, v_fsd, v_t};
    return v_sd(in);
}

namespace {

const stage_counters& counters_for(const decode_outcome& outcome, beta_stage stage) {
    return stage == beta_stage::qd ? outcome.qd : outcome.tq;
}

} // namespace

double estimate_beta(const decode_outcome& outcome, beta_stage stage) {
    const stage_counters& c = counters_for(outcome, stage);
    if (c.proposed <= 0) {
        throw undefined_rate_error("estimate_beta: no proposals at this stage");
    }
    return static_cast<double>(c.accepted) / static_cast<double>(c.proposed);
}

double round_beta(const decode_outcome& outcome, beta_stage stage, int ell) {
    const stage_counters& c = counters_for(outcome, stage);
    if (c.rounds <= 0) {
        throw undefined_rate_error("round_beta: no rounds at this stage");
    }
    if (ell < 1) {
        throw std::invalid_argument("round_beta: ell must be >= 1");
    }
    const double mean_emitted = static_cast<double>(c.emitted) / static_cast<double>(c.rounds);
    return std::min(1.0, mean_emitted / (ell + 1));
}

double predicted_tok_s_sd(const decode_outcome& outcome, int l_draft, double v_d, double v_t) {
    return v_sd({round_beta(outcome, beta_stage::qd, l_draft), l_draft, v_d, v_t});
}

double predicted_tok_s_pyramid(const decode_outcome& outcome, int l_draft, int l_qualifier,
                               double v_d, double v_q, double v_t) {
    const double inner = v_fsd_qd({round_beta(outcome, beta_stage::qd, l_draft), l_draft, v_d, v_q});
    return v_psd(round_beta(outcome, beta_stage::tq, l_qualifier), l_qualifier, inner, v_t);
}

// ---------------------------------------------------------------------------
// behavior analysis

void behavior_histogram::add(double value) {
    if (!(hi > lo)) {
        throw std::invalid_argument("behavior_histogram: empty range");
    }
    const double clamped = std::clamp(value, lo, hi);
    int bin = static_cast<int>((clamped - lo) / (hi - lo) * behavior_bins);
    bin = std::clamp(bin, 0, behavior_bins - 1);
    counts[static_cast<std::size_t>(bin)] += 1;
}

std::int64_t behavior_histogram::total() const {
    std::int64_t sum = 0;
    for (std::int64_t c : counts) {
        sum += c;
    }
    return sum;
}

behavior_summary summarize_behavior(std::span<const backend_ptr> models,
                                    std::span<const context> prompts, int steps) {
    if (models.empty()) {
        throw std::invalid_argument("summarize_behavior: no models");
    }
    if (prompts.empty() || steps < 1) {
        throw std::invalid_argument("summarize_behavior: need prompts and steps >= 1");
    }
    const std::int32_t vocab = models.front()->vocab_size();
    for (const auto& m : models) {
        if (m->vocab_size() != vocab) {
            throw std::invalid_argument("summarize_behavior: vocabulary size mismatch");
        }
    }

    behavior_summary summary;
    for (const auto& m : models) {
        model_behavior mb;
        mb.model = m->info().name;
        mb.entropy_hist.lo = 0.0;
        mb.entropy_hist.hi = std::log(static_cast<double>(vocab));
        mb.confidence_hist.lo = 0.0;
        mb.confidence_hist.hi = 1.0;

        double entropy_sum = 0.0;
        double confidence_sum = 0.0;
        for (const context& prompt : prompts) {
            context ctx = prompt;
            for (int s = 0; s < steps; ++s) {
                const distribution d = m->next_distribution(ctx);
                const double h = entropy(d);
                const double c = confidence(d);
                entropy_sum += h;
                confidence_sum += c;
                mb.entropy_hist.add(h);
                mb.confidence_hist.add(c);
                ctx.push_back(argmax(d));
                mb.steps += 1;
            }
        }
        mb.mean_entropy = entropy_sum / static_cast<double>(mb.steps);
        mb.mean_confidence = confidence_sum / static_cast<double>(mb.steps);
        summary.models.push_back(std::move(mb));
    }
    return summary;
}

std::string behavior_csv(const behavior_summary& summary) {
    std::string out = "model,metric,bin_lo,bin_hi,count\n";
    char line[160];
    for (const auto& mb : summary.models) {
        const struct {
            const char* metric;
            const behavior_histogram* hist;
        } metrics[] = {{"entropy", &mb.entropy_hist}, {"confidence", &mb.confidence_hist}};
        for (const auto& [metric, hist] : metrics) {
            const double width = (hist->hi - hist->lo) / behavior_bins;
            for (int b = 0; b < behavior_bins; ++b) {
                std::snprintf(line, sizeof(line), "%s,%s,%.9g,%.9g,%lld\n", mb.model.c_str(),
                              metric, hist->lo + b * width, hist->lo + (b + 1) * width,
                              static_cast<long long>(hist->counts[static_cast<std::size_t>(b)]));
                out += line;
            }
        }
    }
    return out;
}

std::string behavior_json(const behavior_summary& summary) {
    json root = json::array();
    for (const auto& mb : summary.models) {
        json hist_e = json::array();
        json hist_c = json::array();
        for (int b = 0; b < behavior_bins; ++b) {
            hist_e.push_back(mb.entropy_hist.counts[static_cast<std::size_t>(b)]);
            hist_c.push_back(mb.confidence_hist.counts[static_cast<std::size_t>(b)]);
        }
        root.push_back({{"model", mb.model},
                        {"steps", mb.steps},
                        {"mean_entropy", mb.mean_entropy},
                        {"mean_confidence", mb.mean_confidence},
                        {"entropy_range", {mb.entropy_hist.lo, mb.entropy_hist.hi}},
                        {"confidence_range", {mb.confidence_hist.lo, mb.confidence_hist.hi}},
                        {"entropy_hist", hist_e},
                        {"confidence_hist", hist_c}});
    }
    return root.dump(2);
}

} // namespace psd
