#pragma once

#include "psd/core.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace psd {

struct model_info {
    std::string name;
    std::int64_t param_size = 0;    // advisory ordering metadata, not enforced
    double latency_per_call = 0.0;  // simulated seconds per forward invocation
};

// Maps a token context to a next-token distribution. Implementations are
// deterministic: same context, same distribution.
class model_backend {
public:
    virtual ~model_backend() = default;

    virtual distribution next_distribution(const context& ctx) const = 0;
    virtual const model_info& info() const = 0;
    virtual std::int32_t vocab_size() const = 0;
};

using backend_ptr = std::shared_ptr<const model_backend>;

// ---------------------------------------------------------------------------
// n-gram model with add-k smoothing
//
// P(t | ctx) = (count(ctx, t) + k) / (count(ctx, .) + k * |vocab|)
// Unseen contexts fall back to the uniform add-k distribution.

class ngram_model final : public model_backend {
public:
    ngram_model(std::int32_t vocab_size, int order, double smoothing, model_info info);

    distribution next_distribution(const context& ctx) const override;
    const model_info& info() const override { return info_; }
    std::int32_t vocab_size() const override { return vocab_; }

    int order() const { return order_; }

private:
    friend backend_ptr ngram_fit(std::int32_t, std::span<const context>, int, double, model_info);

    std::int32_t vocab_ = 0;
    int order_ = 1;
    double smoothing_ = 1.0;
    model_info info_;

    struct window_counts {
        std::vector<std::pair<token_id, std::int64_t>> per_token; // sorted by token id
        std::int64_t total = 0;
    };
    // key: packed (order-1)-token window, see source
    std::vector<std::pair<std::vector<token_id>, window_counts>> table_;

    const window_counts* lookup(std::span<const token_id> window) const;
};

backend_ptr ngram_fit(std::int32_t vocab_size, std::span<const context> corpus,
                      int order, double smoothing, model_info info = {});

// ---------------------------------------------------------------------------
// seeded hash-table model
//
// Logits are hash(seed, last `context_order` tokens, token id) mapped into
// [0, logit_scale]; fully reproducible, sharpness controlled by logit_scale.
// Backends sharing a seed but differing in context_order or logit_scale act
// like differently sized members of one family.

class table_model final : public model_backend {
public:
    table_model(std::int32_t vocab_size, std::uint64_t seed, int context_order,
                double logit_scale, model_info info);

    distribution next_distribution(const context& ctx) const override;
    const model_info& info() const override { return info_; }
    std::int32_t vocab_size() const override { return vocab_; }

private:
    std::int32_t vocab_ = 0;
    std::uint64_t seed_ = 0;
    int context_order_ = 1;
    double logit_scale_ = 1.0;
    model_info info_;
};

// ---------------------------------------------------------------------------
// wrappers

// Re-sharpens the inner model's output: p_i^{1/T} renormalized. T > 1 flattens
// (draft-like), T < 1 sharpens (target-like); argmax is preserved, so a family
// built from one base model has a provable entropy ordering.
backend_ptr temperature_wrap(backend_ptr inner, double temperature);

// Same distributions; forward invocations cost seconds_per_call of simulated
// time. The cost is per invocation regardless of how many positions a
// verification pass covers.
backend_ptr with_latency(backend_ptr inner, double seconds_per_call);

// ---------------------------------------------------------------------------
// trace record / replay
//
// File format: UTF-8, newline-delimited JSON. Line 1 is a header object
// {"version":1,"vocab_size":N,"model":"name"}; every following line is
// {"ctx":[ids...],"probs":[N reals]}. Probabilities must sum to 1 within
// 1e-6 on load.

class trace_store final : public model_backend {
public:
    trace_store(std::int32_t vocab_size, model_info info);

    distribution next_distribution(const context& ctx) const override;
    const model_info& info() const override { return info_; }
    std::int32_t vocab_size() const override { return vocab_; }

    void put(const context& ctx, distribution dist);
    std::size_t size() const { return entries_.size(); }

private:
    std::int32_t vocab_ = 0;
    model_info info_;
    std::vector<std::pair<context, distribution>> entries_; // sorted by context
};

std::size_t trace_record(const model_backend& backend, std::span<const context> contexts,
                         const std::string& path);

backend_ptr trace_replay_open(const std::string& path);

} // namespace psd
