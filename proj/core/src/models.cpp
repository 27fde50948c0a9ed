#include "psd/models.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>

namespace psd {

namespace {

// window = up to the last `len` tokens; shorter near the sequence start
std::span<const token_id> tail_window(const context& ctx, int len) {
    const std::size_t n = std::min(ctx.size(), static_cast<std::size_t>(std::max(len, 0)));
    return {ctx.data() + (ctx.size() - n), n};
}

void check_tokens(std::span<const token_id> tokens, std::int32_t vocab, const char* who) {
    for (token_id t : tokens) {
        if (t < 0 || t >= vocab) {
            throw std::invalid_argument(std::string(who) + ": token id out of vocabulary range");
        }
    }
}

} // namespace

// ---------------------------------------------------------------------------
// ngram

ngram_model::ngram_model(std::int32_t vocab_size, int order, double smoothing, model_info info)
    : vocab_(vocab_size), order_(order), smoothing_(smoothing), info_(std::move(info)) {
    if (vocab_ < 2) {
        throw std::invalid_argument("ngram_model: vocabulary size must be >= 2");
    }
    if (order_ < 1) {
        throw std::invalid_argument("ngram_model: order must be >= 1");
    }
    if (!(smoothing_ > 0.0)) {
        throw std::invalid_argument("ngram_model: smoothing k must be > 0");
    }
    if (info_.name.empty()) {
        info_.name = "ngram" + std::to_string(order_);
    }
}

const ngram_model::window_counts* ngram_model::lookup(std::span<const token_id> window) const {
    auto it = std::lower_bound(table_.begin(), table_.end(), window,
                               [](const auto& entry, std::span<const token_id> key) {
                                   return std::lexicographical_compare(entry.first.begin(), entry.first.end(),
                                                                       key.begin(), key.end());
                               });
    if (it == table_.end() || it->first.size() != window.size() ||
        !std::equal(it->first.begin(), it->first.end(), window.begin())) {
        return nullptr;
    }
    return &it->second;
}

distribution ngram_model::next_distribution(const context& ctx) const {
    check_tokens(ctx, vocab_, "ngram_model");
    const auto window = tail_window(ctx, order_ - 1);
    const window_counts* counts =
        window.size() == static_cast<std::size_t>(order_ - 1) ? lookup(window) : nullptr;

    const double k = smoothing_;
    std::vector<double> probs(static_cast<std::size_t>(vocab_), 0.0);
    if (counts == nullptr) {
        // unseen context: pure add-k mass, i.e. uniform
        std::fill(probs.begin(), probs.end(), 1.0 / vocab_);
        return distribution(std::move(probs));
    }
    const double denom = static_cast<double>(counts->total) + k * vocab_;
    for (auto& p : probs) {
        p = k / denom;
    }
    for (const auto& [tok, cnt] : counts->per_token) {
        probs[static_cast<std::size_t>(tok)] = (static_cast<double>(cnt) + k) / denom;
    }
    return distribution(std::move(probs));
}

backend_ptr ngram_fit(std::int32_t vocab_size, std::span<const context> corpus,
                      int order, double smoothing, model_info info) {
    bool has_tokens = false;
    for (const auto& seq : corpus) {
        if (!seq.empty()) {
            has_tokens = true;
        }
        check_tokens(seq, vocab_size, "ngram_fit");
    }
    if (!has_tokens) {
        throw std::invalid_argument("ngram_fit: empty corpus");
    }

    auto model = std::make_shared<ngram_model>(vocab_size, order, smoothing, std::move(info));

    std::map<std::vector<token_id>, std::map<token_id, std::int64_t>> counts;
    const std::size_t w = static_cast<std::size_t>(order - 1);
    for (const auto& seq : corpus) {
        if (seq.size() < w + 1) {
            continue;
        }
        for (std::size_t i = w; i < seq.size(); ++i) {
            std::vector<token_id> window(seq.begin() + (i - w), seq.begin() + i);
            counts[std::move(window)][seq[i]] += 1;
        }
    }

    model->table_.reserve(counts.size());
    for (auto& [window, per_token] : counts) {
        ngram_model::window_counts wc;
        wc.per_token.assign(per_token.begin(), per_token.end());
        for (const auto& [tok, cnt] : wc.per_token) {
            wc.total += cnt;
        }
        model->table_.emplace_back(window, std::move(wc));
    }
    return model;
}

// ---------------------------------------------------------------------------
// table model

table_model::table_model(std::int32_t vocab_size, std::uint64_t seed, int context_order,
                         double logit_scale, model_info info)
    : vocab_(vocab_size), seed_(seed), context_order_(context_order),
      logit_scale_(logit_scale), info_(std::move(info)) {
    if (vocab_ < 2) {
        throw std::invalid_argument("table_model: vocabulary size must be >= 2");
    }
    if (context_order_ < 0) {
        throw std::invalid_argument("table_model: context order must be >= 0");
    }
    if (!(logit_scale_ > 0.0) || !std::isfinite(logit_scale_)) {
        throw std::invalid_argument("table_model: logit scale must be positive");
    }
    if (info_.name.empty()) {
        info_.name = "table";
    }
}

distribution table_model::next_distribution(const context& ctx) const {
    check_tokens(ctx, vocab_, "table_model");
    const auto window = tail_window(ctx, context_order_);
    std::uint64_t h = mix64(seed_, static_cast<std::uint64_t>(window.size()));
    for (token_id t : window) {
        h = mix64(h, static_cast<std::uint64_t>(t) + 1);
    }
    std::vector<double> logits(static_cast<std::size_t>(vocab_));
    for (std::int32_t v = 0; v < vocab_; ++v) {
        const std::uint64_t hv = mix64(h, static_cast<std::uint64_t>(v) + 0x5bd1e995ull);
        logits[static_cast<std::size_t>(v)] =
            logit_scale_ * (static_cast<double>(hv >> 11) * 0x1.0p-53);
    }
    return normalize(logits, 1.0);
}

// ---------------------------------------------------------------------------
// wrappers

namespace {

class temperature_backend final : public model_backend {
public:
    temperature_backend(backend_ptr inner, double temperature)
        : inner_(std::move(inner)), temperature_(temperature) {
        info_ = inner_->info();
        info_.name += "@T=" + std::to_string(temperature_);
    }

    distribution next_distribution(const context& ctx) const override {
        return apply_temperature(inner_->next_distribution(ctx), temperature_);
    }
    const model_info& info() const override { return info_; }
    std::int32_t vocab_size() const override { return inner_->vocab_size(); }

private:
    backend_ptr inner_;
    double temperature_;
    model_info info_;
};

class latency_backend final : public model_backend {
public:
    latency_backend(backend_ptr inner, double seconds_per_call) : inner_(std::move(inner)) {
        info_ = inner_->info();
        info_.latency_per_call = seconds_per_call;
    }

    distribution next_distribution(const context& ctx) const override {
        return inner_->next_distribution(ctx);
    }
    const model_info& info() const override { return info_; }
    std::int32_t vocab_size() const override { return inner_->vocab_size(); }

private:
    backend_ptr inner_;
    model_info info_;
};

} // namespace

backend_ptr temperature_wrap(backend_ptr inner, double temperature) {
    if (inner == nullptr) {
        throw std::invalid_argument("temperature_wrap: null backend");
    }
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw std::invalid_argument("temperature_wrap: temperature must be positive");
    }
    return std::make_shared<temperature_backend>(std::move(inner), temperature);
}

backend_ptr with_latency(backend_ptr inner, double seconds_per_call) {
    if (inner == nullptr) {
        throw std::invalid_argument("with_latency: null backend");
    }
    if (!(seconds_per_call > 0.0) || !std::isfinite(seconds_per_call)) {
        throw std::invalid_argument("with_latency: seconds_per_call must be positive");
    }
    return std::make_shared<latency_backend>(std::move(inner), seconds_per_call);
}

} // namespace psd
