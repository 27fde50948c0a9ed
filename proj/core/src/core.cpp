#include "psd/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace psd {

vocabulary::vocabulary(std::int32_t size) : size_(size) {
    if (size < 2) {
        throw std::invalid_argument("vocabulary: size must be >= 2");
    }
}

vocabulary::vocabulary(std::vector<std::string> words)
    : size_(static_cast<std::int32_t>(words.size())), words_(std::move(words)) {
    if (size_ < 2) {
        throw std::invalid_argument("vocabulary: need at least 2 words");
    }
}

std::string_view vocabulary::display(token_id id) const {
    if (!contains(id)) {
        throw std::invalid_argument("vocabulary: token id out of range");
    }
    if (words_.empty()) {
        return {};
    }
    return words_[static_cast<std::size_t>(id)];
}

std::optional<token_id> vocabulary::find(std::string_view word) const {
    for (std::size_t i = 0; i < words_.size(); ++i) {
        if (words_[i] == word) {
            return static_cast<token_id>(i);
        }
    }
    return std::nullopt;
}

distribution::distribution(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) {
        throw std::invalid_argument("distribution: empty probability vector");
    }
    double sum = 0.0;
    for (double p : probs_) {
        if (!std::isfinite(p) || p < 0.0) {
            throw std::invalid_argument("distribution: entries must be finite and >= 0");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > sum_tolerance) {
        throw std::invalid_argument("distribution: probabilities sum to " + std::to_string(sum));
    }
}

distribution distribution::uniform(std::int32_t n) {
    if (n < 1) {
        throw std::invalid_argument("distribution::uniform: n must be >= 1");
    }
    return distribution(std::vector<double>(static_cast<std::size_t>(n), 1.0 / n), unchecked_tag{});
}

distribution distribution::delta(std::int32_t n, token_id id) {
    if (n < 1 || id < 0 || id >= n) {
        throw std::invalid_argument("distribution::delta: bad size or id");
    }
    std::vector<double> p(static_cast<std::size_t>(n), 0.0);
    p[static_cast<std::size_t>(id)] = 1.0;
    return distribution(std::move(p), unchecked_tag{});
}

void decode_config::validate() const {
    if (max_new_tokens < 0) {
        throw std::invalid_argument("decode_config: max_new_tokens must be >= 0");
    }
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw std::invalid_argument("decode_config: temperature must be positive");
    }
}

std::string_view stage_name(stage_kind s) {
    switch (s) {
        case stage_kind::draft: return "draft";
        case stage_kind::qualifier: return "qualifier";
        case stage_kind::target: return "target";
        case stage_kind::fallback: return "fallback";
    }
    return "?";
}

distribution normalize(std::span<const double> logits, double temperature) {
    if (logits.empty()) {
        throw std::invalid_argument("normalize: empty logits");
    }
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw std::invalid_argument("normalize: temperature must be positive");
    }
    double max_logit = -std::numeric_limits<double>::infinity();
    for (double l : logits) {
        if (!std::isfinite(l)) {
            throw std::invalid_argument("normalize: non-finite logit");
        }
        max_logit = std::max(max_logit, l);
    }
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp((logits[i] - max_logit) / temperature);
        sum += p[i];
    }
    for (double& v : p) {
        v /= sum;
    }
    return distribution(std::move(p), distribution::unchecked_tag{});
}

distribution apply_temperature(const distribution& p, double temperature) {
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw std::invalid_argument("apply_temperature: temperature must be positive");
    }
    if (temperature == 1.0) {
        return p;
    }
    // zero entries stay zero; positive mass is re-sharpened in log space
    double max_ln = -std::numeric_limits<double>::infinity();
    for (double v : p.probs()) {
        if (v > 0.0) {
            max_ln = std::max(max_ln, std::log(v));
        }
    }
    std::vector<double> out(p.probs().begin(), p.probs().end());
    double sum = 0.0;
    for (double& v : out) {
        v = v > 0.0 ? std::exp((std::log(v) - max_ln) / temperature) : 0.0;
        sum += v;
    }
    for (double& v : out) {
        v /= sum;
    }
    return distribution(std::move(out), distribution::unchecked_tag{});
}

token_id argmax(const distribution& p) {
    auto probs = p.probs();
    std::size_t best = 0;
    for (std::size_t i = 1; i < probs.size(); ++i) {
        if (probs[i] > probs[best]) {
            best = i;
        }
    }
    return static_cast<token_id>(best);
}

token_id sample(const distribution& p, rng_stream& rng) {
    const double u = rng.next_double();
    auto probs = p.probs();
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] > 0.0) {
            last_positive = i;
            acc += probs[i];
            if (u < acc) {
                return static_cast<token_id>(i);
            }
        }
    }
    // u landed in the rounding slack past the last bucket
    return static_cast<token_id>(last_positive);
}

} // namespace psd
