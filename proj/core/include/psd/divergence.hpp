#pragma once

#include "psd/core.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace psd {

// Divergence measure selector. kl carries an epsilon floor applied to the
// second argument only, so kl(p, p) stays 0 while avoiding infinities.
struct divergence_kind {
    enum class id { top1_mismatch, total_variation, kl };

    id which = id::total_variation;
    double kl_epsilon = 1e-10;

    static divergence_kind top1() { return {id::top1_mismatch, 1e-10}; }
    static divergence_kind tvd() { return {id::total_variation, 1e-10}; }
    static divergence_kind kl(double epsilon = 1e-10);

    std::string_view name() const;
    static std::optional<divergence_kind> parse(std::string_view name);
};

// Div(p, q) with p the later-stage (verifier) model and q the proposer.
// top1_mismatch: 0/1 on argmax equality. total_variation: 0.5 sum |p-q|.
// kl: sum p ln(p / max(q, eps)) with 0 ln 0 = 0.
double divergence(const divergence_kind& kind, const distribution& p, const distribution& q);

// Shannon entropy in nats; 0 <= entropy(p) <= ln(vocab size).
double entropy(const distribution& p);

// max_i p_i
double confidence(const distribution& p);

} // namespace psd
