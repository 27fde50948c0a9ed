#include "psd/divergence.hpp"

#include <cmath>
#include <stdexcept>

namespace psd {

divergence_kind divergence_kind::kl(double epsilon) {
    if (!(epsilon > 0.0)) {
        throw std::invalid_argument("divergence_kind::kl: epsilon floor must be > 0");
    }
    return {id::kl, epsilon};
}

std::string_view divergence_kind::name() const {
    switch (which) {
        case id::top1_mismatch: return "top1";
        case id::total_variation: return "tvd";
        case id::kl: return "kl";
    }
    return "?";
}

std::optional<divergence_kind> divergence_kind::parse(std::string_view name) {
    if (name == "top1" || name == "top1_mismatch") return top1();
    if (name == "tvd" || name == "total_variation") return tvd();
    if (name == "kl") return kl();
    return std::nullopt;
}

double divergence(const divergence_kind& kind, const distribution& p, const distribution& q) {
    if (p.size() != q.size()) {
        throw std::invalid_argument("divergence: vocabulary size mismatch");
    }
    switch (kind.which) {
        case divergence_kind::id::top1_mismatch:
            return argmax(p) == argmax(q) ? 0.0 : 1.0;
        case divergence_kind::id::total_variation: {
            double sum = 0.0;
            for (std::int32_t i = 0; i < p.size(); ++i) {
                sum += std::abs(p[i] - q[i]);
            }
            return 0.5 * sum;
        }
        case divergence_kind::id::kl: {
            const double eps = kind.kl_epsilon;
            double sum = 0.0;
            for (std::int32_t i = 0; i < p.size(); ++i) {
                if (p[i] > 0.0) {
                    sum += p[i] * std::log(p[i] / std::max(q[i], eps));
                }
            }
            return sum;
        }
    }
    throw std::invalid_argument("divergence: unknown kind");
}

double entropy(const distribution& p) {
    double sum = 0.0;
    for (double v : p.probs()) {
        if (v > 0.0) {
            sum -= v * std::log(v);
        }
    }
    return std::max(sum, 0.0);
}

double confidence(const distribution& p) {
    double best = 0.0;
    for (double v : p.probs()) {
        best = std::max(best, v);
    }
    return best;
}

} // namespace psd
