#pragma once

#include "psd/common.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace psd {

// Dense integer token ids 0..size-1, optionally with display strings.
class vocabulary {
public:
    explicit vocabulary(std::int32_t size);
    explicit vocabulary(std::vector<std::string> words);

    std::int32_t size() const { return size_; }
    bool contains(token_id id) const { return id >= 0 && id < size_; }

    // display string for id, or "" when the vocabulary is purely numeric
    std::string_view display(token_id id) const;
    std::optional<token_id> find(std::string_view word) const;

private:
    std::int32_t size_ = 0;
    std::vector<std::string> words_;
};

// Probability vector over a shared vocabulary. Entries are >= 0 and sum to 1
// within sum_tolerance; validated at construction.
class distribution {
public:
    static constexpr double sum_tolerance = 1e-9;

    explicit distribution(std::vector<double> probs);

    static distribution uniform(std::int32_t n);
    static distribution delta(std::int32_t n, token_id id);

    std::span<const double> probs() const { return probs_; }
    std::int32_t size() const { return static_cast<std::int32_t>(probs_.size()); }
    double operator[](std::int32_t i) const { return probs_[static_cast<std::size_t>(i)]; }

    bool operator==(const distribution& other) const = default;

private:
    struct unchecked_tag {};
    distribution(std::vector<double> probs, unchecked_tag) : probs_(std::move(probs)) {}

    std::vector<double> probs_;

    friend distribution normalize(std::span<const double>, double);
    friend distribution apply_temperature(const distribution&, double);
};

// Prompt plus committed tokens, oldest first.
using context = std::vector<token_id>;

struct decode_config {
    int max_new_tokens = 2048;
    double temperature = 0.7;
    std::uint64_t seed = 0;
    std::optional<token_id> eos_token;
    bool greedy = false;           // argmax proposals/corrections instead of sampling
    std::size_t max_context = 1u << 20;

    void validate() const;
};

enum class stage_kind { draft, qualifier, target, fallback };

std::string_view stage_name(stage_kind s);

// One committed output token and how it came to be.
struct step_record {
    std::int64_t position = 0;
    token_id token = 0;
    stage_kind stage = stage_kind::target;
    std::optional<double> div_q;   // draft vs qualifier divergence at this position
    std::optional<double> div_t;   // final verifier divergence at this position
    bool accepted = false;
    double sim_time = 0.0;         // simulated seconds when the token was committed
};

// softmax(logits / temperature), computed with max-subtraction
distribution normalize(std::span<const double> logits, double temperature);

// p_i^{1/T} renormalized; argmax preserved, T == 1 is the identity
distribution apply_temperature(const distribution& p, double temperature);

// index of maximum probability, ties broken by lowest token id
token_id argmax(const distribution& p);

// ancestral sample; consumes exactly one draw from rng
token_id sample(const distribution& p, rng_stream& rng);

} // namespace psd
