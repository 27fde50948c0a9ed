#pragma once

#include "psd/analytics.hpp"
#include "psd/decoding.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace psd {

enum class method { autoregressive, sd, sd_stochastic, fsd, psd_a, psd_f };

std::string_view method_name(method m);
std::optional<method> parse_method(std::string_view name);

// draft/qualifier/target roles; two-model methods use draft and target only.
struct backend_set {
    backend_ptr draft;
    backend_ptr qualifier;
    backend_ptr target;
};

struct run_params {
    int l_draft = 2;
    int l_qualifier = 4;
    double tau_q = 0.3;
    double tau_t = 0.4;
    divergence_kind div = divergence_kind::tvd();
};

struct sim_result {
    decode_outcome outcome;
    double sim_tok_s = 0.0;
    double analytical_tok_s = 0.0;
};

// Runs the decoder for `m`, charging simulated time per forward invocation.
// sim_tok_s = committed tokens / simulated seconds; a run with no elapsed
// time raises undefined_rate_error.
sim_result simulate_run(method m, const backend_set& models, const run_params& params,
                        const context& prompt, const decode_config& cfg);

// ---------------------------------------------------------------------------
// grid sweep

struct sweep_grid {
    std::vector<method> methods;         // subset of {sd, fsd, psd_a, psd_f}
    std::vector<double> tau_q_values;
    std::vector<double> tau_t_values;
    std::vector<int> l_d_values;
    std::vector<int> l_q_values;
    std::vector<std::uint64_t> seeds;
    std::vector<context> prompts;

    bool nest_tau = true;                // psd_f pairs constrained to tau_q <= tau_t
    bool require_ld_le_lq = true;        // pyramid cells keep l_d <= l_q

    divergence_kind div = divergence_kind::tvd();
    decode_config base_cfg;
    backend_set models;

    void validate() const;
};

struct sweep_point {
    method m = method::sd;
    std::optional<double> tau_q;         // psd_f only
    std::optional<double> tau_t;         // fsd / psd_a / psd_f
    int l_d = 1;
    std::optional<int> l_q;              // pyramid methods only
    std::uint64_t seed = 0;
};

// sort key: method, tau_t, tau_q, l_q, l_d, seed
bool operator<(const sweep_point& a, const sweep_point& b);

struct sweep_row {
    sweep_point point;
    bool ok = false;
    std::string error;

    std::int64_t tokens = 0;
    double sim_tok_s = 0.0;
    double analytical_tok_s = 0.0;
    std::optional<double> beta_qd;
    std::optional<double> beta_tq;
    std::int64_t calls_d = 0;
    std::int64_t calls_q = 0;
    std::int64_t calls_t = 0;

    bool operator==(const sweep_row&) const;
};

struct sweep_aggregate {
    sweep_point config;                  // seed field zeroed
    int runs = 0;
    int errors = 0;
    double mean_tok_s = 0.0;
    double std_tok_s = 0.0;
    double mean_beta_qd = 0.0;
    double mean_beta_tq = 0.0;
};

struct sweep_result {
    std::vector<sweep_row> rows;         // sorted by sweep_point ordering
    std::vector<sweep_aggregate> aggregates() const;  // mean/std over seeds, error rows skipped
};

// Every configuration x seed in deterministic order; independent of how the
// work is later scheduled.
std::vector<sweep_point> enumerate_grid(const sweep_grid& grid);

// Executes every cell exactly once. Cells run in parallel up to worker_count;
// each owns its clock and rng (seeded by hashing the cell's own config), so
// results are byte-identical for any worker count. Failed cells become error
// rows, never aborting the sweep.
sweep_result run_sweep(const sweep_grid& grid, int worker_count = 1);

enum class report_format { csv, json };

// CSV columns, exactly:
// method,tau_q,tau_t,l_d,l_q,seed,tokens,sim_tok_s,analytical_tok_s,beta_qd,beta_tq,calls_d,calls_q,calls_t
// tok/s printed with two decimals. Inapplicable fields are left empty; error
// rows carry config fields only (the JSON form keeps the message).
std::string render_report(const sweep_result& result, report_format format);
std::size_t emit_report(const sweep_result& result, report_format format, const std::string& path);
sweep_result parse_report_json(const std::string& text);

// ---------------------------------------------------------------------------
// declarative grid config (JSON file; see README for the schema)

sweep_grid load_grid(const std::string& path);

// prompt file: one context per line, whitespace-separated token ids (or words
// resolved through the vocabulary when one is available)
std::vector<context> load_prompts(const std::string& path, const vocabulary* vocab = nullptr);

} // namespace psd
