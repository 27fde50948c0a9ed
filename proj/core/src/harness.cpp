#include "psd/harness.hpp"

#include "psd/backend_spec.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>
#include <tuple>

namespace psd {

using nlohmann::json;

std::string_view method_name(method m) {
    switch (m) {
        case method::autoregressive: return "auto";
        case method::sd: return "sd";
        case method::sd_stochastic: return "sd_stochastic";
        case method::fsd: return "fsd";
        case method::psd_a: return "psd_a";
        case method::psd_f: return "psd_f";
    }
    return "?";
}

std::optional<method> parse_method(std::string_view name) {
    if (name == "auto" || name == "autoregressive") return method::autoregressive;
    if (name == "sd") return method::sd;
    if (name == "sd_stochastic" || name == "sd-stochastic") return method::sd_stochastic;
    if (name == "fsd") return method::fsd;
    if (name == "psd_a" || name == "psd-a") return method::psd_a;
    if (name == "psd_f" || name == "psd-f") return method::psd_f;
    return std::nullopt;
}

namespace {

bool is_pyramid(method m) { return m == method::psd_a || m == method::psd_f; }

double speed_of(const backend_ptr& b, const char* role) {
    const double latency = b->info().latency_per_call;
    if (!(latency > 0.0)) {
        throw std::invalid_argument(std::string("simulate_run: ") + role +
                                    " backend must be latency-wrapped");
    }
    return 1.0 / latency;
}

} // namespace

sim_result simulate_run(method m, const backend_set& models, const run_params& params,
                        const context& prompt, const decode_config& cfg) {
    if (models.target == nullptr) {
        throw std::invalid_argument("simulate_run: target backend required");
    }
    if (m != method::autoregressive && models.draft == nullptr) {
        throw std::invalid_argument("simulate_run: draft backend required");
    }
    if (is_pyramid(m) && models.qualifier == nullptr) {
        throw std::invalid_argument("simulate_run: qualifier backend required for pyramid methods");
    }

    sim_result r;
    const double v_t = speed_of(models.target, "target");
    switch (m) {
        case method::autoregressive:
            r.outcome = decode_autoregressive(*models.target, prompt, cfg);
            r.analytical_tok_s = v_t;
            break;
        case method::sd:
        case method::sd_stochastic: {
            const double v_d = speed_of(models.draft, "draft");
            const sd_variant variant =
                m == method::sd ? sd_variant::greedy_match : sd_variant::stochastic;
            r.outcome = decode_sd(*models.draft, *models.target, prompt, params.l_draft, variant, cfg);
            r.analytical_tok_s = predicted_tok_s_sd(r.outcome, params.l_draft, v_d, v_t);
            break;
        }
        case method::fsd: {
            const double v_d = speed_of(models.draft, "draft");
            r.outcome = decode_fsd(*models.draft, *models.target, prompt, params.l_draft,
                                   params.tau_t, params.div, cfg);
            r.analytical_tok_s = predicted_tok_s_sd(r.outcome, params.l_draft, v_d, v_t);
            break;
        }
        case method::psd_a:
        case method::psd_f: {
            const double v_d = speed_of(models.draft, "draft");
            const double v_q = speed_of(models.qualifier, "qualifier");
            pyramid_config pc;
            pc.l_draft = params.l_draft;
            pc.l_qualifier = params.l_qualifier;
            pc.tau_q = params.tau_q;
            pc.tau_t = params.tau_t;
            pc.div = params.div;
            pc.mode = m == method::psd_a ? pyramid_config::variant::psd_a
                                         : pyramid_config::variant::psd_f;
            r.outcome = decode_pyramid(*models.draft, *models.qualifier, *models.target, prompt,
                                       pc, cfg);
            r.analytical_tok_s = predicted_tok_s_pyramid(r.outcome, params.l_draft,
                                                         params.l_qualifier, v_d, v_q, v_t);
            break;
        }
    }

    if (!(r.outcome.sim_elapsed > 0.0)) {
        throw undefined_rate_error("simulate_run: no simulated time elapsed");
    }
    r.sim_tok_s = static_cast<double>(r.outcome.tokens.size()) / r.outcome.sim_elapsed;
    return r;
}

// ---------------------------------------------------------------------------
// grid enumeration

void sweep_grid::validate() const {
    if (methods.empty()) {
        throw std::invalid_argument("sweep_grid: no methods");
    }
    if (seeds.empty()) {
        throw std::invalid_argument("sweep_grid: no seeds");
    }
    if (prompts.empty()) {
        throw std::invalid_argument("sweep_grid: no prompts");
    }
    if (l_d_values.empty()) {
        throw std::invalid_argument("sweep_grid: no l_d values");
    }
    if (models.draft == nullptr || models.target == nullptr) {
        throw std::invalid_argument("sweep_grid: draft and target backends required");
    }
    for (method m : methods) {
        if (m != method::sd && m != method::fsd && !is_pyramid(m)) {
            throw std::invalid_argument("sweep_grid: methods must be sd, fsd, psd_a or psd_f");
        }
        if (m != method::sd && tau_t_values.empty()) {
            throw std::invalid_argument("sweep_grid: no tau_t values");
        }
        if (m == method::psd_f && tau_q_values.empty()) {
            throw std::invalid_argument("sweep_grid: no tau_q values");
        }
        if (is_pyramid(m)) {
            if (l_q_values.empty()) {
                throw std::invalid_argument("sweep_grid: no l_q values");
            }
            if (models.qualifier == nullptr) {
                throw std::invalid_argument("sweep_grid: qualifier backend required");
            }
        }
    }
}

bool operator<(const sweep_point& a, const sweep_point& b) {
    return std::tie(a.m, a.tau_t, a.tau_q, a.l_q, a.l_d, a.seed) <
           std::tie(b.m, b.tau_t, b.tau_q, b.l_q, b.l_d, b.seed);
}

namespace {

bool same_config(const sweep_point& a, const sweep_point& b) {
    return a.m == b.m && a.tau_q == b.tau_q && a.tau_t == b.tau_t && a.l_d == b.l_d &&
           a.l_q == b.l_q;
}

bool point_equal(const sweep_point& a, const sweep_point& b) {
    return same_config(a, b) && a.seed == b.seed;
}

std::uint64_t hash_point(const sweep_point& pt) {
    auto bits = [](std::optional<double> v) {
        return v ? std::bit_cast<std::uint64_t>(*v) : ~0ull;
    };
    std::uint64_t h = mix64(0x70736477656570ull, static_cast<std::uint64_t>(pt.m));
    h = mix64(h, bits(pt.tau_q));
    h = mix64(h, bits(pt.tau_t));
    h = mix64(h, static_cast<std::uint64_t>(pt.l_d));
    h = mix64(h, pt.l_q ? static_cast<std::uint64_t>(*pt.l_q) : ~0ull);
    h = mix64(h, pt.seed);
    return h;
}

} // namespace

std::vector<sweep_point> enumerate_grid(const sweep_grid& grid) {
    grid.validate();
    std::vector<sweep_point> points;

    auto emit = [&](method m, std::optional<double> tq, std::optional<double> tt, int ld,
                    std::optional<int> lq) {
        for (std::uint64_t seed : grid.seeds) {
            points.push_back({m, tq, tt, ld, lq, seed});
        }
    };

    for (method m : grid.methods) {
        switch (m) {
            case method::sd:
                for (int ld : grid.l_d_values) {
                    emit(m, std::nullopt, std::nullopt, ld, std::nullopt);
                }
                break;
            case method::fsd:
                for (double tt : grid.tau_t_values) {
                    for (int ld : grid.l_d_values) {
                        emit(m, std::nullopt, tt, ld, std::nullopt);
                    }
                }
                break;
            case method::psd_a:
                for (double tt : grid.tau_t_values) {
                    for (int lq : grid.l_q_values) {
                        for (int ld : grid.l_d_values) {
                            if (grid.require_ld_le_lq && ld > lq) {
                                continue;
                            }
                            emit(m, std::nullopt, tt, ld, lq);
                        }
                    }
                }
                break;
            case method::psd_f:
                for (double tt : grid.tau_t_values) {
                    for (double tq : grid.tau_q_values) {
                        if (grid.nest_tau && tq > tt) {
                            continue;
                        }
                        for (int lq : grid.l_q_values) {
                            for (int ld : grid.l_d_values) {
                                if (grid.require_ld_le_lq && ld > lq) {
                                    continue;
                                }
                                emit(m, tq, tt, ld, lq);
                            }
                        }
                    }
                }
                break;
            default:
                break;  // validate() rejected these
        }
    }

    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end(), point_equal), points.end());
    return points;
}

// ---------------------------------------------------------------------------
// sweep execution

namespace {

void merge_outcome(decode_outcome& into, const decode_outcome& from) {
    into.tokens.insert(into.tokens.end(), from.tokens.begin(), from.tokens.end());
    auto add = [](stage_counters& a, const stage_counters& b) {
        a.rounds += b.rounds;
        a.proposed += b.proposed;
        a.accepted += b.accepted;
        a.emitted += b.emitted;
    };
    add(into.qd, from.qd);
    add(into.tq, from.tq);
    into.calls.draft += from.calls.draft;
    into.calls.qualifier += from.calls.qualifier;
    into.calls.target += from.calls.target;
    into.sim_elapsed += from.sim_elapsed;
}

sweep_row run_cell(const sweep_grid& grid, const sweep_point& pt) {
    sweep_row row;
    row.point = pt;
    try {
        run_params params;
        params.l_draft = pt.l_d;
        if (pt.l_q) params.l_qualifier = *pt.l_q;
        if (pt.tau_q) params.tau_q = *pt.tau_q;
        if (pt.tau_t) params.tau_t = *pt.tau_t;
        params.div = grid.div;

        const std::uint64_t cell_hash = hash_point(pt);
        decode_outcome merged;
        for (std::size_t pi = 0; pi < grid.prompts.size(); ++pi) {
            decode_config cfg = grid.base_cfg;
            cfg.seed = mix64(cell_hash, static_cast<std::uint64_t>(pi));
            const sim_result r = simulate_run(pt.m, grid.models, params, grid.prompts[pi], cfg);
            merge_outcome(merged, r.outcome);
        }

        row.tokens = static_cast<std::int64_t>(merged.tokens.size());
        if (!(merged.sim_elapsed > 0.0)) {
            throw undefined_rate_error("sweep cell: no simulated time elapsed");
        }
        row.sim_tok_s = static_cast<double>(row.tokens) / merged.sim_elapsed;
        const double v_d = 1.0 / grid.models.draft->info().latency_per_call;
        const double v_t = 1.0 / grid.models.target->info().latency_per_call;
        if (is_pyramid(pt.m)) {
            const double v_q = 1.0 / grid.models.qualifier->info().latency_per_call;
            row.analytical_tok_s = predicted_tok_s_pyramid(merged, params.l_draft,
                                                           params.l_qualifier, v_d, v_q, v_t);
            row.beta_tq = estimate_beta(merged, beta_stage::tq);
        } else {
            row.analytical_tok_s = predicted_tok_s_sd(merged, params.l_draft, v_d, v_t);
        }
        row.beta_qd = estimate_beta(merged, beta_stage::qd);
        row.calls_d = merged.calls.draft;
        row.calls_q = merged.calls.qualifier;
        row.calls_t = merged.calls.target;
        row.ok = true;
    } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
    }
    return row;
}

} // namespace

sweep_result run_sweep(const sweep_grid& grid, int worker_count) {
    const std::vector<sweep_point> points = enumerate_grid(grid);
    sweep_result result;
    result.rows.resize(points.size());

    const int workers =
        std::clamp<int>(worker_count, 1, std::max<int>(1, static_cast<int>(points.size())));
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= points.size()) {
                return;
            }
            result.rows[i] = run_cell(grid, points[i]);
        }
    };

    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back(work);
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// aggregates

std::vector<sweep_aggregate> sweep_result::aggregates() const {
    std::vector<sweep_aggregate> out;
    std::size_t i = 0;
    while (i < rows.size()) {
        std::size_t j = i;
        while (j < rows.size() && same_config(rows[j].point, rows[i].point)) {
            ++j;
        }
        sweep_aggregate agg;
        agg.config = rows[i].point;
        agg.config.seed = 0;
        double sum = 0.0, sum_bqd = 0.0, sum_btq = 0.0;
        int n_btq = 0;
        std::vector<double> values;
        for (std::size_t k = i; k < j; ++k) {
            if (!rows[k].ok) {
                agg.errors += 1;
                continue;
            }
            agg.runs += 1;
            sum += rows[k].sim_tok_s;
            values.push_back(rows[k].sim_tok_s);
            if (rows[k].beta_qd) sum_bqd += *rows[k].beta_qd;
            if (rows[k].beta_tq) {
                sum_btq += *rows[k].beta_tq;
                ++n_btq;
            }
        }
        if (agg.runs > 0) {
            agg.mean_tok_s = sum / agg.runs;
            double var = 0.0;
            for (double v : values) {
                var += (v - agg.mean_tok_s) * (v - agg.mean_tok_s);
            }
            agg.std_tok_s = agg.runs > 1 ? std::sqrt(var / (agg.runs - 1)) : 0.0;
            agg.mean_beta_qd = sum_bqd / agg.runs;
            agg.mean_beta_tq = n_btq > 0 ? sum_btq / n_btq : 0.0;
        }
        out.push_back(agg);
        i = j;
    }
    return out;
}

bool sweep_row::operator==(const sweep_row& other) const {
    return point_equal(point, other.point) && ok == other.ok && error == other.error &&
           tokens == other.tokens && sim_tok_s == other.sim_tok_s &&
           analytical_tok_s == other.analytical_tok_s && beta_qd == other.beta_qd &&
           beta_tq == other.beta_tq && calls_d == other.calls_d && calls_q == other.calls_q &&
           calls_t == other.calls_t;
}

// ---------------------------------------------------------------------------
// reports

namespace {

std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), format, v);
    return buf;
}

std::string opt_num(const std::optional<double>& v) {
    return v ? fmt("%.10g", *v) : std::string{};
}

} // namespace

std::string render_report(const sweep_result& result, report_format format) {
    if (result.rows.empty()) {
        throw std::invalid_argument("render_report: empty result");
    }
    if (format == report_format::csv) {
        std::string out =
            "method,tau_q,tau_t,l_d,l_q,seed,tokens,sim_tok_s,analytical_tok_s,beta_qd,beta_tq,"
            "calls_d,calls_q,calls_t\n";
        for (const sweep_row& row : result.rows) {
            const sweep_point& p = row.point;
            out += std::string(method_name(p.m)) + "," + opt_num(p.tau_q) + "," +
                   opt_num(p.tau_t) + "," + std::to_string(p.l_d) + "," +
                   (p.l_q ? std::to_string(*p.l_q) : std::string{}) + "," +
                   std::to_string(p.seed) + ",";
            if (row.ok) {
                out += std::to_string(row.tokens) + "," + fmt("%.2f", row.sim_tok_s) + "," +
                       fmt("%.2f", row.analytical_tok_s) + "," + opt_num(row.beta_qd) + "," +
                       opt_num(row.beta_tq) + "," + std::to_string(row.calls_d) + "," +
                       std::to_string(row.calls_q) + "," + std::to_string(row.calls_t);
            } else {
                out += ",,,,,,,";
            }
            out += "\n";
        }
        return out;
    }

    json rows = json::array();
    for (const sweep_row& row : result.rows) {
        const sweep_point& p = row.point;
        json r = {{"method", method_name(p.m)},
                  {"tau_q", p.tau_q ? json(*p.tau_q) : json(nullptr)},
                  {"tau_t", p.tau_t ? json(*p.tau_t) : json(nullptr)},
                  {"l_d", p.l_d},
                  {"l_q", p.l_q ? json(*p.l_q) : json(nullptr)},
                  {"seed", p.seed},
                  {"ok", row.ok}};
        if (row.ok) {
            r["tokens"] = row.tokens;
            r["sim_tok_s"] = row.sim_tok_s;
            r["analytical_tok_s"] = row.analytical_tok_s;
            r["beta_qd"] = row.beta_qd ? json(*row.beta_qd) : json(nullptr);
            r["beta_tq"] = row.beta_tq ? json(*row.beta_tq) : json(nullptr);
            r["calls_d"] = row.calls_d;
            r["calls_q"] = row.calls_q;
            r["calls_t"] = row.calls_t;
        } else {
            r["error"] = row.error;
        }
        rows.push_back(std::move(r));
    }

    json aggs = json::array();
    for (const sweep_aggregate& a : result.aggregates()) {
        aggs.push_back({{"method", method_name(a.config.m)},
                        {"tau_q", a.config.tau_q ? json(*a.config.tau_q) : json(nullptr)},
                        {"tau_t", a.config.tau_t ? json(*a.config.tau_t) : json(nullptr)},
                        {"l_d", a.config.l_d},
                        {"l_q", a.config.l_q ? json(*a.config.l_q) : json(nullptr)},
                        {"runs", a.runs},
                        {"errors", a.errors},
                        {"mean_tok_s", a.mean_tok_s},
                        {"std_tok_s", a.std_tok_s},
                        {"mean_beta_qd", a.mean_beta_qd},
                        {"mean_beta_tq", a.mean_beta_tq}});
    }
    const json root = {{"rows", rows}, {"aggregates", aggs}};
    return root.dump(2) + "\n";
}

std::size_t emit_report(const sweep_result& result, report_format format,
                        const std::string& path) {
    const std::string text = render_report(result, format);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("emit_report: cannot open " + path + " for writing");
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) {
        throw std::runtime_error("emit_report: write failed for " + path);
    }
    return text.size();
}

sweep_result parse_report_json(const std::string& text) {
    const json root = json::parse(text);
    if (!root.is_object() || !root.contains("rows")) {
        throw std::runtime_error("parse_report_json: missing rows");
    }
    sweep_result result;
    for (const json& r : root["rows"]) {
        sweep_row row;
        const auto m = parse_method(r.at("method").get<std::string>());
        if (!m) {
            throw std::runtime_error("parse_report_json: unknown method");
        }
        row.point.m = *m;
        if (!r.at("tau_q").is_null()) row.point.tau_q = r["tau_q"].get<double>();
        if (!r.at("tau_t").is_null()) row.point.tau_t = r["tau_t"].get<double>();
        row.point.l_d = r.at("l_d").get<int>();
        if (!r.at("l_q").is_null()) row.point.l_q = r["l_q"].get<int>();
        row.point.seed = r.at("seed").get<std::uint64_t>();
        row.ok = r.at("ok").get<bool>();
        if (row.ok) {
            row.tokens = r.at("tokens").get<std::int64_t>();
            row.sim_tok_s = r.at("sim_tok_s").get<double>();
            row.analytical_tok_s = r.at("analytical_tok_s").get<double>();
            if (!r.at("beta_qd").is_null()) row.beta_qd = r["beta_qd"].get<double>();
            if (!r.at("beta_tq").is_null()) row.beta_tq = r["beta_tq"].get<double>();
            row.calls_d = r.at("calls_d").get<std::int64_t>();
            row.calls_q = r.at("calls_q").get<std::int64_t>();
            row.calls_t = r.at("calls_t").get<std::int64_t>();
        } else {
            row.error = r.value("error", std::string{});
        }
        result.rows.push_back(std::move(row));
    }
    return result;
}

// ---------------------------------------------------------------------------
// declarative configs

std::vector<context> load_prompts(const std::string& path, const vocabulary* vocab) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open prompt file " + path);
    }
    std::vector<context> prompts;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        context ctx;
        std::string word;
        while (ls >> word) {
            const bool numeric = !word.empty() &&
                                 word.find_first_not_of("0123456789") == std::string::npos;
            if (numeric) {
                ctx.push_back(static_cast<token_id>(std::stoll(word)));
            } else if (vocab != nullptr) {
                const auto id = vocab->find(word);
                if (!id) {
                    throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                             ": word '" + word + "' not in vocabulary");
                }
                ctx.push_back(*id);
            } else {
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": non-numeric token '" + word +
                                         "' without a vocabulary to resolve it");
            }
        }
        if (!ctx.empty()) {
            prompts.push_back(std::move(ctx));
        }
    }
    if (prompts.empty()) {
        throw std::runtime_error("prompt file " + path + " has no prompts");
    }
    return prompts;
}

namespace {

std::string resolve_path(const std::string& base_dir, const std::string& path) {
    namespace fs = std::filesystem;
    if (path.empty() || fs::path(path).is_absolute() || base_dir.empty()) {
        return path;
    }
    const fs::path joined = fs::path(base_dir) / path;
    if (fs::exists(joined)) {
        return joined.string();
    }
    return path;
}

} // namespace

sweep_grid load_grid(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open grid config " + path);
    }
    json cfg;
    try {
        cfg = json::parse(in);
    } catch (const json::exception& e) {
        throw std::runtime_error("grid config " + path + ": " + e.what());
    }
    const std::string base_dir = std::filesystem::path(path).parent_path().string();

    sweep_grid grid;
    for (const auto& name : cfg.at("methods")) {
        const auto m = parse_method(name.get<std::string>());
        if (!m) {
            throw std::runtime_error("grid config: unknown method '" + name.get<std::string>() +
                                     "'");
        }
        grid.methods.push_back(*m);
    }
    grid.tau_q_values = cfg.value("tau_q", std::vector<double>{});
    grid.tau_t_values = cfg.value("tau_t", std::vector<double>{});
    grid.l_d_values = cfg.value("l_d", std::vector<int>{});
    grid.l_q_values = cfg.value("l_q", std::vector<int>{});
    grid.seeds = cfg.value("seeds", std::vector<std::uint64_t>{1});
    grid.nest_tau = cfg.value("nest_tau", true);
    grid.require_ld_le_lq = cfg.value("require_ld_le_lq", true);

    if (cfg.contains("divergence")) {
        const auto kind = divergence_kind::parse(cfg["divergence"].get<std::string>());
        if (!kind) {
            throw std::runtime_error("grid config: unknown divergence kind");
        }
        grid.div = *kind;
        if (grid.div.which == divergence_kind::id::kl && cfg.contains("kl_epsilon")) {
            grid.div.kl_epsilon = cfg["kl_epsilon"].get<double>();
        }
    }

    grid.base_cfg.max_new_tokens = cfg.value("max_new_tokens", 256);
    grid.base_cfg.temperature = cfg.value("temperature", 0.7);
    grid.base_cfg.greedy = cfg.value("greedy", false);
    if (cfg.contains("eos") && !cfg["eos"].is_null()) {
        grid.base_cfg.eos_token = cfg["eos"].get<token_id>();
    }

    const parsed_backend draft = parse_backend_spec_with_vocab(cfg.at("draft").get<std::string>());
    grid.models.draft = draft.backend;
    grid.models.target = parse_backend_spec(cfg.at("target").get<std::string>());
    if (cfg.contains("qualifier")) {
        grid.models.qualifier = parse_backend_spec(cfg["qualifier"].get<std::string>());
    }

    if (cfg.contains("prompt_ids")) {
        for (const auto& ids : cfg["prompt_ids"]) {
            grid.prompts.push_back(ids.get<context>());
        }
    }
    if (cfg.contains("prompts")) {
        const std::string prompt_path = resolve_path(base_dir, cfg["prompts"].get<std::string>());
        const auto loaded = load_prompts(prompt_path, &draft.vocab);
        grid.prompts.insert(grid.prompts.end(), loaded.begin(), loaded.end());
    }

    grid.validate();
    const std::int32_t vocab = grid.models.draft->vocab_size();
    if (grid.models.target->vocab_size() != vocab ||
        (grid.models.qualifier && grid.models.qualifier->vocab_size() != vocab)) {
        throw std::runtime_error("grid config: backends disagree on vocabulary size");
    }
    return grid;
}

} // namespace psd
