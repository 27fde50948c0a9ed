#include "psd/models.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace psd {

using nlohmann::json;

namespace {

std::string format_context(const context& ctx) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < ctx.size(); ++i) {
        if (i) os << " ";
        os << ctx[i];
    }
    os << "]";
    return os.str();
}

} // namespace

trace_store::trace_store(std::int32_t vocab_size, model_info info)
    : vocab_(vocab_size), info_(std::move(info)) {
    if (vocab_ < 2) {
        throw std::invalid_argument("trace_store: vocabulary size must be >= 2");
    }
    if (info_.name.empty()) {
        info_.name = "trace";
    }
}

void trace_store::put(const context& ctx, distribution dist) {
    if (dist.size() != vocab_) {
        throw std::invalid_argument("trace_store: distribution size mismatch");
    }
    auto it = std::lower_bound(entries_.begin(), entries_.end(), ctx,
                               [](const auto& e, const context& key) { return e.first < key; });
    if (it != entries_.end() && it->first == ctx) {
        it->second = std::move(dist);
    } else {
        entries_.emplace(it, ctx, std::move(dist));
    }
}

distribution trace_store::next_distribution(const context& ctx) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), ctx,
                               [](const auto& e, const context& key) { return e.first < key; });
    if (it == entries_.end() || it->first != ctx) {
        throw trace_miss_error("trace miss: no recorded distribution for context " +
                               format_context(ctx));
    }
    return it->second;
}

std::size_t trace_record(const model_backend& backend, std::span<const context> contexts,
                         const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("trace_record: cannot open " + path + " for writing");
    }
    json header = {{"version", 1}, {"vocab_size", backend.vocab_size()}, {"model", backend.info().name}};
    out << header.dump() << "\n";
    for (const context& ctx : contexts) {
        const distribution dist = backend.next_distribution(ctx);
        json line = {{"ctx", ctx}, {"probs", std::vector<double>(dist.probs().begin(), dist.probs().end())}};
        out << line.dump() << "\n";
    }
    out.flush();
    if (!out) {
        throw std::runtime_error("trace_record: write failed for " + path);
    }
    return contexts.size();
}

backend_ptr trace_replay_open(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("trace_replay_open: cannot open " + path);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("trace_replay_open: " + path + " is empty");
    }

    json header;
    try {
        header = json::parse(line);
    } catch (const json::exception& e) {
        throw std::runtime_error("trace_replay_open: bad header in " + path + ": " + e.what());
    }
    if (!header.is_object() || header.value("version", 0) != 1 || !header.contains("vocab_size")) {
        throw std::runtime_error("trace_replay_open: unsupported header in " + path);
    }
    const std::int32_t vocab = header["vocab_size"].get<std::int32_t>();

    model_info info;
    info.name = header.value("model", std::string("trace"));
    auto store = std::make_shared<trace_store>(vocab, info);

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw std::runtime_error("trace_replay_open: " + path + ":" + std::to_string(line_no) +
                                     ": " + e.what());
        }
        if (!rec.contains("ctx") || !rec.contains("probs")) {
            throw std::runtime_error("trace_replay_open: " + path + ":" + std::to_string(line_no) +
                                     ": record needs ctx and probs");
        }
        context ctx = rec["ctx"].get<context>();
        std::vector<double> probs = rec["probs"].get<std::vector<double>>();
        if (static_cast<std::int32_t>(probs.size()) != vocab) {
            throw std::runtime_error("trace_replay_open: " + path + ":" + std::to_string(line_no) +
                                     ": probs length != vocab_size");
        }
        double sum = 0.0;
        for (double p : probs) {
            if (!std::isfinite(p) || p < 0.0) {
                throw std::runtime_error("trace_replay_open: " + path + ":" +
                                         std::to_string(line_no) + ": bad probability");
            }
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-6) {
            throw std::runtime_error("trace_replay_open: " + path + ":" + std::to_string(line_no) +
                                     ": probabilities sum to " + std::to_string(sum));
        }
        // keep recorded bits when already within the strict tolerance
        if (std::abs(sum - 1.0) > distribution::sum_tolerance) {
            for (double& p : probs) {
                p /= sum;
            }
        }
        store->put(ctx, distribution(std::move(probs)));
    }
    return store;
}

} // namespace psd
