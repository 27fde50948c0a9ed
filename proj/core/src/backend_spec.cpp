#include "psd/backend_spec.hpp"

#include "psd/remote.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace psd {

namespace {

std::map<std::string, std::string, std::less<>> parse_params(std::string_view body,
                                                             std::string_view spec) {
    std::map<std::string, std::string, std::less<>> params;
    std::size_t pos = 0;
    while (pos < body.size()) {
        std::size_t end = body.find(',', pos);
        if (end == std::string_view::npos) {
            end = body.size();
        }
        const std::string_view item = body.substr(pos, end - pos);
        pos = end + 1;
        if (item.empty()) {
            continue;
        }
        const std::size_t eq = item.find('=');
        if (eq == std::string_view::npos || eq == 0) {
            throw std::invalid_argument("backend spec '" + std::string(spec) +
                                        "': expected key=value, got '" + std::string(item) + "'");
        }
        params.emplace(std::string(item.substr(0, eq)), std::string(item.substr(eq + 1)));
    }
    return params;
}

class param_reader {
public:
    param_reader(std::map<std::string, std::string, std::less<>> params, std::string_view spec)
        : params_(std::move(params)), spec_(spec) {}

    std::optional<std::string> take(std::string_view key) {
        auto it = params_.find(key);
        if (it == params_.end()) {
            return std::nullopt;
        }
        std::string value = it->second;
        params_.erase(it);
        return value;
    }

    std::string require(std::string_view key) {
        auto v = take(key);
        if (!v) {
            throw std::invalid_argument("backend spec '" + spec_ + "': missing required key '" +
                                        std::string(key) + "'");
        }
        return *v;
    }

    template <typename T>
    T number(std::string_view key, T fallback) {
        auto v = take(key);
        if (!v) {
            return fallback;
        }
        return convert<T>(key, *v);
    }

    template <typename T>
    T require_number(std::string_view key) {
        return convert<T>(key, require(key));
    }

    template <typename T>
    std::optional<T> optional_number(std::string_view key) {
        auto v = take(key);
        if (!v) {
            return std::nullopt;
        }
        return convert<T>(key, *v);
    }

    void finish() const {
        if (!params_.empty()) {
            throw std::invalid_argument("backend spec '" + spec_ + "': unknown key '" +
                                        params_.begin()->first + "'");
        }
    }

private:
    template <typename T>
    T convert(std::string_view key, const std::string& value) const {
        T out{};
        if constexpr (std::is_floating_point_v<T>) {
            try {
                std::size_t used = 0;
                out = static_cast<T>(std::stod(value, &used));
                if (used != value.size()) {
                    throw std::invalid_argument("trailing characters");
                }
            } catch (const std::exception&) {
                throw std::invalid_argument("backend spec '" + spec_ + "': bad number for '" +
                                            std::string(key) + "'");
            }
        } else {
            auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
            if (ec != std::errc{} || ptr != value.data() + value.size()) {
                throw std::invalid_argument("backend spec '" + spec_ + "': bad integer for '" +
                                            std::string(key) + "'");
            }
        }
        return out;
    }

    std::map<std::string, std::string, std::less<>> params_;
    std::string spec_;
};

} // namespace

std::pair<vocabulary, std::vector<context>> load_text_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open corpus file " + path);
    }
    std::vector<std::vector<std::string>> lines;
    std::map<std::string, token_id> ids;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::vector<std::string> words;
        std::string w;
        while (ls >> w) {
            words.push_back(w);
            ids.emplace(w, 0);
        }
        if (!words.empty()) {
            lines.push_back(std::move(words));
        }
    }
    if (ids.size() < 2) {
        throw std::invalid_argument("corpus " + path + " needs at least 2 distinct tokens");
    }

    std::vector<std::string> words;
    words.reserve(ids.size());
    for (auto& [word, id] : ids) {
        id = static_cast<token_id>(words.size());
        words.push_back(word);
    }
    std::vector<context> sequences;
    sequences.reserve(lines.size());
    for (const auto& ws : lines) {
        context seq;
        seq.reserve(ws.size());
        for (const auto& word : ws) {
            seq.push_back(ids[word]);
        }
        sequences.push_back(std::move(seq));
    }
    return {vocabulary(std::move(words)), std::move(sequences)};
}

parsed_backend parse_backend_spec_with_vocab(std::string_view spec) {
    const std::size_t colon = spec.find(':');
    if (colon == std::string_view::npos || colon == 0) {
        throw std::invalid_argument("backend spec '" + std::string(spec) +
                                    "': expected kind:key=value,...");
    }
    const std::string kind(spec.substr(0, colon));
    param_reader params(parse_params(spec.substr(colon + 1), spec), spec);

    model_info info;
    if (auto name = params.take("name")) {
        info.name = *name;
    }
    info.param_size = params.number<std::int64_t>("params", 0);
    const auto latency = params.optional_number<double>("latency");
    const auto temp = params.optional_number<double>("temp");

    backend_ptr backend;
    std::optional<vocabulary> vocab;

    if (kind == "table") {
        const auto size = params.require_number<std::int32_t>("vocab");
        const auto seed = params.number<std::uint64_t>("seed", 1);
        const auto order = params.number<int>("order", 2);
        const auto scale = params.number<double>("scale", 4.0);
        backend = std::make_shared<table_model>(size, seed, order, scale, info);
        vocab.emplace(size);
    } else if (kind == "ngram") {
        const std::string corpus_path = params.require("corpus");
        const auto order = params.number<int>("order", 2);
        const auto k = params.number<double>("k", 1.0);
        auto [v, sequences] = load_text_corpus(corpus_path);
        backend = ngram_fit(v.size(), sequences, order, k, info);
        vocab.emplace(std::move(v));
    } else if (kind == "trace") {
        const std::string path = params.require("path");
        backend = trace_replay_open(path);  // keeps the recorded model name
        vocab.emplace(backend->vocab_size());
    } else if (kind == "remote") {
        const std::string url = params.require("url");
        const std::string model = params.require("model");
        const auto size = params.require_number<std::int32_t>("vocab");
        backend = remote_backend(url, model, size, info);
        vocab.emplace(size);
    } else {
        throw std::invalid_argument("backend spec '" + std::string(spec) + "': unknown kind '" +
                                    kind + "' (expected table, ngram, trace or remote)");
    }
    params.finish();

    if (temp) {
        backend = temperature_wrap(backend, *temp);
    }
    if (latency) {
        backend = with_latency(backend, *latency);
    }
    return {std::move(backend), std::move(*vocab)};
}

backend_ptr parse_backend_spec(std::string_view spec) {
    return parse_backend_spec_with_vocab(spec).backend;
}

} // namespace psd
