#include "psd/remote.hpp"

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <mutex>
#include <thread>

namespace psd {

using nlohmann::json;

namespace {

class remote_model final : public model_backend {
public:
    remote_model(std::string url, std::string model_name, std::int32_t vocab_size, model_info info)
        : url_(std::move(url)), model_name_(std::move(model_name)), vocab_(vocab_size),
          info_(std::move(info)), client_(url_) {
        if (vocab_ < 2) {
            throw std::invalid_argument("remote_backend: vocabulary size must be >= 2");
        }
        if (info_.name.empty()) {
            info_.name = model_name_;
        }
        client_.set_keep_alive(true);
    }

    distribution next_distribution(const context& ctx) const override {
        const json body = {{"model", model_name_}, {"ctx", ctx}};
        httplib::Result res = [&] {
            // one client connection; decoders are sequential, sweep workers
            // clone backends per worker
            std::lock_guard<std::mutex> lock(mutex_);
            return client_.Post("/v1/distribution", body.dump(), "application/json");
        }();
        if (!res) {
            throw remote_backend_error(describe(ctx, "endpoint unreachable"));
        }
        json reply;
        try {
            reply = json::parse(res->body);
        } catch (const json::exception&) {
            throw remote_backend_error(describe(ctx, "malformed response body"));
        }
        if (res->status < 200 || res->status >= 300) {
            const std::string msg = reply.is_object() ? reply.value("error", std::string("?"))
                                                      : std::string("?");
            throw remote_backend_error(describe(ctx, "server error: " + msg));
        }
        if (!reply.is_object() || !reply.contains("probs")) {
            throw remote_backend_error(describe(ctx, "response missing probs"));
        }
        std::vector<double> probs;
        try {
            probs = reply["probs"].get<std::vector<double>>();
        } catch (const json::exception&) {
            throw remote_backend_error(describe(ctx, "probs is not a number array"));
        }
        if (static_cast<std::int32_t>(probs.size()) != vocab_) {
            throw remote_backend_error(describe(ctx, "probs length != vocab size"));
        }
        try {
            return distribution(std::move(probs));
        } catch (const std::invalid_argument& e) {
            throw remote_backend_error(describe(ctx, e.what()));
        }
    }

    const model_info& info() const override { return info_; }
    std::int32_t vocab_size() const override { return vocab_; }

private:
    std::string describe(const context& ctx, const std::string& what) const {
        return "remote backend " + url_ + " (model " + model_name_ + ", context length " +
               std::to_string(ctx.size()) + "): " + what;
    }

    std::string url_;
    std::string model_name_;
    std::int32_t vocab_;
    model_info info_;
    mutable std::mutex mutex_;
    mutable httplib::Client client_;
};

} // namespace

backend_ptr remote_backend(const std::string& endpoint_url, const std::string& model_name,
                           std::int32_t vocab_size, model_info info) {
    return std::make_shared<remote_model>(endpoint_url, model_name, vocab_size, std::move(info));
}

// ---------------------------------------------------------------------------
// server side

struct serve_handle::impl {
    backend_ptr backend;
    httplib::Server server;
    std::thread listener;
    std::thread monitor;
    int port = 0;
    std::string bind_address;
    std::uint64_t max_requests = 0;
    std::atomic<std::uint64_t> served{0};
    std::atomic<bool> stopped{false};

    void stop() {
        bool expected = false;
        if (!stopped.compare_exchange_strong(expected, true)) {
            return;
        }
        server.stop();
        if (listener.joinable()) {
            listener.join();
        }
        if (monitor.joinable()) {
            monitor.join();
        }
    }
};

serve_handle::serve_handle(std::unique_ptr<impl> p) : impl_(std::move(p)) {}
serve_handle::serve_handle(serve_handle&&) noexcept = default;
serve_handle& serve_handle::operator=(serve_handle&&) noexcept = default;

serve_handle::~serve_handle() {
    if (impl_) {
        impl_->stop();
    }
}

int serve_handle::port() const { return impl_->port; }

std::string serve_handle::url() const {
    return "http://" + impl_->bind_address + ":" + std::to_string(impl_->port);
}

std::uint64_t serve_handle::requests_served() const { return impl_->served.load(); }

void serve_handle::stop() { impl_->stop(); }

serve_handle serve_backend(backend_ptr backend, const std::string& bind_address, int port,
                           std::uint64_t max_requests) {
    if (backend == nullptr) {
        throw std::invalid_argument("serve_backend: null backend");
    }
    auto state = std::make_unique<serve_handle::impl>();
    state->backend = std::move(backend);
    state->bind_address = bind_address;
    state->max_requests = max_requests;

    auto* raw = state.get();
    state->server.Post("/v1/distribution", [raw](const httplib::Request& req,
                                                 httplib::Response& res) {
        res.set_header("Content-Type", "application/json");
        json reply;
        try {
            const json body = json::parse(req.body);
            const std::string model = body.value("model", std::string{});
            if (!model.empty() && model != raw->backend->info().name) {
                res.status = 404;
                reply = {{"error", "unknown model '" + model + "'"}};
            } else if (!body.contains("ctx") || !body["ctx"].is_array()) {
                res.status = 400;
                reply = {{"error", "request needs a ctx array of token ids"}};
            } else {
                const context ctx = body["ctx"].get<context>();
                const distribution dist = raw->backend->next_distribution(ctx);
                reply = {{"probs", std::vector<double>(dist.probs().begin(), dist.probs().end())}};
            }
        } catch (const std::exception& e) {
            res.status = 400;
            reply = {{"error", e.what()}};
        }
        res.body = reply.dump();
        raw->served.fetch_add(1);
    });

    if (port == 0) {
        const int chosen = state->server.bind_to_any_port(bind_address);
        if (chosen <= 0) {
            throw std::runtime_error("serve_backend: cannot bind to " + bind_address);
        }
        state->port = chosen;
    } else {
        if (!state->server.bind_to_port(bind_address, port)) {
            throw std::runtime_error("serve_backend: cannot bind to " + bind_address + ":" +
                                     std::to_string(port));
        }
        state->port = port;
    }

    state->listener = std::thread([raw] { raw->server.listen_after_bind(); });
    if (max_requests > 0) {
        state->monitor = std::thread([raw] {
            while (!raw->stopped.load() && raw->served.load() < raw->max_requests) {
                std::this_thread::sleep_for(std::chrono::milliseconds(5));
            }
            if (!raw->stopped.load()) {
                raw->server.stop();
            }
        });
    }
    // wait for the listener to come up so callers can connect immediately
    for (int i = 0; i < 1000 && !raw->server.is_running(); ++i) {
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
    return serve_handle(std::move(state));
}

} // namespace psd
