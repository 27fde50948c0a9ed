#pragma once

#include "psd/models.hpp"

#include <memory>
#include <string>

namespace psd {

// Client for the distribution wire protocol:
//   POST /v1/distribution  body {"model":"name","ctx":[ids...]}
//   success: {"probs":[N reals]}   error: {"error":"message"} with non-2xx
// One request per forward invocation. Responses are validated as
// distributions before use; failures raise remote_backend_error.
backend_ptr remote_backend(const std::string& endpoint_url, const std::string& model_name,
                           std::int32_t vocab_size, model_info info = {});

// Loopback peer for remote_backend: serves `backend` over the wire protocol
// until the handle is stopped or destroyed. Requests are handled concurrently
// and statelessly.
class serve_handle {
public:
    serve_handle(serve_handle&&) noexcept;
    serve_handle& operator=(serve_handle&&) noexcept;
    ~serve_handle();

    int port() const;
    std::string url() const;
    std::uint64_t requests_served() const;
    void stop();

private:
    friend serve_handle serve_backend(backend_ptr, const std::string&, int, std::uint64_t);
    struct impl;
    explicit serve_handle(std::unique_ptr<impl> p);
    std::unique_ptr<impl> impl_;
};

// port 0 picks an ephemeral port; max_requests 0 means unlimited.
serve_handle serve_backend(backend_ptr backend, const std::string& bind_address,
                           int port = 0, std::uint64_t max_requests = 0);

} // namespace psd
