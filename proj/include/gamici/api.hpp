#pragma once

// The /api endpoint table. ApiService::handle is transport-free; serve()
// binds it to an HTTP/1.1 listener.

#include <cstdint>
#include <functional>
#include <map>
#include <string>

#include "gamici/error.hpp"
#include "gamici/json.hpp"
#include "gamici/service.hpp"

namespace gamici {

struct ApiRequest {
    std::string method;
    std::string path;
    std::map<std::string, std::string> query;
    /// Header names lower-cased.
    std::map<std::string, std::string> headers;
    std::string body;
};

struct ApiResponse {
    int status = 200;
    Json body;
};

int http_status(ErrorCode code) noexcept;

class ApiService {
public:
    explicit ApiService(GameService& service, std::function<std::int64_t()> clock = unix_now);

    ApiResponse handle(const ApiRequest& request);

private:
    GameService& service_;
    std::function<std::int64_t()> clock_;
};

struct ServeOptions {
    std::string host = "0.0.0.0";
    int port = 8080;
    /// Optional directory served under / for a built dashboard.
    std::string web_root;
};

/// Blocks until the process is stopped. Returns false when the port cannot be
/// bound.
bool serve(GameService& service, const ServeOptions& options);

}  // namespace gamici
