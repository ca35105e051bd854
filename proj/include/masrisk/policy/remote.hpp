#pragma once

#include "masrisk/core/json.hpp"
#include "masrisk/policy/policy.hpp"

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

namespace masrisk::policy {

enum class RemoteErrorCode { Timeout, HttpStatus, SchemaMismatch, Transport, Template };

std::string to_string(RemoteErrorCode code);

class RemoteError : public std::runtime_error {
public:
    RemoteError(RemoteErrorCode code, const std::string& what, int status = 0)
        : std::runtime_error(what), code_(code), status_(status) {}
    RemoteErrorCode code() const { return code_; }
    int status() const { return status_; }

private:
    RemoteErrorCode code_;
    int status_;
};

struct HttpReply {
    int status = 0;
    std::string body;
};

// Throws RemoteError with Timeout or Transport on connection-level failure.
class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpReply post(const std::string& base_url, const std::string& path, const std::string& body,
                           const std::map<std::string, std::string>& headers, int timeout_ms) = 0;
};

class HttplibTransport : public HttpTransport {
public:
    HttpReply post(const std::string& base_url, const std::string& path, const std::string& body,
                   const std::map<std::string, std::string>& headers, int timeout_ms) override;
};

struct RemoteEndpoint {
    std::string base_url;
    std::string path = "/generate";
    std::string credential;
    int max_tokens = 256;
    double temperature = 0.0;
    std::optional<std::uint64_t> seed;
    int timeout_ms = 30000;
    int retry_limit = 1;             // retries after the first attempt
    int backoff_initial_ms = 200;
    double backoff_multiplier = 2.0;
};

// Fields in `spec` win; base_url and credential fall back to MASRISK_REMOTE_URL and MASRISK_REMOTE_TOKEN.
RemoteEndpoint endpoint_from_json(const json& spec);

// Replaces {{name}} and {{a.b}} with values from `context`. Unresolved placeholders throw RemoteError(Template).
std::string render_template(const std::string& tmpl, const json& context);

// Extracts a JSON value from model text, tolerating surrounding prose and unquoted object keys.
std::optional<json> parse_model_text(const std::string& text);

// Upper bound on concurrent remote requests across all episodes (default 4).
void set_remote_inflight_cap(int cap);

// One attempt: POST {prompt, max_tokens, temperature, seed?}, read {text}, parse and validate.
json remote_call(const RemoteEndpoint& endpoint, HttpTransport& transport, const std::string& prompt, const json& schema,
                 RemoteExchange* exchange = nullptr);

class RemotePolicy : public Policy {
public:
    RemotePolicy(RemoteEndpoint endpoint, std::string template_text, json schema, std::shared_ptr<HttpTransport> transport)
        : endpoint_(std::move(endpoint)), template_(std::move(template_text)), schema_(std::move(schema)),
          transport_(std::move(transport)) {}

    std::string kind() const override { return "remote"; }
    json act(const Observation& obs, const LocalHistory& history, ActContext& ctx) const override;

private:
    RemoteEndpoint endpoint_;
    std::string template_;
    json schema_;
    std::shared_ptr<HttpTransport> transport_;
};

}  // namespace masrisk::policy
