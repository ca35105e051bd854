#include "masrisk/policy/remote.hpp"

#include "masrisk/policy/schema.hpp"

#include <httplib.h>

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <regex>
#include <thread>

namespace masrisk::policy {

std::string to_string(RemoteErrorCode code) {
    switch (code) {
        case RemoteErrorCode::Timeout: return "timeout";
        case RemoteErrorCode::HttpStatus: return "http_status";
        case RemoteErrorCode::SchemaMismatch: return "schema_mismatch";
        case RemoteErrorCode::Transport: return "transport";
        case RemoteErrorCode::Template: return "template";
    }
    return "unknown";
}

namespace {

class InflightGate {
public:
    void set_cap(int cap) {
        std::lock_guard<std::mutex> lock(mu_);
        cap_ = cap < 1 ? 1 : cap;
        cv_.notify_all();
    }
    void acquire() {
        std::unique_lock<std::mutex> lock(mu_);
        cv_.wait(lock, [this] { return in_flight_ < cap_; });
        ++in_flight_;
    }
    void release() {
        std::lock_guard<std::mutex> lock(mu_);
        --in_flight_;
        cv_.notify_one();
    }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    int cap_ = 4;
    int in_flight_ = 0;
};

InflightGate& gate() {
    static InflightGate g;
    return g;
}

struct GateHold {
    GateHold() { gate().acquire(); }
    ~GateHold() { gate().release(); }
};

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return (v != nullptr && *v != '\0') ? std::string(v) : fallback;
}

const json* lookup(const json& ctx, const std::string& dotted) {
    const json* cur = &ctx;
    std::size_t start = 0;
    while (start <= dotted.size()) {
        const auto dot = dotted.find('.', start);
        const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (cur->is_object() && cur->contains(key)) {
            cur = &cur->at(key);
        } else if (cur->is_array() && !key.empty() && key.find_first_not_of("0123456789") == std::string::npos &&
                   std::stoul(key) < cur->size()) {
            cur = &cur->at(std::stoul(key));
        } else {
            return nullptr;
        }
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    return cur;
}

}  // namespace

void set_remote_inflight_cap(int cap) { gate().set_cap(cap); }

HttpReply HttplibTransport::post(const std::string& base_url, const std::string& path, const std::string& body,
                                 const std::map<std::string, std::string>& headers, int timeout_ms) {
    httplib::Client client(base_url);
    if (!client.is_valid()) {
        throw RemoteError(RemoteErrorCode::Transport, "invalid endpoint base URL '" + base_url + "'");
    }
    const auto secs = timeout_ms / 1000;
    const auto usecs = (timeout_ms % 1000) * 1000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    auto res = client.Post(path, h, body, "application/json");
    if (!res) {
        const auto err = res.error();
        if (err == httplib::Error::Read || err == httplib::Error::Write || err == httplib::Error::ConnectionTimeout) {
            throw RemoteError(RemoteErrorCode::Timeout, "request timed out (" + httplib::to_string(err) + ")");
        }
        throw RemoteError(RemoteErrorCode::Transport, "request failed (" + httplib::to_string(err) + ")");
    }
    return HttpReply{res->status, res->body};
}

RemoteEndpoint endpoint_from_json(const json& spec) {
    RemoteEndpoint e;
    e.base_url = spec.value("base_url", env_or("MASRISK_REMOTE_URL", ""));
    e.credential = spec.value("credential", env_or("MASRISK_REMOTE_TOKEN", ""));
    e.path = spec.value("path", e.path);
    e.max_tokens = spec.value("max_tokens", e.max_tokens);
    e.temperature = spec.value("temperature", e.temperature);
    if (spec.contains("seed")) e.seed = spec.at("seed").get<std::uint64_t>();
    e.timeout_ms = spec.value("timeout_ms", e.timeout_ms);
    e.retry_limit = spec.value("retry_limit", e.retry_limit);
    e.backoff_initial_ms = spec.value("backoff_initial_ms", e.backoff_initial_ms);
    e.backoff_multiplier = spec.value("backoff_multiplier", e.backoff_multiplier);
    if (e.retry_limit < 0) throw std::invalid_argument("retry_limit must be >= 0");
    return e;
}

std::string render_template(const std::string& tmpl, const json& context) {
    static const std::regex placeholder(R"(\{\{\s*([A-Za-z0-9_.]+)\s*\}\})");
    std::string out;
    auto begin = std::sregex_iterator(tmpl.begin(), tmpl.end(), placeholder);
    std::size_t last = 0;
    for (auto it = begin; it != std::sregex_iterator(); ++it) {
        const auto& m = *it;
        out.append(tmpl, last, static_cast<std::size_t>(m.position(0)) - last);
        const json* v = lookup(context, m[1].str());
        if (v == nullptr) {
            throw RemoteError(RemoteErrorCode::Template, "unresolved placeholder '" + m[1].str() + "'");
        }
        out += v->is_string() ? v->get<std::string>() : v->dump();
        last = static_cast<std::size_t>(m.position(0) + m.length(0));
    }
    out.append(tmpl, last, std::string::npos);
    if (out.find("{{") != std::string::npos) {
        throw RemoteError(RemoteErrorCode::Template, "malformed placeholder in template");
    }
    return out;
}

std::optional<json> parse_model_text(const std::string& text) {
    auto try_parse = [](const std::string& s) -> std::optional<json> {
        auto j = json::parse(s, nullptr, false);
        if (j.is_discarded()) return std::nullopt;
        return j;
    };
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return std::nullopt;
    const std::string trimmed = text.substr(first, text.find_last_not_of(" \t\r\n") - first + 1);
    if (auto j = try_parse(trimmed)) return j;
    const auto open = trimmed.find('{');
    const auto close = trimmed.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open) return std::nullopt;
    std::string obj = trimmed.substr(open, close - open + 1);
    if (auto j = try_parse(obj)) return j;
    static const std::regex bare_key(R"(([\{,]\s*)([A-Za-z_][A-Za-z0-9_]*)\s*:)");
    obj = std::regex_replace(obj, bare_key, "$1\"$2\":");
    return try_parse(obj);
}

json remote_call(const RemoteEndpoint& endpoint, HttpTransport& transport, const std::string& prompt, const json& schema,
                 RemoteExchange* exchange) {
    if (endpoint.base_url.empty()) {
        throw RemoteError(RemoteErrorCode::Transport, "no endpoint configured (set MASRISK_REMOTE_URL)");
    }
    json request{{"prompt", prompt}, {"max_tokens", endpoint.max_tokens}, {"temperature", endpoint.temperature}};
    if (endpoint.seed) request["seed"] = *endpoint.seed;
    if (exchange) exchange->request = request;
    std::map<std::string, std::string> headers;
    if (!endpoint.credential.empty()) headers["Authorization"] = "Bearer " + endpoint.credential;

    HttpReply reply;
    {
        GateHold hold;
        reply = transport.post(endpoint.base_url, endpoint.path, request.dump(), headers, endpoint.timeout_ms);
    }
    if (exchange) {
        exchange->status = reply.status;
        exchange->response_body = reply.body;
    }
    if (reply.status < 200 || reply.status > 299) {
        throw RemoteError(RemoteErrorCode::HttpStatus, "endpoint returned HTTP " + std::to_string(reply.status), reply.status);
    }
    auto envelope = json::parse(reply.body, nullptr, false);
    if (envelope.is_discarded() || !envelope.is_object() || !envelope.contains("text") || !envelope.at("text").is_string()) {
        throw RemoteError(RemoteErrorCode::SchemaMismatch, "reply is not a JSON object with a string 'text' field");
    }
    auto parsed = parse_model_text(envelope.at("text").get<std::string>());
    if (!parsed) {
        throw RemoteError(RemoteErrorCode::SchemaMismatch, "model text is not JSON: " + envelope.at("text").get<std::string>());
    }
    if (auto err = schema_violation(schema, *parsed)) {
        throw RemoteError(RemoteErrorCode::SchemaMismatch, "schema mismatch: " + *err);
    }
    return *parsed;
}

json RemotePolicy::act(const Observation& obs, const LocalHistory& history, ActContext& ctx) const {
    require_history_aligned(obs, history);
    json context{{"agent", ctx.agent_label}, {"round", obs.round}, {"phase", obs.phase}, {"broadcast_state", obs.broadcast_state},
                 {"inbox", obs.inbox}};
    std::string prompt;
    try {
        prompt = render_template(template_, context);
    } catch (const RemoteError& e) {
        throw PolicyError("remote:" + to_string(e.code()), e.what());
    }
    int delay = endpoint_.backoff_initial_ms;
    for (int attempt = 0;; ++attempt) {
        RemoteExchange ex;
        ex.agent = ctx.agent_label;
        ex.round = obs.round;
        ex.attempt = attempt;
        try {
            json action = remote_call(endpoint_, *transport_, prompt, schema_, &ex);
            if (ctx.audit) ctx.audit->push_back(ex);
            return action;
        } catch (const RemoteError& e) {
            ex.error = to_string(e.code()) + ": " + e.what();
            if (ctx.audit) ctx.audit->push_back(ex);
            if (attempt >= endpoint_.retry_limit) {
                throw PolicyError("remote:" + to_string(e.code()), e.what());
            }
        }
        if (delay > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        delay = static_cast<int>(delay * endpoint_.backoff_multiplier);
    }
}

}  // namespace masrisk::policy
