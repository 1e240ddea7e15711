#include "toolcheck/icl.hpp"

#include "toolcheck/error.hpp"

#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <thread>

namespace toolcheck {

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;    // without trailing slash
};

SplitUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw Error(ErrorKind::InvalidArgument, "base url needs a scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    SplitUrl out;
    out.origin = url.substr(0, path_start);
    out.path = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
    return out;
}

bool retryable(int status) { return status == 429 || status >= 500; }

}  // namespace

HttpChatClient::HttpChatClient(HttpClientConfig config) : config_(std::move(config)) {
    if (config_.model.empty()) throw Error(ErrorKind::InvalidArgument, "http client needs a model id");
    if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
    if (api_key_.empty())
        throw Error(ErrorKind::ClientError, "environment variable " + config_.api_key_env + " is not set");
}

Value HttpChatClient::request_body(const std::vector<ChatMessage>& messages, const CompletionParams& params) const {
    Value body = Value::object();
    body["model"] = config_.model;
    body["messages"] = Value::array();
    for (const auto& m : messages) body["messages"].push_back(message_to_json(m));
    body["temperature"] = params.temperature;
    body["max_tokens"] = params.max_tokens;
    return body;
}

Completion HttpChatClient::parse_response(const std::string& body) {
    Value v;
    try {
        v = Value::parse(body);
    } catch (const std::exception& e) {
        throw Error(ErrorKind::ClientError, std::string("response is not JSON: ") + e.what());
    }
    if (v.contains("error")) throw Error(ErrorKind::ClientError, "provider error: " + v["error"].dump());
    Completion c;
    try {
        const auto& content = v.at("choices").at(0).at("message").at("content");
        c.text = content.is_string() ? content.get<std::string>() : std::string();
    } catch (const std::exception&) {
        throw Error(ErrorKind::ClientError, "response has no choices[0].message.content");
    }
    if (auto u = v.find("usage"); u != v.end() && u->is_object()) {
        c.usage.prompt_tokens = u->value("prompt_tokens", std::int64_t{0});
        c.usage.generated_tokens = u->value("completion_tokens", std::int64_t{0});
    }
    return c;
}

Completion HttpChatClient::complete(const std::vector<ChatMessage>& messages, const CompletionParams& params) {
    SplitUrl url = split_url(config_.base_url);
    // One client per call: httplib clients are not safe to share across threads.
    httplib::Client cli(url.origin);
    cli.set_connection_timeout(config_.timeout_seconds, 0);
    cli.set_read_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};
    const std::string body = request_body(messages, params).dump();
    const std::string path = url.path + "/chat/completions";

    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(500 << (attempt - 1)));
        auto res = cli.Post(path, headers, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 200) return parse_response(res->body);
        last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 500);
        if (!retryable(res->status)) break;
    }
    throw Error(ErrorKind::ClientError, last_error);
}

}  // namespace toolcheck
