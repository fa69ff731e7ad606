#include "motiondiff/errors.hpp"
#include "motiondiff/paraphrase.hpp"

#include <httplib.h>
#include <json.hpp>

namespace motiondiff {

HttpChatCompletionAdapter::HttpChatCompletionAdapter(std::string base_url, std::string model, std::string api_key,
                                                     std::string path, int timeout_seconds)
    : base_url_(std::move(base_url)),
      model_(std::move(model)),
      api_key_(std::move(api_key)),
      path_(std::move(path)),
      timeout_seconds_(timeout_seconds) {}

std::string HttpChatCompletionAdapter::complete(const std::string& prompt) {
    httplib::Client client(base_url_);
    client.set_read_timeout(timeout_seconds_, 0);
    client.set_connection_timeout(timeout_seconds_, 0);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    nlohmann::json body;
    body["model"] = model_;
    body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});
    auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) throw ClientError("chat completion request failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw ClientError("chat completion returned HTTP " + std::to_string(res->status));
    try {
        const auto j = nlohmann::json::parse(res->body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& err) {
        throw ClientError(std::string("malformed chat completion response: ") + err.what());
    }
}

}  // namespace motiondiff
