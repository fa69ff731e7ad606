#pragma once

#include "motiondiff/au_registry.hpp"
#include "motiondiff/core.hpp"

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace motiondiff {

struct ParaphraseResponse {
    std::vector<std::string> sentences;
    // Present when the paraphraser corrected the detected action units.
    std::optional<std::vector<std::string>> au_override;
};

class ParaphraseClient {
public:
    virtual ~ParaphraseClient() = default;
    virtual ParaphraseResponse paraphrase(const std::vector<std::string>& au_names,
                                          const std::optional<std::string>& image_ref) = 0;
};

// Fixture file key: lowercase hex SHA-256 of the sorted AU names joined by
// ',' followed by '\n' and the image reference (empty when absent).
std::string fixture_key(std::vector<std::string> au_names, const std::optional<std::string>& image_ref);

// {"sentences": [...], "au": [...]} with "au" optional.
ParaphraseResponse parse_paraphrase_json(const std::string& text);
std::string paraphrase_to_json(const ParaphraseResponse& response);

// Replays recorded responses from `<dir>/<fixture_key>.json`. When a live
// client is attached, misses are forwarded to it and recorded.
class FixtureParaphraseClient final : public ParaphraseClient {
public:
    explicit FixtureParaphraseClient(std::filesystem::path dir, ParaphraseClient* live = nullptr);

    ParaphraseResponse paraphrase(const std::vector<std::string>& au_names,
                                  const std::optional<std::string>& image_ref) override;

    void record(const std::vector<std::string>& au_names, const std::optional<std::string>& image_ref,
                const ParaphraseResponse& response);

private:
    std::filesystem::path dir_;
    ParaphraseClient* live_;
    std::mutex write_mutex_;
};

// Generic chat-completion transport; one prompt in, assistant text out.
class ChatCompletionAdapter {
public:
    virtual ~ChatCompletionAdapter() = default;
    virtual std::string complete(const std::string& prompt) = 0;
};

// POSTs {"model", "messages":[{"role":"user","content":prompt}]} to
// base_url + path and returns choices[0].message.content.
class HttpChatCompletionAdapter final : public ChatCompletionAdapter {
public:
    HttpChatCompletionAdapter(std::string base_url, std::string model, std::string api_key = {},
                              std::string path = "/v1/chat/completions", int timeout_seconds = 60);

    std::string complete(const std::string& prompt) override;

private:
    std::string base_url_;
    std::string model_;
    std::string api_key_;
    std::string path_;
    int timeout_seconds_;
};

const std::string& builtin_paraphrase_prompt();

// Fills <au_list> with a JSON-style list of names and <img> with the image
// reference (or "[no image]").
std::string build_paraphrase_prompt(const std::string& prompt_template, const std::vector<std::string>& au_names,
                                    const std::optional<std::string>& image_ref);

// Accepts either the JSON response form or free text: numbered/bulleted or
// quoted lines become sentences, a bracketed list of snake_case names
// becomes the override.
ParaphraseResponse parse_paraphrase_reply(const std::string& reply);

class LlmParaphraseClient final : public ParaphraseClient {
public:
    explicit LlmParaphraseClient(ChatCompletionAdapter& adapter, std::string prompt_template = builtin_paraphrase_prompt());

    ParaphraseResponse paraphrase(const std::vector<std::string>& au_names,
                                  const std::optional<std::string>& image_ref) override;

private:
    ChatCompletionAdapter& adapter_;
    std::string prompt_template_;
};

struct ParaphraseResult {
    std::string instruction;
    AUVector au;
};

// Names the active units, asks the client, picks one sentence uniformly and
// adopts the client's AU override when given. Throws ContractError on names
// outside the registry and ClientError on an empty response.
ParaphraseResult paraphrase_aus(const AUVector& au, const std::optional<std::string>& image_ref,
                                ParaphraseClient& client, std::mt19937_64& rng,
                                const AuRegistry& registry = AuRegistry::builtin());

}  // namespace motiondiff
