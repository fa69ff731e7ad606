#include "motiondiff/paraphrase.hpp"

#include "motiondiff/embedded_data.hpp"
#include "motiondiff/errors.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>

namespace motiondiff {

namespace {

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 computation failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::string fixture_key(std::vector<std::string> au_names, const std::optional<std::string>& image_ref) {
    std::sort(au_names.begin(), au_names.end());
    std::string material;
    for (std::size_t i = 0; i < au_names.size(); ++i) {
        if (i) material.push_back(',');
        material += au_names[i];
    }
    material.push_back('\n');
    if (image_ref) material += *image_ref;
    return sha256_hex(material);
}

ParaphraseResponse parse_paraphrase_json(const std::string& text) {
    ParaphraseResponse r;
    try {
        const auto j = nlohmann::json::parse(text);
        r.sentences = j.at("sentences").get<std::vector<std::string>>();
        if (j.contains("au") && !j.at("au").is_null()) r.au_override = j.at("au").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& err) {
        throw ClientError(std::string("malformed paraphrase response: ") + err.what());
    }
    return r;
}

std::string paraphrase_to_json(const ParaphraseResponse& response) {
    nlohmann::ordered_json j;
    j["sentences"] = response.sentences;
    if (response.au_override) j["au"] = *response.au_override;
    return j.dump(2);
}

FixtureParaphraseClient::FixtureParaphraseClient(std::filesystem::path dir, ParaphraseClient* live)
    : dir_(std::move(dir)), live_(live) {}

ParaphraseResponse FixtureParaphraseClient::paraphrase(const std::vector<std::string>& au_names,
                                                       const std::optional<std::string>& image_ref) {
    const auto path = dir_ / (fixture_key(au_names, image_ref) + ".json");
    std::ifstream in(path);
    if (in) {
        std::stringstream ss;
        ss << in.rdbuf();
        return parse_paraphrase_json(ss.str());
    }
    if (!live_) throw ClientError("no paraphrase fixture " + path.filename().string() + " and no live client");
    auto response = live_->paraphrase(au_names, image_ref);
    record(au_names, image_ref, response);
    return response;
}

void FixtureParaphraseClient::record(const std::vector<std::string>& au_names,
                                     const std::optional<std::string>& image_ref,
                                     const ParaphraseResponse& response) {
    std::lock_guard lock(write_mutex_);
    std::filesystem::create_directories(dir_);
    const auto path = dir_ / (fixture_key(au_names, image_ref) + ".json");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write fixture " + path.string());
    out << paraphrase_to_json(response) << '\n';
}

const std::string& builtin_paraphrase_prompt() {
    static const std::string prompt(embedded::paraphrase_prompt);
    return prompt;
}

std::string build_paraphrase_prompt(const std::string& prompt_template, const std::vector<std::string>& au_names,
                                    const std::optional<std::string>& image_ref) {
    std::string list = "[";
    for (std::size_t i = 0; i < au_names.size(); ++i) {
        if (i) list += ", ";
        list += "\"" + au_names[i] + "\"";
    }
    list += "]";
    std::string out = prompt_template;
    auto replace_all = [&out](const std::string& from, const std::string& to) {
        for (auto pos = out.find(from); pos != std::string::npos; pos = out.find(from, pos + to.size()))
            out.replace(pos, from.size(), to);
    };
    replace_all("<au_list>", list);
    replace_all("<img>", image_ref ? *image_ref : std::string("[no image]"));
    return out;
}

ParaphraseResponse parse_paraphrase_reply(const std::string& reply) {
    const auto body = trim(reply);
    if (!body.empty() && body.front() == '{') return parse_paraphrase_json(body);

    static const std::regex bullet(R"(^\s*(?:\d+\s*[.):]|[-*•])\s*(.*)$)");
    static const std::regex quoted_name(R"re("([a-z]+(?:_[a-z]+)+)")re");
    ParaphraseResponse r;
    std::istringstream in(reply);
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) continue;
        const auto open = line.find('[');
        if (open != std::string::npos && line.find(']', open) != std::string::npos) {
            std::vector<std::string> names;
            const auto inside = line.substr(open, line.find(']', open) - open + 1);
            for (auto it = std::sregex_iterator(inside.begin(), inside.end(), quoted_name); it != std::sregex_iterator(); ++it)
                names.push_back((*it)[1]);
            if (!names.empty()) {
                r.au_override = std::move(names);
                continue;
            }
        }
        std::smatch m;
        std::string sentence = std::regex_match(line, m, bullet) ? std::string(m[1]) : line;
        sentence = trim(sentence);
        if (sentence.size() >= 2 && (sentence.front() == '"' || sentence.front() == '\'') &&
            sentence.back() == sentence.front())
            sentence = sentence.substr(1, sentence.size() - 2);
        if (sentence.empty() || sentence.back() == ':') continue;
        r.sentences.push_back(sentence);
    }
    return r;
}

LlmParaphraseClient::LlmParaphraseClient(ChatCompletionAdapter& adapter, std::string prompt_template)
    : adapter_(adapter), prompt_template_(std::move(prompt_template)) {}

ParaphraseResponse LlmParaphraseClient::paraphrase(const std::vector<std::string>& au_names,
                                                   const std::optional<std::string>& image_ref) {
    return parse_paraphrase_reply(adapter_.complete(build_paraphrase_prompt(prompt_template_, au_names, image_ref)));
}

ParaphraseResult paraphrase_aus(const AUVector& au, const std::optional<std::string>& image_ref,
                                ParaphraseClient& client, std::mt19937_64& rng, const AuRegistry& registry) {
    if (au.none()) throw InputError("paraphrase_aus needs at least one active action unit");
    const auto names = registry.names_of(au);
    auto response = client.paraphrase(names, image_ref);
    if (response.sentences.empty()) throw ClientError("paraphrase client returned no sentences");

    ParaphraseResult out;
    out.au = au;
    if (response.au_override) out.au = registry.from_names(*response.au_override);
    std::uniform_int_distribution<std::size_t> dist(0, response.sentences.size() - 1);
    out.instruction = response.sentences[dist(rng)];
    return out;
}

}  // namespace motiondiff
