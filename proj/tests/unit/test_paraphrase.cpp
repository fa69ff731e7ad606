#include <doctest.h>

#include "motiondiff/au_registry.hpp"
#include "motiondiff/errors.hpp"
#include "motiondiff/paraphrase.hpp"

#include "support.hpp"

#include <httplib.h>
#include <json.hpp>

#include <cmath>
#include <thread>

using namespace motiondiff;

namespace {

class CannedClient final : public ParaphraseClient {
public:
    explicit CannedClient(ParaphraseResponse r) : response_(std::move(r)) {}
    ParaphraseResponse paraphrase(const std::vector<std::string>& names, const std::optional<std::string>&) override {
        ++calls;
        last_names = names;
        return response_;
    }
    int calls = 0;
    std::vector<std::string> last_names;

private:
    ParaphraseResponse response_;
};

AUVector aus(std::vector<std::string> names) { return AuRegistry::builtin().from_names(names); }

}  // namespace

TEST_CASE("single sentence without override passes through") {
    CannedClient client({{"drop brow and part lips"}, std::nullopt});
    std::mt19937_64 rng(1);
    const auto in = aus({"brow_lowerer", "lips_part"});
    const auto out = paraphrase_aus(in, std::nullopt, client, rng);
    CHECK(out.instruction == "drop brow and part lips");
    CHECK(out.au == in);
    CHECK(client.last_names.size() == 2);
}

TEST_CASE("fixture replay of a corrected unit set") {
    testing::TempDir dir;
    // Detector output includes a wrong unit (cheek_raiser) and misses one
    // (jaw_drop); the recorded response corrects both.
    const std::vector<std::string> detected{"brow_lowerer", "cheek_raiser", "lips_part"};
    const std::vector<std::string> corrected{"brow_lowerer", "lips_part", "jaw_drop"};
    {
        FixtureParaphraseClient writer(dir.path());
        writer.record(detected, std::string("frame_0042.png"),
                      {{"lower the brow and part the lips with the jaw dropped",
                        "brow drawn down, lips apart, jaw open",
                        "knit the brow while the jaw drops and the lips separate"},
                       corrected});
    }
    FixtureParaphraseClient replay(dir.path());
    std::mt19937_64 rng(2);
    const auto in = aus(detected);
    const auto out = paraphrase_aus(in, std::string("frame_0042.png"), replay, rng);
    CHECK(out.au == aus(corrected));
    CHECK(!(out.au == in));
    CHECK(out.instruction.find("brow") != std::string::npos);

    // A different image reference is a different fixture.
    CHECK_THROWS_AS(paraphrase_aus(in, std::string("other.png"), replay, rng), ClientError);
}

TEST_CASE("fixture key is order-insensitive and image-sensitive") {
    CHECK(fixture_key({"b", "a"}, std::nullopt) == fixture_key({"a", "b"}, std::nullopt));
    CHECK(fixture_key({"a", "b"}, std::string("x")) != fixture_key({"a", "b"}, std::nullopt));
    CHECK(fixture_key({"a"}, std::nullopt).size() == 64);
}

TEST_CASE("three sentences are chosen uniformly within 3 sigma") {
    CannedClient client({{"one", "two", "three"}, std::nullopt});
    std::mt19937_64 rng(3);
    const auto in = aus({"jaw_drop"});
    std::map<std::string, int> counts;
    const int n = 3000;
    for (int i = 0; i < n; ++i) ++counts[paraphrase_aus(in, std::nullopt, client, rng).instruction];
    const double p = 1.0 / 3.0, sigma = std::sqrt(n * p * (1 - p));
    CHECK(counts.size() == 3);
    for (const auto& [s, c] : counts) {
        INFO(s);
        CHECK(std::abs(c - n * p) <= 3 * sigma);
    }
}

TEST_CASE("unknown unit names and empty responses are rejected") {
    std::mt19937_64 rng(4);
    CannedClient bad({{"x"}, std::vector<std::string>{"brow_lowerer", "eyebrow_dance"}});
    CHECK_THROWS_WITH_AS(paraphrase_aus(aus({"jaw_drop"}), std::nullopt, bad, rng), doctest::Contains("eyebrow_dance"),
                         ContractError);
    CannedClient empty({{}, std::nullopt});
    CHECK_THROWS_AS(paraphrase_aus(aus({"jaw_drop"}), std::nullopt, empty, rng), ClientError);
    CHECK_THROWS_AS(paraphrase_aus(AUVector{}, std::nullopt, empty, rng), InputError);
}

TEST_CASE("property: paraphrase never emits units outside the registry") {
    const auto& reg = AuRegistry::builtin();
    std::mt19937_64 rng(5);
    for (int i = 0; i < 200; ++i) {
        std::vector<std::string> override_names;
        for (std::size_t k = 0; k < reg.size(); ++k)
            if (rng() % 4 == 0) override_names.push_back(reg.name(k));
        CannedClient client({{"s"}, override_names});
        auto bits = testing::random_bits(41, rng);
        bits[i % 41] = 1;
        const auto out = paraphrase_aus(AUVector::from_bits(bits), std::nullopt, client, rng);
        for (const auto& name : reg.names_of(out.au)) CHECK(reg.contains(name));
        CHECK(out.au.count() == override_names.size());
    }
}

TEST_CASE("parse free-form replies") {
    const auto r = parse_paraphrase_reply(
        "Here are three examples:\n1. \"lower the brow and part the lips\"\n2) brow drawn down, lips apart\n"
        "- knit the brow\nCorrected units: [\"brow_lowerer\", \"lips_part\"]\n");
    CHECK(r.sentences ==
          std::vector<std::string>{"lower the brow and part the lips", "brow drawn down, lips apart", "knit the brow"});
    REQUIRE(r.au_override);
    CHECK(*r.au_override == std::vector<std::string>{"brow_lowerer", "lips_part"});
    const auto j = parse_paraphrase_reply(R"({"sentences":["a","b"]})");
    CHECK(j.sentences.size() == 2);
    CHECK(!j.au_override);
    CHECK_THROWS_AS(parse_paraphrase_json("{\"nope\":1}"), ClientError);
}

TEST_CASE("prompt substitution") {
    const auto p = build_paraphrase_prompt(builtin_paraphrase_prompt(), {"brow_lowerer", "lips_part"}, std::nullopt);
    CHECK(p.find("[\"brow_lowerer\", \"lips_part\"]") != std::string::npos);
    CHECK(p.find("<au_list>") == std::string::npos);
    CHECK(p.find("<img>") == std::string::npos);
}

TEST_CASE("live client over a local chat-completion server, recorded as a fixture") {
    httplib::Server server;
    std::string seen_prompt, seen_auth;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        const auto body = nlohmann::json::parse(req.body);
        seen_prompt = body.at("messages").at(0).at("content").get<std::string>();
        seen_auth = req.get_header_value("Authorization");
        nlohmann::json reply;
        reply["choices"] = nlohmann::json::array(
            {{{"message", {{"role", "assistant"}, {"content", "1. open the jaw\n2. drop the jaw\n3. jaw falls open"}}}}});
        res.set_content(reply.dump(), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpChatCompletionAdapter http("http://127.0.0.1:" + std::to_string(port), "test-model", "secret");
    LlmParaphraseClient live(http);
    testing::TempDir dir;
    FixtureParaphraseClient recording(dir.path(), &live);
    std::mt19937_64 rng(6);
    const auto out = paraphrase_aus(aus({"jaw_drop"}), std::nullopt, recording, rng);
    CHECK(out.instruction.find("jaw") != std::string::npos);
    CHECK(seen_prompt.find("\"jaw_drop\"") != std::string::npos);
    CHECK(seen_auth == "Bearer secret");

    server.stop();
    thread.join();

    // The server is gone; the recorded fixture answers on its own.
    FixtureParaphraseClient replay(dir.path());
    const auto again = paraphrase_aus(aus({"jaw_drop"}), std::nullopt, replay, rng);
    CHECK(again.instruction.find("jaw") != std::string::npos);

    HttpChatCompletionAdapter dead("http://127.0.0.1:" + std::to_string(port), "m", "", "/v1/chat/completions", 2);
    CHECK_THROWS_AS(dead.complete("hi"), ClientError);
}
