#include <doctest.h>

#include "motiondiff/au_registry.hpp"
#include "motiondiff/errors.hpp"
#include "motiondiff/instructions.hpp"

#include "support.hpp"

#include <sstream>

using namespace motiondiff;

namespace {

TemplateBank one_template_bank() {
    return TemplateBank::parse("Talk with [EMO] emotion\n", "happy: delighted\n", "1: slightly\n2:\n3: extremely\n",
                               "");
}

int count_occurrences(const std::string& text, const std::string& word) {
    // Whole-word matches on the lowercase token stream.
    std::istringstream in(text);
    int n = 0;
    for (std::string tok; in >> tok;) {
        while (!tok.empty() && !std::isalnum(static_cast<unsigned char>(tok.back()))) tok.pop_back();
        for (auto& ch : tok) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        if (tok == word) ++n;
    }
    return n;
}

}  // namespace

TEST_CASE("expand_emotion_label: bare and intensified examples") {
    const auto bank = one_template_bank();
    std::mt19937_64 rng(1);
    CHECK(expand_emotion_label(Emotion::happy, Intensity(2), bank, rng) == "Talk with delighted emotion");
    CHECK(expand_emotion_label(Emotion::happy, Intensity(3), bank, rng) == "Talk with extremely delighted emotion");
    CHECK(expand_emotion_label(Emotion::happy, Intensity(1), bank, rng) == "Talk with slightly delighted emotion");
}

TEST_CASE("shipped bank is valid") {
    const auto& bank = TemplateBank::builtin();
    CHECK_NOTHROW(bank.validate());
    CHECK(bank.templates.size() >= 60);
    for (Emotion e : kAllEmotions) CHECK(!bank.synonyms.at(e).empty());
    CHECK(bank.adverbs.at(1) == std::vector<std::string>{"slightly", "a bit"});
    CHECK(bank.adverbs.at(3) == std::vector<std::string>{"extremely", "very"});
    CHECK(bank.adverbs.at(2).empty());
}

TEST_CASE("bank validation rejects bad templates") {
    CHECK_THROWS_AS(TemplateBank::parse("no placeholder\n", "happy: glad\n", "", "").validate(1), ValidationError);
    CHECK_THROWS_AS(TemplateBank::parse("[EMO] and [EMO]\n", "happy: glad\n", "", "").validate(1), ValidationError);
    CHECK_THROWS_AS(one_template_bank().validate(), ValidationError);  // fewer than 60
}

TEST_CASE("10^4 draws observe every template") {
    const auto& bank = TemplateBank::builtin();
    std::mt19937_64 rng(2);
    std::set<std::string> prefixes;
    std::vector<bool> seen(bank.templates.size(), false);
    for (int i = 0; i < 10000; ++i) {
        const auto out = expand_emotion_label(Emotion::sad, Intensity(2), bank, rng);
        for (std::size_t k = 0; k < bank.templates.size(); ++k) {
            const auto& t = bank.templates[k];
            const auto pos = t.find("[EMO]");
            const auto head = t.substr(0, pos), tail = t.substr(pos + 5);
            if (out.size() >= head.size() + tail.size() && out.compare(0, head.size(), head) == 0 &&
                out.compare(out.size() - tail.size(), tail.size(), tail) == 0) {
                const auto middle = out.substr(head.size(), out.size() - head.size() - tail.size());
                for (const auto& s : bank.synonyms.at(Emotion::sad))
                    if (middle == s) seen[k] = true;
            }
        }
    }
    for (std::size_t k = 0; k < seen.size(); ++k) {
        INFO(bank.templates[k]);
        CHECK(seen[k]);
    }
}

TEST_CASE("property: exactly one synonym and an adverb iff intensity is not 2") {
    const auto& bank = TemplateBank::builtin();
    std::mt19937_64 rng(3);
    std::set<std::string> all_adverbs;
    for (const auto& [lvl, advs] : bank.adverbs) all_adverbs.insert(advs.begin(), advs.end());
    for (int i = 0; i < 2000; ++i) {
        const Emotion e = kAllEmotions[i % 8];
        const int level = 1 + (i / 8) % 3;
        const auto out = expand_emotion_label(e, Intensity(level), bank, rng);
        // The phrase fills the [EMO] slot; recover it from whichever template matches.
        std::string phrase;
        for (const auto& t : bank.templates) {
            const auto pos = t.find("[EMO]");
            const auto head = t.substr(0, pos), tail = t.substr(pos + 5);
            if (out.size() > head.size() + tail.size() && out.compare(0, head.size(), head) == 0 &&
                out.compare(out.size() - tail.size(), tail.size(), tail) == 0) {
                phrase = out.substr(head.size(), out.size() - head.size() - tail.size());
                break;
            }
        }
        REQUIRE(!phrase.empty());
        int synonyms = 0;
        std::string rest = phrase;
        for (const auto& s : bank.synonyms.at(e))
            if (phrase.size() >= s.size() && phrase.compare(phrase.size() - s.size(), s.size(), s) == 0) {
                ++synonyms;
                rest = phrase.substr(0, phrase.size() - s.size());
            }
        CHECK(synonyms == 1);
        while (!rest.empty() && rest.back() == ' ') rest.pop_back();
        if (level == 2) {
            CHECK(rest.empty());
        } else {
            const auto& advs = bank.adverbs.at(level);
            CHECK(std::find(advs.begin(), advs.end(), rest) != advs.end());
        }
        for (const auto& a : all_adverbs)
            if (level == 2) CHECK(count_occurrences(out, a) == 0);
    }
}

TEST_CASE("expansion is deterministic per rng state") {
    const auto& bank = TemplateBank::builtin();
    std::mt19937_64 a(9), b(9);
    for (int i = 0; i < 50; ++i)
        CHECK(expand_emotion_label(Emotion::fear, Intensity(3), bank, a) ==
              expand_emotion_label(Emotion::fear, Intensity(3), bank, b));
}

TEST_CASE("intersect_aus truth table and identities") {
    std::vector<std::vector<int>> frames(3, std::vector<int>(41, 0));
    frames[0][0] = frames[0][1] = 1;
    frames[1][0] = 1;
    frames[2][0] = frames[2][1] = frames[2][2] = 1;
    const auto out = intersect_au_bits(frames);
    std::vector<int> expect(41, 0);
    expect[0] = 1;
    CHECK(out.to_bits() == expect);
    CHECK(out.to_bits() == oracle::bitwise_and(frames));

    std::mt19937_64 rng(4);
    const auto x = AUVector::from_bits(testing::random_bits(41, rng));
    const std::vector<AUVector> single{x};
    CHECK(intersect_aus(single) == x);
    const std::vector<AUVector> with_zero{x, AUVector{}};
    CHECK(intersect_aus(with_zero).none());

    std::vector<std::vector<int>> ragged{std::vector<int>(41, 1), std::vector<int>(40, 1)};
    CHECK_THROWS_AS(intersect_au_bits(ragged), DimensionError);
    CHECK_THROWS_AS(intersect_aus(std::vector<AUVector>{}), InputError);
}

TEST_CASE("property: intersection is idempotent, commutative and associative") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 500; ++i) {
        const auto a = AUVector::from_bits(testing::random_bits(41, rng, 0.6));
        const auto b = AUVector::from_bits(testing::random_bits(41, rng, 0.6));
        const auto c = AUVector::from_bits(testing::random_bits(41, rng, 0.6));
        auto I = [](std::vector<AUVector> v) { return intersect_aus(v); };
        CHECK(I({a, a}) == a);
        CHECK(I({a, b}) == I({b, a}));
        CHECK(I({I({a, b}), c}) == I({a, I({b, c})}));
        CHECK(I({a, b, c}).to_bits() == oracle::bitwise_and({a.to_bits(), b.to_bits(), c.to_bits()}));
    }
}

TEST_CASE("pseudo-neutral instructions") {
    const auto& bank = TemplateBank::builtin();
    std::mt19937_64 rng(6);
    std::set<std::string> outputs;
    const auto& neutral = bank.synonyms.at(Emotion::neutral);
    for (int i = 0; i < 100; ++i) {
        const auto out = pseudo_neutral_instruction(rng, bank);
        outputs.insert(out);
        bool has = false;
        for (const auto& s : neutral) has |= count_occurrences(out, s) > 0;
        INFO(out);
        CHECK(has);
    }
    CHECK(outputs.count("Talk with neutral emotion") == 1);
    CHECK(outputs.count("Talk with an emotionless face") == 1);
}
