#include "motiondiff/instructions.hpp"

#include "motiondiff/embedded_data.hpp"
#include "motiondiff/errors.hpp"

#include <fstream>
#include <sstream>

namespace motiondiff {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> lines_of(std::string_view text) {
    std::vector<std::string> out;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        auto t = trim(line);
        if (!t.empty() && t.front() != '#') out.push_back(std::move(t));
    }
    return out;
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = haystack.find(needle); pos != std::string_view::npos; pos = haystack.find(needle, pos + 1)) ++n;
    return n;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw IoError("cannot open " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

template <typename T>
const T& pick(const std::vector<T>& items, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> dist(0, items.size() - 1);
    return items[dist(rng)];
}

}  // namespace

std::map<std::string, std::vector<std::string>> parse_keyed_lists(std::string_view text) {
    std::map<std::string, std::vector<std::string>> out;
    for (const auto& line : lines_of(text)) {
        const auto colon = line.find(':');
        if (colon == std::string::npos) throw ParseError("expected 'key: values' in '" + line + "'");
        auto& values = out[trim(line.substr(0, colon))];
        std::istringstream rest(line.substr(colon + 1));
        std::string item;
        while (std::getline(rest, item, ',')) {
            auto v = trim(item);
            if (!v.empty()) values.push_back(std::move(v));
        }
    }
    return out;
}

void TemplateBank::validate(std::size_t min_templates) const {
    if (templates.size() < min_templates)
        throw ValidationError("template bank has " + std::to_string(templates.size()) + " templates, needs " +
                              std::to_string(min_templates));
    for (const auto& t : templates)
        if (count_occurrences(t, kEmotionPlaceholder) != 1)
            throw ValidationError("template must contain [EMO] exactly once: '" + t + "'");
    for (Emotion e : kAllEmotions) {
        auto it = synonyms.find(e);
        if (it == synonyms.end() || it->second.empty())
            throw ValidationError("no synonym for emotion '" + std::string(to_string(e)) + "'");
    }
}

TemplateBank TemplateBank::with_templates(std::span<const std::size_t> indices) const {
    TemplateBank out = *this;
    out.templates.clear();
    for (auto i : indices) out.templates.push_back(templates.at(i));
    return out;
}

TemplateBank TemplateBank::parse(std::string_view templates_text, std::string_view synonyms_text,
                                 std::string_view adverbs_text, std::string_view neutral_text) {
    TemplateBank bank;
    bank.templates = lines_of(templates_text);
    for (auto& [key, values] : parse_keyed_lists(synonyms_text)) bank.synonyms[parse_emotion(key)] = values;
    for (auto& [key, values] : parse_keyed_lists(adverbs_text)) {
        const int level = std::stoi(key);
        static_cast<void>(Intensity(level));
        bank.adverbs[level] = values;
    }
    bank.neutral_instructions = lines_of(neutral_text);
    return bank;
}

TemplateBank TemplateBank::load(const std::filesystem::path& dir) {
    auto bank = parse(read_file(dir / "templates.txt"), read_file(dir / "synonyms.txt"),
                      read_file(dir / "adverbs.txt"), read_file(dir / "neutral_instructions.txt"));
    bank.validate();
    return bank;
}

const TemplateBank& TemplateBank::builtin() {
    static const TemplateBank bank = [] {
        auto b = parse(embedded::templates, embedded::synonyms, embedded::adverbs, embedded::neutral_instructions);
        b.validate();
        return b;
    }();
    return bank;
}

std::string expand_emotion_label(Emotion emotion, Intensity intensity, const TemplateBank& bank,
                                 std::mt19937_64& rng) {
    if (bank.templates.empty()) throw ValidationError("template bank is empty");
    auto syn = bank.synonyms.find(emotion);
    if (syn == bank.synonyms.end() || syn->second.empty())
        throw ValidationError("no synonym for emotion '" + std::string(to_string(emotion)) + "'");

    const std::string& tmpl = pick(bank.templates, rng);
    std::string phrase = pick(syn->second, rng);
    if (intensity.level() != 2) {
        auto adv = bank.adverbs.find(intensity.level());
        if (adv != bank.adverbs.end() && !adv->second.empty()) phrase = pick(adv->second, rng) + " " + phrase;
    }
    const auto pos = tmpl.find(kEmotionPlaceholder);
    if (pos == std::string::npos) throw ValidationError("template lacks [EMO]: '" + tmpl + "'");
    std::string out = tmpl;
    out.replace(pos, kEmotionPlaceholder.size(), phrase);
    return out;
}

AUVector intersect_aus(std::span<const AUVector> frames) {
    if (frames.empty()) throw InputError("intersect_aus needs at least one frame");
    AUVector out = frames.front();
    for (const auto& f : frames.subspan(1)) out = out & f;
    return out;
}

AUVector intersect_au_bits(std::span<const std::vector<int>> frames) {
    if (frames.empty()) throw InputError("intersect_aus needs at least one frame");
    std::vector<AUVector> vecs;
    for (const auto& bits : frames) {
        if (bits.size() != frames.front().size())
            throw DimensionError("AU frames differ in length: " + std::to_string(bits.size()) + " vs " +
                                 std::to_string(frames.front().size()));
        if (bits.size() != AUVector::kSize)
            throw DimensionError("AU frame has length " + std::to_string(bits.size()) + ", expected 41");
        vecs.push_back(AUVector::from_bits(bits));
    }
    return intersect_aus(vecs);
}

std::string pseudo_neutral_instruction(std::mt19937_64& rng, const TemplateBank& bank) {
    std::bernoulli_distribution fixed(0.5);
    if (!bank.neutral_instructions.empty() && (bank.templates.empty() || fixed(rng)))
        return pick(bank.neutral_instructions, rng);
    return expand_emotion_label(Emotion::neutral, Intensity(2), bank, rng);
}

}  // namespace motiondiff
