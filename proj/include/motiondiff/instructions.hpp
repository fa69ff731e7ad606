#pragma once

#include "motiondiff/core.hpp"

#include <filesystem>
#include <map>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace motiondiff {

inline constexpr std::string_view kEmotionPlaceholder = "[EMO]";
inline constexpr std::size_t kMinTemplates = 60;

struct TemplateBank {
    std::vector<std::string> templates;
    std::map<Emotion, std::vector<std::string>> synonyms;
    std::map<int, std::vector<std::string>> adverbs;  // intensity level -> adverbs
    std::vector<std::string> neutral_instructions;

    // Checks the shipped-bank invariants: at least `min_templates` templates,
    // [EMO] exactly once in each, and a synonym for every emotion.
    void validate(std::size_t min_templates = kMinTemplates) const;

    // Same tables restricted to the templates at `indices`.
    TemplateBank with_templates(std::span<const std::size_t> indices) const;

    static TemplateBank parse(std::string_view templates_text, std::string_view synonyms_text,
                              std::string_view adverbs_text, std::string_view neutral_text);
    // Reads templates.txt, synonyms.txt, adverbs.txt, neutral_instructions.txt.
    static TemplateBank load(const std::filesystem::path& dir);
    static const TemplateBank& builtin();
};

// Parses "key: a, b, c" lines; '#' starts a comment line.
std::map<std::string, std::vector<std::string>> parse_keyed_lists(std::string_view text);

// Uniform template, uniform synonym, and for levels 1 and 3 a uniform adverb
// placed before the synonym.
std::string expand_emotion_label(Emotion emotion, Intensity intensity, const TemplateBank& bank,
                                 std::mt19937_64& rng);

// Bitwise AND of every frame's prediction. Throws InputError when empty.
AUVector intersect_aus(std::span<const AUVector> frames);

// Raw per-frame bit lists; throws DimensionError when lengths differ.
AUVector intersect_au_bits(std::span<const std::vector<int>> frames);

// Either a fixed neutral phrase or a template expanded with a neutral synonym.
std::string pseudo_neutral_instruction(std::mt19937_64& rng, const TemplateBank& bank);

}  // namespace motiondiff
