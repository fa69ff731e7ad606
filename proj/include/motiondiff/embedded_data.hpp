#pragma once

#include <string_view>

// Contents of the versioned tables under data/, compiled into the library.
namespace motiondiff::embedded {

extern const std::string_view au_registry;
extern const std::string_view typical_aus;
extern const std::string_view templates;
extern const std::string_view synonyms;
extern const std::string_view adverbs;
extern const std::string_view neutral_instructions;
extern const std::string_view paraphrase_prompt;
extern const std::string_view motion_instructions;

}  // namespace motiondiff::embedded
