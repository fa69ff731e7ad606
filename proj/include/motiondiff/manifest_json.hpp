#pragma once

#include "motiondiff/manifest.hpp"

#include <json.hpp>

namespace motiondiff {

// Field-level conversion without invariant checks; callers that accept
// partially annotated records (e.g. annotate) validate afterwards.
ManifestEntry entry_from_json(const nlohmann::json& j, std::size_t line_no);
nlohmann::ordered_json entry_to_json(const ManifestEntry& entry);

}  // namespace motiondiff
