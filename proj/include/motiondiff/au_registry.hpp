#pragma once

#include "motiondiff/core.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace motiondiff {

// Canonical ordering of the 41 action-unit names; line index is bit index.
class AuRegistry {
public:
    // Parses one name per line; blank lines and '#' comments are skipped.
    static AuRegistry parse(std::string_view text);
    static AuRegistry load(const std::filesystem::path& path);
    static const AuRegistry& builtin();

    std::size_t size() const { return names_.size(); }
    const std::string& name(std::size_t index) const { return names_.at(index); }
    const std::vector<std::string>& names() const { return names_; }
    bool contains(std::string_view name) const;

    // Throws ContractError for names outside the registry.
    std::size_t index_of(std::string_view name) const;

    std::vector<std::string> names_of(const AUVector& au) const;
    AUVector from_names(std::span<const std::string> names) const;

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace motiondiff
