#include "motiondiff/au_registry.hpp"

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

}  // namespace

AuRegistry AuRegistry::parse(std::string_view text) {
    AuRegistry reg;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        auto name = trim(line);
        if (name.empty() || name.front() == '#') continue;
        if (reg.index_.count(name)) throw ValidationError("duplicate AU name '" + name + "'");
        reg.index_.emplace(name, reg.names_.size());
        reg.names_.push_back(std::move(name));
    }
    if (reg.names_.size() != AUVector::kSize)
        throw ValidationError("AU registry must list 41 names, found " +
                              std::to_string(reg.names_.size()));
    return reg;
}

AuRegistry AuRegistry::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open AU registry " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

const AuRegistry& AuRegistry::builtin() {
    static const AuRegistry reg = parse(embedded::au_registry);
    return reg;
}

bool AuRegistry::contains(std::string_view name) const {
    return index_.count(std::string(name)) > 0;
}

std::size_t AuRegistry::index_of(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) throw ContractError("unknown action unit '" + std::string(name) + "'");
    return it->second;
}

std::vector<std::string> AuRegistry::names_of(const AUVector& au) const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (au.test(i)) out.push_back(names_[i]);
    return out;
}

AUVector AuRegistry::from_names(std::span<const std::string> names) const {
    AUVector out;
    for (const auto& n : names) out.set(index_of(n));
    return out;
}

}  // namespace motiondiff
