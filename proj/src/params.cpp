#include "motiondiff/params.hpp"

#include "motiondiff/errors.hpp"

#include <cmath>
#include <cstring>

namespace motiondiff {

void ParameterSet::add(const std::string& name, Matrix value) {
    if (!values_.emplace(name, std::move(value)).second)
        throw ConfigError("duplicate parameter '" + name + "'");
}

const Matrix& ParameterSet::at(const std::string& name) const {
    auto it = values_.find(name);
    if (it == values_.end()) throw ConfigError("unknown parameter '" + name + "'");
    return it->second;
}

Matrix& ParameterSet::at(const std::string& name) {
    auto it = values_.find(name);
    if (it == values_.end()) throw ConfigError("unknown parameter '" + name + "'");
    return it->second;
}

std::size_t ParameterSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& [_, m] : values_) n += static_cast<std::size_t>(m.size());
    return n;
}

std::uint64_t ParameterSet::fingerprint() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= p[i];
            h *= 1099511628211ull;
        }
    };
    for (const auto& [name, m] : values_) {
        mix(name.data(), name.size());
        mix(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double));
    }
    return h;
}

double ParameterSet::max_abs_diff(const ParameterSet& other) const {
    if (values_.size() != other.values_.size()) throw ConfigError("parameter sets differ in size");
    double worst = 0.0;
    for (const auto& [name, m] : values_) {
        const Matrix& o = other.at(name);
        if (o.rows() != m.rows() || o.cols() != m.cols())
            throw DimensionError("parameter '" + name + "' differs in shape");
        if (m.size() > 0) worst = std::max(worst, (m - o).cwiseAbs().maxCoeff());
    }
    return worst;
}

}  // namespace motiondiff
