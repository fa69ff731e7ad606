#pragma once

#include "motiondiff/core.hpp"

#include <cstdint>
#include <map>
#include <string>

namespace motiondiff {

// Named parameter matrices, iterated in canonical (lexicographic) order.
class ParameterSet {
public:
    void add(const std::string& name, Matrix value);
    bool contains(const std::string& name) const { return values_.count(name) > 0; }
    const Matrix& at(const std::string& name) const;
    Matrix& at(const std::string& name);

    const std::map<std::string, Matrix>& entries() const { return values_; }
    std::size_t size() const { return values_.size(); }
    std::size_t scalar_count() const;

    // FNV-1a over names and raw values.
    std::uint64_t fingerprint() const;

    // Largest absolute element-wise difference; throws if the name sets differ.
    double max_abs_diff(const ParameterSet& other) const;

private:
    std::map<std::string, Matrix> values_;
};

}  // namespace motiondiff
