#pragma once

#include "motiondiff/core.hpp"

#include <filesystem>

// Minimal reader/writer for 1-d and 2-d little-endian float arrays in the
// NumPy .npy format. Writes are always float64, C order.
namespace motiondiff::npy {

Matrix read(const std::filesystem::path& path);
void write(const std::filesystem::path& path, const Matrix& m);

}  // namespace motiondiff::npy
