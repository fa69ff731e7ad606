#include "motiondiff/npy.hpp"

#include "motiondiff/errors.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <regex>
#include <vector>

namespace motiondiff::npy {

namespace {

constexpr char kMagic[] = "\x93NUMPY";

std::vector<long> parse_shape(const std::string& header, const std::string& path) {
    std::smatch m;
    static const std::regex shape_re(R"('shape'\s*:\s*\(([^)]*)\))");
    if (!std::regex_search(header, m, shape_re)) throw ParseError(path + ": npy header has no shape");
    std::vector<long> dims;
    std::string body = m[1];
    std::regex num_re(R"(\d+)");
    for (auto it = std::sregex_iterator(body.begin(), body.end(), num_re); it != std::sregex_iterator();
         ++it)
        dims.push_back(std::stol(it->str()));
    return dims;
}

}  // namespace

Matrix read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[6];
    in.read(magic, 6);
    if (!in || std::memcmp(magic, kMagic, 6) != 0) throw ParseError(path.string() + ": not an npy file");
    unsigned char version[2];
    in.read(reinterpret_cast<char*>(version), 2);
    std::uint32_t header_len = 0;
    if (version[0] == 1) {
        unsigned char b[2];
        in.read(reinterpret_cast<char*>(b), 2);
        header_len = b[0] | (b[1] << 8);
    } else {
        unsigned char b[4];
        in.read(reinterpret_cast<char*>(b), 4);
        header_len = b[0] | (b[1] << 8) | (b[2] << 16) | (std::uint32_t(b[3]) << 24);
    }
    std::string header(header_len, '\0');
    in.read(header.data(), header_len);
    if (!in) throw ParseError(path.string() + ": truncated npy header");

    if (header.find("'fortran_order': True") != std::string::npos)
        throw ParseError(path.string() + ": fortran-order arrays are not supported");
    const bool is_f8 = header.find("'<f8'") != std::string::npos;
    const bool is_f4 = header.find("'<f4'") != std::string::npos;
    if (!is_f8 && !is_f4) throw ParseError(path.string() + ": only <f8 and <f4 dtypes are supported");

    const auto dims = parse_shape(header, path.string());
    long rows = 1, cols = 1;
    if (dims.size() == 1) {
        cols = dims[0];
    } else if (dims.size() == 2) {
        rows = dims[0];
        cols = dims[1];
    } else {
        throw ParseError(path.string() + ": expected a 1-d or 2-d array");
    }

    Matrix m(rows, cols);
    const std::size_t n = static_cast<std::size_t>(rows * cols);
    if (is_f8) {
        std::vector<double> buf(n);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * 8));
        if (!in) throw ParseError(path.string() + ": truncated npy data");
        for (long r = 0; r < rows; ++r)
            for (long c = 0; c < cols; ++c) m(r, c) = buf[r * cols + c];
    } else {
        std::vector<float> buf(n);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * 4));
        if (!in) throw ParseError(path.string() + ": truncated npy data");
        for (long r = 0; r < rows; ++r)
            for (long c = 0; c < cols; ++c) m(r, c) = buf[r * cols + c];
    }
    return m;
}

void write(const std::filesystem::path& path, const Matrix& m) {
    std::string header = "{'descr': '<f8', 'fortran_order': False, 'shape': (" +
                         std::to_string(m.rows()) + ", " + std::to_string(m.cols()) + "), }";
    // magic(6) + version(2) + len(2) + header + '\n' must be a multiple of 64
    const std::size_t unpadded = 10 + header.size() + 1;
    header.append((64 - unpadded % 64) % 64, ' ');
    header.push_back('\n');

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(kMagic, 6);
    const char version[2] = {1, 0};
    out.write(version, 2);
    const std::uint16_t len = static_cast<std::uint16_t>(header.size());
    const char len_bytes[2] = {static_cast<char>(len & 0xff), static_cast<char>(len >> 8)};
    out.write(len_bytes, 2);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    std::vector<double> buf(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) buf[r * m.cols() + c] = m(r, c);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 8));
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace motiondiff::npy
