#include "darkselect/matrix_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "darkselect/error.hpp"

namespace darkselect {

namespace {

constexpr char kMagic[4] = {'M', 'T', 'X', '1'};
constexpr std::uint8_t kDtypeF32 = 0;

static_assert(std::endian::native == std::endian::little,
              "MTX1 I/O assumes a little-endian host");

void put_u32(std::ofstream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t get_u32(std::ifstream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
}

}  // namespace

MatrixF read_matrix(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open matrix file: " + path.string());

    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw ValidationError("bad magic in matrix file: " + path.string());

    const std::uint32_t rows = get_u32(in);
    const std::uint32_t cols = get_u32(in);
    std::uint8_t dtype = 0xff;
    in.read(reinterpret_cast<char*>(&dtype), 1);
    if (!in) throw ValidationError("truncated matrix header: " + path.string());
    if (dtype != kDtypeF32)
        throw ValidationError("unsupported matrix dtype " +
                              std::to_string(int(dtype)) + ": " + path.string());

    const std::uint64_t n = std::uint64_t(rows) * cols;
    const std::uint64_t expect = 13 + n * 4;
    in.seekg(0, std::ios::end);
    const std::uint64_t size = static_cast<std::uint64_t>(in.tellg());
    if (size != expect)
        throw ValidationError("matrix payload size mismatch: header says " +
                              std::to_string(rows) + "x" + std::to_string(cols) +
                              " (" + std::to_string(expect) + " bytes), file has " +
                              std::to_string(size) + ": " + path.string());
    in.seekg(13, std::ios::beg);

    MatrixF m(rows, cols);
    if (n > 0) {
        in.read(reinterpret_cast<char*>(m.data()), std::streamsize(n * 4));
        if (!in) throw IoError("short read in matrix payload: " + path.string());
    }
    for (std::uint64_t i = 0; i < n; ++i)
        if (!std::isfinite(m.data()[i]))
            throw ValidationError("non-finite value in matrix: " + path.string());
    return m;
}

void write_matrix(const MatrixF& m, const std::filesystem::path& path) {
    const std::uint64_t n = std::uint64_t(m.rows()) * std::uint64_t(m.cols());
    for (std::uint64_t i = 0; i < n; ++i)
        if (!std::isfinite(m.data()[i]))
            throw ValidationError("refusing to write non-finite matrix value");

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create matrix file: " + path.string());
    out.write(kMagic, 4);
    put_u32(out, static_cast<std::uint32_t>(m.rows()));
    put_u32(out, static_cast<std::uint32_t>(m.cols()));
    out.put(char(kDtypeF32));
    if (n > 0)
        out.write(reinterpret_cast<const char*>(m.data()), std::streamsize(n * 4));
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace darkselect
