#pragma once

#include <Eigen/Dense>
#include <filesystem>

namespace darkselect {

// Row-major float32 matrix, the in-memory form of the MTX1 file format.
using MatrixF =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// MTX1 container: magic "MTX1", rows u32, cols u32, dtype u8 (0 = float32),
// then rows*cols little-endian float32 values in row-major order.
// All values must be finite; readers and writers both enforce it.
MatrixF read_matrix(const std::filesystem::path& path);
void write_matrix(const MatrixF& m, const std::filesystem::path& path);

}  // namespace darkselect
