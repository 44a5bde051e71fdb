#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>

namespace lawarea {

enum class TensorDtype : std::uint8_t { F32 = 1, F64 = 2 };

/// Binary matrix file: "LATN", version byte, dtype byte, two reserved bytes,
/// rows and cols as little-endian u64, then row-major little-endian values.
void save_tensor(const std::filesystem::path& path, const Eigen::MatrixXd& m, TensorDtype dtype = TensorDtype::F64);
/// Values are widened to double. Throws Error(MalformedFile) or Error(IoError).
Eigen::MatrixXd load_tensor(const std::filesystem::path& path);

}  // namespace lawarea
