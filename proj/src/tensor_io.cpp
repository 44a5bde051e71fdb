#include "lawarea/tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "lawarea/error.hpp"

namespace lawarea {

namespace {

constexpr char kMagic[4] = {'L', 'A', 'T', 'N'};
constexpr std::uint8_t kVersion = 1;

template <typename T>
void put_le(std::vector<char>& out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.insert(out.end(), bytes, bytes + sizeof(T));
}

template <typename T>
T get_le(const char* p) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void save_tensor(const std::filesystem::path& path, const Eigen::MatrixXd& m, TensorDtype dtype) {
  std::vector<char> out(kMagic, kMagic + 4);
  out.push_back(static_cast<char>(kVersion));
  out.push_back(static_cast<char>(dtype));
  out.push_back(0);
  out.push_back(0);
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (dtype == TensorDtype::F32) {
        put_le<float>(out, static_cast<float>(m(i, j)));
      } else {
        put_le<double>(out, m(i, j));
      }
    }
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

Eigen::MatrixXd load_tensor(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  const std::vector<char> bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  constexpr std::size_t header = 24;
  if (bytes.size() < header || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::MalformedFile, path.string() + ": not a tensor file");
  }
  if (static_cast<std::uint8_t>(bytes[4]) != kVersion) throw Error(ErrorCode::VersionUnsupported, path.string());
  const auto dtype = static_cast<TensorDtype>(bytes[5]);
  if (dtype != TensorDtype::F32 && dtype != TensorDtype::F64) throw Error(ErrorCode::MalformedFile, path.string() + ": unknown dtype");
  const auto rows = get_le<std::uint64_t>(bytes.data() + 8);
  const auto cols = get_le<std::uint64_t>(bytes.data() + 16);
  const std::size_t width = dtype == TensorDtype::F32 ? 4 : 8;
  if (rows != 0 && cols > (bytes.size() - header) / width / rows) throw Error(ErrorCode::MalformedFile, path.string() + ": truncated");
  if (bytes.size() != header + rows * cols * width) throw Error(ErrorCode::MalformedFile, path.string() + ": size mismatch");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  const char* p = bytes.data() + header;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j, p += width) {
      m(i, j) = dtype == TensorDtype::F32 ? static_cast<double>(get_le<float>(p)) : get_le<double>(p);
    }
  }
  return m;
}

}  // namespace lawarea
