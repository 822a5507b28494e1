#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "forgescore/error.hpp"
#include "forgescore/tensor.hpp"

namespace forgescore {

// On-disk layout ("FVT1"):
//   4 bytes   magic "FVT1"
//   u32 LE    rank
//   rank*u32  dims, little-endian
//   f64 LE    row-major IEEE-754 payload
enum class TensorIoErrc {
    bad_magic = 1,
    truncated,
    dim_overflow,
    non_finite,
    bad_shape,
    trailing_data,
    io_failure,
};

const char* to_string(TensorIoErrc code);

class TensorIoError : public Error {
public:
    TensorIoError(TensorIoErrc code, const std::string& context);
    TensorIoErrc code() const noexcept { return code_; }

private:
    TensorIoErrc code_;
};

std::vector<std::byte> encode_tensor(const Tensor& t);
Tensor decode_tensor(std::span<const std::byte> bytes);

void write_tensor(const Tensor& t, const std::filesystem::path& path);
Tensor read_tensor(const std::filesystem::path& path);

}  // namespace forgescore
