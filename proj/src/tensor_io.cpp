#include "forgescore/tensor_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>

namespace forgescore {

namespace {

constexpr std::byte kMagic[4] = {std::byte{'F'}, std::byte{'V'}, std::byte{'T'}, std::byte{'1'}};

void put_u32(std::vector<std::byte>& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xffu));
}

void put_f64(std::vector<std::byte>& out, double v)
{
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::byte>((bits >> (8 * i)) & 0xffu));
}

std::uint64_t get_le(std::span<const std::byte> bytes, std::size_t offset, int width)
{
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
        v |= static_cast<std::uint64_t>(std::to_integer<unsigned>(bytes[offset + i])) << (8 * i);
    }
    return v;
}

}  // namespace

const char* to_string(TensorIoErrc code)
{
    switch (code) {
    case TensorIoErrc::bad_magic: return "bad magic";
    case TensorIoErrc::truncated: return "truncated payload";
    case TensorIoErrc::dim_overflow: return "dimension overflow";
    case TensorIoErrc::non_finite: return "non-finite value";
    case TensorIoErrc::bad_shape: return "invalid shape";
    case TensorIoErrc::trailing_data: return "trailing data after payload";
    case TensorIoErrc::io_failure: return "i/o failure";
    }
    return "unknown";
}

TensorIoError::TensorIoError(TensorIoErrc code, const std::string& context)
    : Error(ErrorKind::data, std::string("FVT1 ") + to_string(code) + (context.empty() ? "" : ": " + context)),
      code_(code)
{
}

std::vector<std::byte> encode_tensor(const Tensor& t)
{
    if (t.rank() == 0) throw TensorIoError(TensorIoErrc::bad_shape, "rank 0");
    std::vector<std::byte> out;
    out.reserve(8 + 4 * t.rank() + 8 * t.size());
    for (auto b : kMagic) out.push_back(b);
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) {
        if (d == 0 || d > std::numeric_limits<std::uint32_t>::max()) {
            throw TensorIoError(TensorIoErrc::dim_overflow, "dim " + std::to_string(d));
        }
        put_u32(out, static_cast<std::uint32_t>(d));
    }
    for (double v : t.data()) {
        if (!std::isfinite(v)) throw TensorIoError(TensorIoErrc::non_finite, "refusing to write");
        put_f64(out, v);
    }
    return out;
}

Tensor decode_tensor(std::span<const std::byte> bytes)
{
    if (bytes.size() < 4) throw TensorIoError(TensorIoErrc::truncated, "missing magic");
    for (int i = 0; i < 4; ++i) {
        if (bytes[i] != kMagic[i]) throw TensorIoError(TensorIoErrc::bad_magic, "");
    }
    if (bytes.size() < 8) throw TensorIoError(TensorIoErrc::truncated, "missing rank");
    auto rank = static_cast<std::size_t>(get_le(bytes, 4, 4));
    if (rank == 0) throw TensorIoError(TensorIoErrc::bad_shape, "rank 0");
    // Rank is bounded by what the header can actually hold before dims are read.
    if ((bytes.size() - 8) / 4 < rank) throw TensorIoError(TensorIoErrc::truncated, "missing dims");

    Shape shape(rank);
    std::size_t count = 1;
    for (std::size_t i = 0; i < rank; ++i) {
        auto d = static_cast<std::size_t>(get_le(bytes, 8 + 4 * i, 4));
        if (d == 0) throw TensorIoError(TensorIoErrc::bad_shape, "zero dim at axis " + std::to_string(i));
        if (count > std::numeric_limits<std::size_t>::max() / 8 / d) {
            throw TensorIoError(TensorIoErrc::dim_overflow, "element count exceeds addressable size");
        }
        count *= d;
        shape[i] = d;
    }

    std::size_t header = 8 + 4 * rank;
    std::size_t payload = bytes.size() - header;
    if (payload < count * 8) {
        throw TensorIoError(TensorIoErrc::truncated,
                            "expected " + std::to_string(count * 8) + " payload bytes, got " + std::to_string(payload));
    }
    if (payload > count * 8) throw TensorIoError(TensorIoErrc::trailing_data, "");

    std::vector<double> data(count);
    for (std::size_t i = 0; i < count; ++i) {
        double v = std::bit_cast<double>(get_le(bytes, header + 8 * i, 8));
        if (!std::isfinite(v)) throw TensorIoError(TensorIoErrc::non_finite, "element " + std::to_string(i));
        data[i] = v;
    }
    return Tensor(std::move(shape), std::move(data));
}

void write_tensor(const Tensor& t, const std::filesystem::path& path)
{
    auto bytes = encode_tensor(t);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw TensorIoError(TensorIoErrc::io_failure, "cannot open " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw TensorIoError(TensorIoErrc::io_failure, "write failed " + path.string());
}

Tensor read_tensor(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TensorIoError(TensorIoErrc::io_failure, "cannot open " + path.string());
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return decode_tensor(std::as_bytes(std::span<const char>(raw)));
    } catch (const TensorIoError& e) {
        throw TensorIoError(e.code(), path.string());
    }
}

}  // namespace forgescore
