#include "tenrec/tensor_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace tenrec {

namespace {

constexpr std::array<char, 4> kMagic{'T', 'N', 'R', '1'};
constexpr std::uint32_t kMaxOrder = 64;

template <class T> void put_le(std::ostream& out, T value)
{
    static_assert(std::is_trivially_copyable_v<T>);
    std::array<char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
        std::reverse(bytes.begin(), bytes.end());
    out.write(bytes.data(), bytes.size());
}

template <class T> T get_le(std::istream& in)
{
    std::array<char, sizeof(T)> bytes;
    if (!in.read(bytes.data(), bytes.size()))
        throw std::runtime_error("truncated TNR1 stream");
    if constexpr (std::endian::native == std::endian::big)
        std::reverse(bytes.begin(), bytes.end());
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

} // namespace

void write_tensor(std::ostream& out, const DenseTensor& x)
{
    out.write(kMagic.data(), kMagic.size());
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(x.order()));
    for (auto n : x.shape())
        put_le<std::uint64_t>(out, n);
    for (double v : x.data())
        put_le<double>(out, v);
    if (!out)
        throw std::runtime_error("failed writing TNR1 stream");
}

DenseTensor read_tensor(std::istream& in)
{
    std::array<char, 4> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic)
        throw std::runtime_error("not a TNR1 tensor stream");
    const auto order = get_le<std::uint32_t>(in);
    if (order < 2 || order > kMaxOrder)
        throw std::runtime_error("TNR1: unsupported order " + std::to_string(order));
    Shape shape(order);
    for (auto& n : shape)
        n = static_cast<std::size_t>(get_le<std::uint64_t>(in));
    DenseTensor x(shape);
    for (double& v : x.data())
        v = get_le<double>(in);
    return x;
}

void save_tensor(const std::filesystem::path& path, const DenseTensor& x)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_tensor(out, x);
}

DenseTensor load_tensor(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    return read_tensor(in);
}

void save_mask(const std::filesystem::path& path, const ObservationMask& mask)
{
    save_tensor(path, mask.indicator());
}

ObservationMask load_mask(const std::filesystem::path& path)
{
    return ObservationMask::from_indicator(load_tensor(path));
}

std::string format_double(double value)
{
    if (std::isnan(value))
        return "nan";
    if (std::isinf(value))
        return value > 0 ? "inf" : "-inf";
    std::array<char, 32> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc{})
        throw std::runtime_error("format_double failed");
    return {buf.data(), end};
}

void write_matrix_csv(std::ostream& out, const DenseMatrix& m)
{
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (c)
                out << ',';
            out << format_double(m(r, c));
        }
        out << '\n';
    }
}

} // namespace tenrec
