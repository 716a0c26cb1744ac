#pragma once

#include <adaer/errors.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

namespace adaer::detail {

template <typename T>
void write_le(std::ostream& os, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    os.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T read_le(std::istream& is, const std::filesystem::path& path) {
    std::array<unsigned char, sizeof(T)> bytes{};
    const auto offset = static_cast<long long>(is.tellg());
    if (!is.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) {
        throw FormatError(path.string() + ": truncated file at offset " + std::to_string(offset));
    }
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
}

} // namespace adaer::detail
