#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "wnct/errors.hpp"

namespace wnct::io {

/// Portable binary tensor file:
///   magic "WNCT" | version u16 | dtype u8 (0=f32, 1=f64) | rank u8 |
///   dims u32[rank] | row-major payload, everything little-endian.
struct TensorFile {
    int dtype = 0; // 0 = f32, 1 = f64
    std::vector<std::uint32_t> dims;
    std::vector<float> f32;
    std::vector<double> f64;

    std::size_t element_count() const {
        std::size_t n = 1;
        for (auto d : dims) n *= d;
        return dims.empty() ? 0 : n;
    }
};

namespace detail {

inline void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(char(v & 0xff));
    out.push_back(char((v >> 8) & 0xff));
}

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

inline std::uint16_t get_u16(const unsigned char* p) {
    return std::uint16_t(p[0] | (p[1] << 8));
}

inline std::uint32_t get_u32(const unsigned char* p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
           (std::uint32_t(p[3]) << 24);
}

template <typename T>
void put_scalar_le(std::string& out, T v) {
    static_assert(sizeof(T) == 4 || sizeof(T) == 8);
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    // x86/arm little-endian layout; byte-swap here if ever ported elsewhere.
    out.append(reinterpret_cast<const char*>(buf), sizeof(T));
}

} // namespace detail

inline constexpr std::uint16_t kTensorFormatVersion = 1;

inline void write_tensor(const std::string& path, const TensorFile& t) {
    const std::size_t n = t.element_count();
    require((t.dtype == 0 && t.f32.size() == n) || (t.dtype == 1 && t.f64.size() == n),
            "write_tensor: payload size does not match dims");
    std::string out;
    out.reserve(16 + n * (t.dtype == 0 ? 4 : 8));
    out += "WNCT";
    detail::put_u16(out, kTensorFormatVersion);
    out.push_back(char(t.dtype));
    out.push_back(char(t.dims.size()));
    for (auto d : t.dims) detail::put_u32(out, d);
    if (t.dtype == 0)
        for (float v : t.f32) detail::put_scalar_le(out, v);
    else
        for (double v : t.f64) detail::put_scalar_le(out, v);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    require(f.good(), "write_tensor: cannot open " + path);
    f.write(out.data(), std::streamsize(out.size()));
    require(f.good(), "write_tensor: write failed for " + path);
}

inline TensorFile read_tensor(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), "read_tensor: cannot open " + path);
    std::string raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    require(raw.size() >= 8, "read_tensor: truncated header in " + path);
    const auto* p = reinterpret_cast<const unsigned char*>(raw.data());
    require(std::memcmp(p, "WNCT", 4) == 0, "read_tensor: bad magic in " + path);
    const std::uint16_t version = detail::get_u16(p + 4);
    require(version == kTensorFormatVersion, "read_tensor: unsupported version in " + path);
    TensorFile t;
    t.dtype = int(p[6]);
    require(t.dtype == 0 || t.dtype == 1, "read_tensor: unknown dtype in " + path);
    const int rank = int(p[7]);
    std::size_t off = 8;
    require(raw.size() >= off + 4 * std::size_t(rank), "read_tensor: truncated dims in " + path);
    for (int i = 0; i < rank; ++i) {
        t.dims.push_back(detail::get_u32(p + off));
        off += 4;
    }
    const std::size_t n = t.element_count();
    const std::size_t bytes = n * (t.dtype == 0 ? 4 : 8);
    require(raw.size() == off + bytes, "read_tensor: payload length mismatch in " + path);
    if (t.dtype == 0) {
        t.f32.resize(n);
        std::memcpy(t.f32.data(), raw.data() + off, bytes);
    } else {
        t.f64.resize(n);
        std::memcpy(t.f64.data(), raw.data() + off, bytes);
    }
    return t;
}

} // namespace wnct::io
