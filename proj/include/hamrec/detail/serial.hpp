#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

namespace hamrec::detail {

// Little-endian wire helpers shared by the binary file formats.

inline void put_u16(std::ostream& os, std::uint16_t v) {
    unsigned char buf[2] = {static_cast<unsigned char>(v & 0xff),
                            static_cast<unsigned char>(v >> 8)};
    os.write(reinterpret_cast<const char*>(buf), 2);
}

inline void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(buf), 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(buf), 8);
}

inline void put_f64(std::ostream& os, double v) {
    put_u64(os, std::bit_cast<std::uint64_t>(v));
}

inline std::uint16_t get_u16(std::istream& is) {
    unsigned char buf[2];
    is.read(reinterpret_cast<char*>(buf), 2);
    return static_cast<std::uint16_t>(buf[0] | (buf[1] << 8));
}

inline std::uint32_t get_u32(std::istream& is) {
    unsigned char buf[4];
    is.read(reinterpret_cast<char*>(buf), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{buf[i]} << (8 * i);
    return v;
}

inline std::uint64_t get_u64(std::istream& is) {
    unsigned char buf[8];
    is.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{buf[i]} << (8 * i);
    return v;
}

inline double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

inline void put_string(std::ostream& os, const std::string& s) {
    put_u32(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& is) {
    std::uint32_t len = get_u32(is);
    std::string s(len, '\0');
    is.read(s.data(), len);
    return s;
}

}  // namespace hamrec::detail
