#include "util/binio.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "util/error.hpp"

namespace memsteer {

namespace {

template <class T>
T to_le(T v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        T out = 0;
        for (size_t i = 0; i < sizeof(T); ++i) {
            out <<= 8;
            out |= (v >> (8 * i)) & 0xff;
        }
        return out;
    }
}

}  // namespace

void write_bytes(std::ostream& out, const void* data, size_t n) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out) fail(ErrorKind::internal, "write failed");
}

void write_u8(std::ostream& out, uint8_t v) { write_bytes(out, &v, 1); }

void write_u32(std::ostream& out, uint32_t v) {
    uint32_t le = to_le(v);
    write_bytes(out, &le, 4);
}

void write_u64(std::ostream& out, uint64_t v) {
    uint64_t le = to_le(v);
    write_bytes(out, &le, 8);
}

void write_i64(std::ostream& out, int64_t v) { write_u64(out, static_cast<uint64_t>(v)); }

void write_f64(std::ostream& out, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    write_u64(out, bits);
}

void read_bytes(std::istream& in, void* data, size_t n, const std::string& what) {
    in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in.gcount()) != n)
        fail(ErrorKind::truncated, "truncated while reading " + what);
}

uint8_t read_u8(std::istream& in, const std::string& what) {
    uint8_t v;
    read_bytes(in, &v, 1, what);
    return v;
}

uint32_t read_u32(std::istream& in, const std::string& what) {
    uint32_t v;
    read_bytes(in, &v, 4, what);
    return to_le(v);
}

uint64_t read_u64(std::istream& in, const std::string& what) {
    uint64_t v;
    read_bytes(in, &v, 8, what);
    return to_le(v);
}

int64_t read_i64(std::istream& in, const std::string& what) {
    return static_cast<int64_t>(read_u64(in, what));
}

double read_f64(std::istream& in, const std::string& what) {
    uint64_t bits = read_u64(in, what);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::not_found, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::not_found, "cannot open " + path.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) fail(ErrorKind::internal, "write failed: " + path.string());
}

}  // namespace memsteer
