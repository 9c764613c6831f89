#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <string>

namespace memsteer {

// Little-endian scalar IO, independent of host byte order.

void write_bytes(std::ostream& out, const void* data, size_t n);
void write_u8(std::ostream& out, uint8_t v);
void write_u32(std::ostream& out, uint32_t v);
void write_u64(std::ostream& out, uint64_t v);
void write_i64(std::ostream& out, int64_t v);
void write_f64(std::ostream& out, double v);

// Readers throw Error(truncated, ...) naming `what` when the stream runs dry.
void read_bytes(std::istream& in, void* data, size_t n, const std::string& what);
uint8_t read_u8(std::istream& in, const std::string& what);
uint32_t read_u32(std::istream& in, const std::string& what);
uint64_t read_u64(std::istream& in, const std::string& what);
int64_t read_i64(std::istream& in, const std::string& what);
double read_f64(std::istream& in, const std::string& what);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace memsteer
