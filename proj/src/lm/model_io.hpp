#pragma once

#include <filesystem>

#include "lm/model.hpp"

namespace memsteer::lm {

inline constexpr char model_magic[] = "MEMSTEER-MODEL";  // written with its NUL terminator
inline constexpr uint32_t model_format_version = 1;

// Binary round trip is bit-exact: magic, version, config, then each tensor in
// registry order as a name/shape record plus little-endian IEEE-754 payload.
void save_model(const Model& m, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace memsteer::lm
