#pragma once

#include <filesystem>
#include <string>

#include "flowadmm/tensor.hpp"

namespace flowadmm {

// Raw tensor format: one ASCII header line "F64 <ndim> <d0> <d1> ...\n"
// followed by the entries as little-endian IEEE-754 doubles in row-major
// order. Round trips are byte-exact.
void write_f64(const std::filesystem::path& path, const Tensor& t);
Tensor read_f64(const std::filesystem::path& path);

// 8-bit binary PGM (P5) / PPM (P6); values map linearly between [0,1] and
// 0..255 with rounding and clamping on export.
void write_pgm(const std::filesystem::path& path, const Tensor& t);   // [H,W] or [1,H,W]
Tensor read_pgm(const std::filesystem::path& path);                   // returns [H,W]
void write_ppm(const std::filesystem::path& path, const Tensor& t);   // [3,H,W]
Tensor read_ppm(const std::filesystem::path& path);                   // returns [3,H,W]

// Dispatch on extension: .f64 / .pgm / .ppm.
void write_image(const std::filesystem::path& path, const Tensor& t);
Tensor read_image(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& contents);
std::string read_text_file(const std::filesystem::path& path);

// Shortest round-trip decimal formatting; used everywhere a double lands in a
// text artifact so re-runs are byte-identical.
std::string format_double(double v);

}  // namespace flowadmm
