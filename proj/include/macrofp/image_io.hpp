#pragma once

// Grayscale image files: PGM (8/16-bit), PNG (8/16-bit) and exact raw float
// dumps.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "macrofp/field.hpp"

namespace macrofp {

/// Reads a grayscale PGM (binary P5, maxval up to 65535) or PNG file. Pixel
/// values are returned unscaled (0..maxval). Colour PNGs are converted to
/// luminance. Throws IoError on unreadable or unsupported files.
RealImage read_grayscale(const std::filesystem::path& path);

RealImage read_pgm(const std::filesystem::path& path);
RealImage read_png(const std::filesystem::path& path);

/// Writes values linearly mapped from [lo, hi] to the full 16-bit range.
void write_png16(const std::filesystem::path& path, const RealImage& image, double lo, double hi);
/// Same with lo = min, hi = max of the image.
void write_png16(const std::filesystem::path& path, const RealImage& image);

/// Binary PGM with the given bit depth (8 or 16); values are clamped to
/// [0, 2^bits - 1] after rounding.
void write_pgm(const std::filesystem::path& path, const RealImage& image, int bits);

/// Raw little-endian float32 / float64 samples, row-major, no header.
void write_raw_f32(const std::filesystem::path& path, const FloatImage& image);
FloatImage read_raw_f32(const std::filesystem::path& path, std::size_t width, std::size_t height);
void write_raw_f64(const std::filesystem::path& path, const RealImage& image);
RealImage read_raw_f64(const std::filesystem::path& path, std::size_t width, std::size_t height);

/// Writes `bytes` to a temporary sibling file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

/// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

} // namespace macrofp
