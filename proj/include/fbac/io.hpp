#pragma once

#include "fbac/grid.hpp"

#include <filesystem>
#include <string>

namespace fbac::io {

/// Shortest round-trip decimal form of a double (std::to_chars). Every
/// artifact number goes through this one formatter so identical values
/// serialize to identical bytes.
std::string fmt(double v);

/// Field as CSV: header "index,coord_1..coord_n,value", one row per node in
/// row-major order.
void write_field_csv(const Field& u, const std::filesystem::path& path);

/// Binary field format: magic "FBAC1"; then dim, per-axis node counts, and
/// per-axis extents (lo, hi interleaved per axis) as 64-bit little-endian
/// values; then node values row-major as 64-bit IEEE doubles.
void write_field_binary(const Field& u, const std::filesystem::path& path);
Field read_field_binary(const std::filesystem::path& path, FieldKind kind);

/// Masks reuse the binary field format with values in {0,1}.
void write_mask_binary(const NodeMask& m, const std::filesystem::path& path);
NodeMask read_mask_binary(const std::filesystem::path& path);

} // namespace fbac::io
