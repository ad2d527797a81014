#pragma once

// Single-file basis container: a short UTF-8 text manifest (format version,
// dimensions, CRC32 checksums) followed by raw little-endian payload blobs.
// Payload order: template vertices (V x 3 float64), faces (F x 3 int32),
// pose fields (n x 3V float64, row-major, vertex-major flattening), shape
// fields (m x 3V, same layout).

#include <filesystem>

#include <besa/latent.hpp>

namespace besa {

inline constexpr const char* kContainerVersion = "besa/1";

void save_basis(const Basis& basis, const std::filesystem::path& path);

// Verifies the version line, blob sizes and checksums before rebuilding the
// basis; a mismatch names the offending blob.
Basis load_basis(const std::filesystem::path& path);

}  // namespace besa
