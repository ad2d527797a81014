#pragma once

#include <filesystem>

#include "besa/mesh.hpp"

namespace besa {

enum class MeshFormat { obj, ply };

// Picks the format from the file extension (.obj / .ply).
MeshFormat format_from_path(const std::filesystem::path& path);

// OBJ: ASCII "v x y z" / "f i j k" with 1-based indices, converted to
// 0-based on load. Normals, texture coordinates and material statements are
// ignored. PLY: binary little-endian, float64 positions, int32 indices.
// Parse failures name the offending line (OBJ) or byte offset (PLY).
TriMesh load_mesh(const std::filesystem::path& path, MeshFormat format);
TriMesh load_mesh(const std::filesystem::path& path);

// Writers emit faces in stored order; OBJ floats are printed with 17
// significant digits so a save/load round trip is bit exact.
void save_mesh(const TriMesh& mesh, const std::filesystem::path& path,
               MeshFormat format);
void save_mesh(const TriMesh& mesh, const std::filesystem::path& path);

}  // namespace besa
