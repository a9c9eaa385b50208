#pragma once

#include "tubekin/mesh.hpp"

#include <filesystem>

namespace tubekin {

enum class MeshFormat { ply_ascii, ply_binary, obj };

/// Format from the file extension (.ply -> binary, .obj).
MeshFormat format_for_path(const std::filesystem::path& path);
const char* to_string(MeshFormat format);
MeshFormat parse_mesh_format(const std::string& name);

/// Reads PLY (ascii, binary little or big endian) or OBJ. Polygons are fan
/// triangulated. Errors name the file and, for text input, the line.
TriMesh read_mesh(const std::filesystem::path& path);

/// ASCII output prints 17 significant digits, binary output stores doubles,
/// so coordinates round-trip exactly either way.
void write_mesh(const std::filesystem::path& path, const TriMesh& mesh, MeshFormat format);

}  // namespace tubekin
