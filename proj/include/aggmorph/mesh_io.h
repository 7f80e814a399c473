#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aggmorph/mesh_geometry.h"

namespace aggmorph {

enum class PlyEncoding { kAscii, kBinaryLittleEndian };

// ASCII OBJ with v/f records. Texture and normal indices in faces are
// ignored, negative indices count from the end. Faces must be triangles.
TriangleMesh ParseObj(std::string_view text);
std::string FormatObj(const TriangleMesh& mesh);

// PLY with a vertex element (x, y, z) and an optional face element holding
// a vertex_indices (or vertex_index) list. Other elements are skipped.
struct PlyData {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
};
PlyData ParsePly(std::string_view bytes);
std::string FormatPly(std::span<const Vec3> vertices,
                      std::span<const std::array<int, 3>> faces,
                      PlyEncoding encoding);

// Reads .obj or .ply by extension and validates the result.
TriangleMesh ReadMesh(const std::filesystem::path& path);
void WriteMesh(const std::filesystem::path& path, const TriangleMesh& mesh,
               PlyEncoding encoding = PlyEncoding::kBinaryLittleEndian);

// Point clouds: PLY vertices (faces ignored), OBJ v records, or .xyz text
// with three numbers per line.
std::vector<Vec3> ReadPointCloud(const std::filesystem::path& path);
void WritePointCloud(const std::filesystem::path& path, std::span<const Vec3> points,
                     PlyEncoding encoding = PlyEncoding::kBinaryLittleEndian);

}  // namespace aggmorph
