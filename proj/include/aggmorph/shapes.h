#pragma once

#include <cstdint>

#include "aggmorph/mesh_geometry.h"

namespace aggmorph {

// Axis-aligned box with one corner at `origin`; 8 vertices, 12 faces.
TriangleMesh MakeBox(const Vec3& extents, const Vec3& origin = Vec3::Zero());

// Outward-oriented tetrahedron over four given corners.
TriangleMesh MakeTetrahedron(const Vec3& p0, const Vec3& p1, const Vec3& p2,
                             const Vec3& p3);

TriangleMesh MakeRegularTetrahedron(double edge);

// Icosahedron subdivided `subdivisions` times, vertices pushed to the sphere.
// 3 subdivisions give 642 vertices and 1280 faces.
TriangleMesh MakeIcosphere(double radius, int subdivisions);

// Unit icosphere stretched to the given semi-axes.
TriangleMesh MakeEllipsoid(const Vec3& semi_axes, int subdivisions);

// x -> scale * R * x + t on every vertex.
TriangleMesh TransformMesh(const TriangleMesh& mesh, const Mat3& rotation,
                           const Vec3& translation, double scale = 1.0);

// Uniformly distributed rotation from a seeded generator.
Mat3 RandomRotation(uint64_t seed);

}  // namespace aggmorph
