#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "gcstar/precision.hpp"

namespace gcstar {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct MeshOptions {
  // Longest allowed edge after refinement; <= 0 disables refinement.
  double max_edge = 0.0;
  // Width of the convex-hull buffer pushing the boundary away from data;
  // 0 keeps the hull of the sites.
  double hull_extension = 0.0;
  // Refinement guard.
  int max_vertices = 100000;
};

// Conforming Delaunay triangulation; triangles are counterclockwise vertex
// index triples.  The first vertices are the input sites in input order
// (welded duplicates map to the first occurrence).
struct TriMesh {
  std::vector<Point> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<int> site_vertex;  // input site -> vertex index

  int n_vertices() const { return static_cast<int>(vertices.size()); }
};

TriMesh build_mesh(const std::vector<Point>& sites, const MeshOptions& opts = {});

// Lumped P1 finite-element matrices: C diagonal with vertex areas/3,
// G the stiffness matrix (G*1 = 0).
struct FemMatrices {
  Vec c_diag;
  SparseMat g;
};

FemMatrices assemble_fem(const TriMesh& mesh);

// Thin-plate-spline prior precision Q = G C^{-1} G; rank deficiency 1
// (constants), sum-to-zero constraint attached.
PrecisionModel tps_precision(const FemMatrices& fem);

// Barycentric interpolation rows (<= 3 nonzeros each, nonnegative, summing
// to one) mapping mesh-node values to arbitrary in-hull locations.
SparseMat projector(const TriMesh& mesh, const std::vector<Point>& locations);

// Plain-text export: vertex table then triangle table.
void write_mesh(const TriMesh& mesh, std::ostream& out);
void write_mesh_file(const TriMesh& mesh, const std::string& path);
TriMesh read_mesh_file(const std::string& path);

}  // namespace gcstar
