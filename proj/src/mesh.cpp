#include "gcstar/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "gcstar/errors.hpp"

namespace gcstar {

namespace {

double orient2d(const Point& a, const Point& b, const Point& c) {
  // Positive when c lies left of a->b.  Long-double accumulation keeps the
  // sign reliable at desk scale without full adaptive predicates.
  const long double det = (static_cast<long double>(b.x) - a.x) *
                              (static_cast<long double>(c.y) - a.y) -
                          (static_cast<long double>(b.y) - a.y) *
                              (static_cast<long double>(c.x) - a.x);
  return static_cast<double>(det);
}

// Strictly-inside-circumcircle test for the ccw triangle (a,b,c).
bool in_circumcircle(const Point& a, const Point& b, const Point& c, const Point& p) {
  const long double ax = a.x - p.x, ay = a.y - p.y;
  const long double bx = b.x - p.x, by = b.y - p.y;
  const long double cx = c.x - p.x, cy = c.y - p.y;
  const long double det = (ax * ax + ay * ay) * (bx * cy - cx * by) -
                          (bx * bx + by * by) * (ax * cy - cx * ay) +
                          (cx * cx + cy * cy) * (ax * by - bx * ay);
  return det > 0.0L;
}

double dist(const Point& a, const Point& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

struct Edge {
  int a, b;
  bool operator<(const Edge& o) const {
    return a != o.a ? a < o.a : b < o.b;
  }
};

Edge sorted_edge(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

// Incremental Bowyer-Watson insertion against a working triangle list.
class Triangulator {
public:
  explicit Triangulator(const std::vector<Point>& bounds) {
    double lo_x = bounds[0].x, hi_x = bounds[0].x;
    double lo_y = bounds[0].y, hi_y = bounds[0].y;
    for (const Point& p : bounds) {
      lo_x = std::min(lo_x, p.x);
      hi_x = std::max(hi_x, p.x);
      lo_y = std::min(lo_y, p.y);
      hi_y = std::max(hi_y, p.y);
    }
    const double span = std::max({hi_x - lo_x, hi_y - lo_y, 1.0});
    const double cx = 0.5 * (lo_x + hi_x);
    const double cy = 0.5 * (lo_y + hi_y);
    // Super-triangle far enough out that no circumcircle of real points
    // excludes it spuriously.
    vertices_.push_back({cx - 40.0 * span, cy - 20.0 * span});
    vertices_.push_back({cx + 40.0 * span, cy - 20.0 * span});
    vertices_.push_back({cx, cy + 40.0 * span});
    triangles_.push_back({0, 1, 2});
  }

  // Returns the vertex index; welds onto an existing vertex within tol.
  int insert(const Point& p, double weld_tol) {
    for (int i = 3; i < static_cast<int>(vertices_.size()); ++i) {
      if (dist(vertices_[static_cast<size_t>(i)], p) <= weld_tol) return i;
    }
    // Cavity: triangles whose circumcircle strictly contains p.
    std::vector<std::array<int, 3>> kept;
    std::map<Edge, int> boundary_count;
    std::vector<Edge> boundary_order;
    for (const auto& t : triangles_) {
      if (in_circumcircle(vertices_[static_cast<size_t>(t[0])],
                          vertices_[static_cast<size_t>(t[1])],
                          vertices_[static_cast<size_t>(t[2])], p)) {
        for (int e = 0; e < 3; ++e) {
          const Edge edge = sorted_edge(t[e], t[(e + 1) % 3]);
          auto [it, fresh] = boundary_count.try_emplace(edge, 0);
          if (fresh) boundary_order.push_back(edge);
          ++it->second;
        }
      } else {
        kept.push_back(t);
      }
    }
    if (boundary_count.empty()) {
      // p on/outside every circumcircle: degenerate duplicate; weld to the
      // nearest existing vertex.
      int best = 3;
      double best_d = std::numeric_limits<double>::infinity();
      for (int i = 3; i < static_cast<int>(vertices_.size()); ++i) {
        const double d = dist(vertices_[static_cast<size_t>(i)], p);
        if (d < best_d) {
          best_d = d;
          best = i;
        }
      }
      return best;
    }
    const int pi = static_cast<int>(vertices_.size());
    vertices_.push_back(p);
    triangles_ = std::move(kept);
    for (const Edge& e : boundary_order) {
      if (boundary_count[e] != 1) continue;  // interior cavity edge
      std::array<int, 3> t{e.a, e.b, pi};
      if (orient2d(vertices_[static_cast<size_t>(t[0])],
                   vertices_[static_cast<size_t>(t[1])],
                   vertices_[static_cast<size_t>(t[2])]) < 0.0) {
        std::swap(t[0], t[1]);
      }
      triangles_.push_back(t);
    }
    return pi;
  }

  // Drop super-triangle vertices and re-index.
  TriMesh finish() const {
    TriMesh mesh;
    mesh.vertices.assign(vertices_.begin() + 3, vertices_.end());
    for (const auto& t : triangles_) {
      if (t[0] < 3 || t[1] < 3 || t[2] < 3) continue;
      mesh.triangles.push_back({t[0] - 3, t[1] - 3, t[2] - 3});
    }
    return mesh;
  }

  const std::vector<Point>& working_vertices() const { return vertices_; }
  const std::vector<std::array<int, 3>>& working_triangles() const { return triangles_; }

private:
  std::vector<Point> vertices_;
  std::vector<std::array<int, 3>> triangles_;
};

std::vector<Point> convex_hull(std::vector<Point> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
    return a.x != b.x ? a.x < b.x : a.y < b.y;
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Point& a, const Point& b) {
                          return a.x == b.x && a.y == b.y;
                        }),
            pts.end());
  const int n = static_cast<int>(pts.size());
  if (n < 3) return pts;
  std::vector<Point> hull(static_cast<size_t>(2 * n));
  int k = 0;
  for (int i = 0; i < n; ++i) {
    while (k >= 2 && orient2d(hull[static_cast<size_t>(k - 2)],
                              hull[static_cast<size_t>(k - 1)], pts[static_cast<size_t>(i)]) <= 0.0)
      --k;
    hull[static_cast<size_t>(k++)] = pts[static_cast<size_t>(i)];
  }
  for (int i = n - 2, lower = k + 1; i >= 0; --i) {
    while (k >= lower && orient2d(hull[static_cast<size_t>(k - 2)],
                                  hull[static_cast<size_t>(k - 1)], pts[static_cast<size_t>(i)]) <= 0.0)
      --k;
    hull[static_cast<size_t>(k++)] = pts[static_cast<size_t>(i)];
  }
  hull.resize(static_cast<size_t>(k - 1));
  return hull;
}

// Points along an outward-offset convex hull, spaced at most `spacing`.
std::vector<Point> buffer_ring(const std::vector<Point>& sites, double extension,
                               double spacing) {
  const std::vector<Point> hull = convex_hull(sites);
  Point centroid{0.0, 0.0};
  for (const Point& p : hull) {
    centroid.x += p.x;
    centroid.y += p.y;
  }
  centroid.x /= static_cast<double>(hull.size());
  centroid.y /= static_cast<double>(hull.size());

  std::vector<Point> ring;
  for (const Point& p : hull) {
    const double dx = p.x - centroid.x;
    const double dy = p.y - centroid.y;
    const double r = std::hypot(dx, dy);
    if (r < 1e-300) {
      ring.push_back({p.x + extension, p.y});
    } else {
      ring.push_back({p.x + extension * dx / r, p.y + extension * dy / r});
    }
  }
  // Subdivide ring edges so the buffer boundary is resolved.
  std::vector<Point> out;
  const size_t m = ring.size();
  for (size_t i = 0; i < m; ++i) {
    const Point& a = ring[i];
    const Point& b = ring[(i + 1) % m];
    out.push_back(a);
    const double len = dist(a, b);
    const int segments = spacing > 0.0
                             ? std::max(1, static_cast<int>(std::ceil(len / spacing)))
                             : 1;
    for (int s = 1; s < segments; ++s) {
      const double f = static_cast<double>(s) / segments;
      out.push_back({a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)});
    }
  }
  return out;
}

}  // namespace

TriMesh build_mesh(const std::vector<Point>& sites, const MeshOptions& opts) {
  if (sites.size() < 3) throw DomainError("build_mesh: need at least 3 sites");
  bool collinear = true;
  for (size_t i = 2; i < sites.size() && collinear; ++i) {
    if (std::fabs(orient2d(sites[0], sites[1], sites[i])) > 1e-300) collinear = false;
  }
  if (collinear) throw DomainError("build_mesh: sites are collinear");

  double lo_x = sites[0].x, hi_x = sites[0].x, lo_y = sites[0].y, hi_y = sites[0].y;
  for (const Point& p : sites) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw DomainError("build_mesh: non-finite site coordinate");
    }
    lo_x = std::min(lo_x, p.x);
    hi_x = std::max(hi_x, p.x);
    lo_y = std::min(lo_y, p.y);
    hi_y = std::max(hi_y, p.y);
  }
  const double diag = std::hypot(hi_x - lo_x, hi_y - lo_y);
  const double weld_tol = 1e-12 * std::max(diag, 1.0);

  std::vector<Point> all_points = sites;
  if (opts.hull_extension > 0.0) {
    const double spacing = opts.max_edge > 0.0 ? opts.max_edge : opts.hull_extension;
    const auto ring = buffer_ring(sites, opts.hull_extension, spacing);
    all_points.insert(all_points.end(), ring.begin(), ring.end());
  }

  Triangulator tri(all_points);
  TriMesh mesh;
  mesh.site_vertex.resize(sites.size());
  for (size_t i = 0; i < all_points.size(); ++i) {
    const int v = tri.insert(all_points[i], weld_tol);
    if (i < sites.size()) mesh.site_vertex[i] = v - 3;
  }

  // Refinement: split the longest over-limit edge (midpoint insertion keeps
  // the triangulation Delaunay) until all edges satisfy max_edge.
  if (opts.max_edge > 0.0) {
    for (;;) {
      if (static_cast<int>(tri.working_vertices().size()) - 3 > opts.max_vertices) {
        throw ConvergenceError("build_mesh: refinement exceeded vertex budget");
      }
      const auto& verts = tri.working_vertices();
      Edge longest{-1, -1};
      double longest_len = opts.max_edge;
      for (const auto& t : tri.working_triangles()) {
        if (t[0] < 3 || t[1] < 3 || t[2] < 3) continue;
        for (int e = 0; e < 3; ++e) {
          const Edge edge = sorted_edge(t[e], t[(e + 1) % 3]);
          const double len = dist(verts[static_cast<size_t>(edge.a)],
                                  verts[static_cast<size_t>(edge.b)]);
          if (len > longest_len ||
              (len == longest_len && longest.a >= 0 && edge < longest)) {
            longest = edge;
            longest_len = len;
          }
        }
      }
      if (longest.a < 0) break;
      const Point& a = tri.working_vertices()[static_cast<size_t>(longest.a)];
      const Point& b = tri.working_vertices()[static_cast<size_t>(longest.b)];
      tri.insert({0.5 * (a.x + b.x), 0.5 * (a.y + b.y)}, weld_tol);
    }
  }

  TriMesh out = tri.finish();
  out.site_vertex = mesh.site_vertex;
  for (const auto& t : out.triangles) {
    const double twice_area = orient2d(out.vertices[static_cast<size_t>(t[0])],
                                       out.vertices[static_cast<size_t>(t[1])],
                                       out.vertices[static_cast<size_t>(t[2])]);
    if (twice_area <= 0.0) {
      throw ConvergenceError("build_mesh: degenerate triangle in output");
    }
  }
  return out;
}

FemMatrices assemble_fem(const TriMesh& mesh) {
  const int n = mesh.n_vertices();
  FemMatrices fem;
  fem.c_diag = Vec::Zero(n);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(mesh.triangles.size() * 9);

  for (const auto& t : mesh.triangles) {
    const Point& p0 = mesh.vertices[static_cast<size_t>(t[0])];
    const Point& p1 = mesh.vertices[static_cast<size_t>(t[1])];
    const Point& p2 = mesh.vertices[static_cast<size_t>(t[2])];
    const double twice_area = orient2d(p0, p1, p2);
    if (twice_area <= 0.0) throw DomainError("assemble_fem: degenerate triangle");
    const double area = 0.5 * twice_area;

    // P1 basis gradients: grad_i = rot90(opposite edge) / (2 area).
    const double bx[3] = {p1.y - p2.y, p2.y - p0.y, p0.y - p1.y};
    const double by[3] = {p2.x - p1.x, p0.x - p2.x, p1.x - p0.x};
    for (int i = 0; i < 3; ++i) {
      fem.c_diag[t[static_cast<size_t>(i)]] += area / 3.0;
      for (int j = 0; j < 3; ++j) {
        const double gij = (bx[i] * bx[j] + by[i] * by[j]) / (4.0 * area);
        trips.emplace_back(t[static_cast<size_t>(i)], t[static_cast<size_t>(j)], gij);
      }
    }
  }
  fem.g = SparseMat(n, n);
  fem.g.setFromTriplets(trips.begin(), trips.end());
  fem.g.makeCompressed();
  return fem;
}

PrecisionModel tps_precision(const FemMatrices& fem) {
  const int n = static_cast<int>(fem.c_diag.size());
  for (int i = 0; i < n; ++i) {
    if (!(fem.c_diag[i] > 0.0)) {
      throw DomainError("tps_precision: mass matrix must be positive");
    }
  }
  SparseMat cinv(n, n);
  cinv.reserve(Eigen::VectorXi::Constant(n, 1));
  for (int i = 0; i < n; ++i) cinv.insert(i, i) = 1.0 / fem.c_diag[i];
  cinv.makeCompressed();

  PrecisionModel pm;
  pm.dim = n;
  SparseMat q = SparseMat(fem.g * cinv * fem.g);
  SparseMat qt = SparseMat(q.transpose());
  pm.Q = SparseMat(0.5 * (q + qt));
  pm.Q.makeCompressed();
  pm.rank_deficiency = 1;
  pm.null_basis = {Vec::Ones(n)};
  pm.constraint = Mat(1, n);
  pm.constraint.row(0) = Vec::Ones(n).transpose();
  return pm;
}

SparseMat projector(const TriMesh& mesh, const std::vector<Point>& locations) {
  const int n_loc = static_cast<int>(locations.size());
  std::vector<Eigen::Triplet<double>> trips;
  std::string outside;

  for (int r = 0; r < n_loc; ++r) {
    const Point& p = locations[static_cast<size_t>(r)];
    bool found = false;
    double best_slack = -std::numeric_limits<double>::infinity();
    std::array<double, 3> best_w{};
    std::array<int, 3> best_t{};
    for (const auto& t : mesh.triangles) {
      const Point& a = mesh.vertices[static_cast<size_t>(t[0])];
      const Point& b = mesh.vertices[static_cast<size_t>(t[1])];
      const Point& c = mesh.vertices[static_cast<size_t>(t[2])];
      const double twice_area = orient2d(a, b, c);
      const double w0 = orient2d(b, c, p) / twice_area;
      const double w1 = orient2d(c, a, p) / twice_area;
      const double w2 = orient2d(a, b, p) / twice_area;
      const double slack = std::min({w0, w1, w2});
      if (slack > best_slack) {
        best_slack = slack;
        best_w = {w0, w1, w2};
        best_t = t;
      }
      if (slack >= -1e-12) {
        found = true;
        best_w = {w0, w1, w2};
        best_t = t;
        break;
      }
    }
    if (!found) {
      outside += " (" + std::to_string(p.x) + "," + std::to_string(p.y) + ")";
      continue;
    }
    // Clip rounding spill and renormalize; vertex hits become indicator rows.
    double sum = 0.0;
    for (double& w : best_w) {
      w = std::max(w, 0.0);
      sum += w;
    }
    for (int k = 0; k < 3; ++k) {
      const double w = best_w[static_cast<size_t>(k)] / sum;
      if (w > 0.0) trips.emplace_back(r, best_t[static_cast<size_t>(k)], w);
    }
  }
  if (!outside.empty()) {
    throw DomainError("projector: locations outside mesh hull:" + outside);
  }
  SparseMat a(n_loc, mesh.n_vertices());
  a.setFromTriplets(trips.begin(), trips.end());
  a.makeCompressed();
  return a;
}

void write_mesh(const TriMesh& mesh, std::ostream& out) {
  out << "vertices " << mesh.vertices.size() << "\n";
  out.precision(17);
  for (size_t i = 0; i < mesh.vertices.size(); ++i) {
    out << i << " " << mesh.vertices[i].x << " " << mesh.vertices[i].y << "\n";
  }
  out << "triangles " << mesh.triangles.size() << "\n";
  for (const auto& t : mesh.triangles) {
    out << t[0] << " " << t[1] << " " << t[2] << "\n";
  }
}

void write_mesh_file(const TriMesh& mesh, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw DomainError("write_mesh_file: cannot open " + path);
  write_mesh(mesh, f);
}

TriMesh read_mesh_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DomainError("read_mesh_file: cannot open " + path);
  TriMesh mesh;
  std::string tag;
  size_t count = 0;
  f >> tag >> count;
  if (tag != "vertices") throw DomainError("read_mesh_file: bad header in " + path);
  mesh.vertices.resize(count);
  for (size_t i = 0; i < count; ++i) {
    size_t id;
    f >> id >> mesh.vertices[i].x >> mesh.vertices[i].y;
  }
  f >> tag >> count;
  if (tag != "triangles") throw DomainError("read_mesh_file: bad triangle table in " + path);
  mesh.triangles.resize(count);
  for (size_t i = 0; i < count; ++i) {
    f >> mesh.triangles[i][0] >> mesh.triangles[i][1] >> mesh.triangles[i][2];
  }
  if (!f) throw DomainError("read_mesh_file: truncated file " + path);
  return mesh;
}

}  // namespace gcstar
