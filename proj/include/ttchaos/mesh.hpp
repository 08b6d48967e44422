#pragma once

// Structured P1 triangulations of the square [-1,1]^2 and the L-shape
// (square minus the closed quadrant [0,1] x [-1,0]). Refinement level r
// gives a (2^{r+1}+1)-point grid per side; every kept cell is split into
// a lower-left and an upper-right triangle.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace ttchaos {

enum class Domain { Square, LShape };

inline Domain domain_from_string(const std::string& s) {
  if (s == "square") return Domain::Square;
  if (s == "l-shape" || s == "lshape") return Domain::LShape;
  throw std::invalid_argument("unknown domain: " + s);
}

struct TriMesh {
  Eigen::MatrixXd nodes;                       // (#nodes) x 2 coordinates
  std::vector<std::array<int, 3>> elements;    // CCW vertex triples
  std::vector<bool> boundary;                  // Dirichlet flag per node
  std::vector<int> interior;                   // interior node ids, ascending
  std::vector<int> interior_index;             // node id -> interior id, -1 on boundary
  double h = 0.0;
  int level = 0;
  Domain domain = Domain::Square;

  int node_count() const { return static_cast<int>(nodes.rows()); }
  int element_count() const { return static_cast<int>(elements.size()); }
  int interior_count() const { return static_cast<int>(interior.size()); }

  double element_area(int e) const {
    const auto& t = elements[e];
    const Eigen::Vector2d a = nodes.row(t[0]), b = nodes.row(t[1]), c = nodes.row(t[2]);
    return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
  }
};

inline TriMesh build_mesh(Domain domain, int refinement) {
  if (refinement < 0) throw std::invalid_argument("build_mesh: refinement must be >= 0");
  const int cells = 1 << (refinement + 1);  // per side
  const int n = cells + 1;                  // grid points per side
  const double h = 2.0 / cells;

  auto in_domain_cell = [&](int ci, int cj) {
    if (domain == Domain::Square) return true;
    const double cx = -1.0 + (ci + 0.5) * h;
    const double cy = -1.0 + (cj + 0.5) * h;
    return !(cx > 0.0 && cy < 0.0);
  };
  auto keep_node = [&](int i, int j) {
    if (domain == Domain::Square) return true;
    const double x = -1.0 + i * h;
    const double y = -1.0 + j * h;
    return !(x > 0.0 && y < 0.0);
  };

  TriMesh mesh;
  mesh.h = h;
  mesh.level = refinement;
  mesh.domain = domain;

  // node ids: x index slowest, so interior enumeration matches the
  // Kronecker-sum ordering of laplacian_tt on the square
  std::vector<int> id(static_cast<std::size_t>(n) * n, -1);
  std::vector<std::array<double, 2>> coords;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (keep_node(i, j)) {
        id[static_cast<std::size_t>(i) * n + j] = static_cast<int>(coords.size());
        coords.push_back({-1.0 + i * h, -1.0 + j * h});
      }
  mesh.nodes.resize(coords.size(), 2);
  for (std::size_t k = 0; k < coords.size(); ++k) {
    mesh.nodes(k, 0) = coords[k][0];
    mesh.nodes(k, 1) = coords[k][1];
  }
  auto node_at = [&](int i, int j) { return id[static_cast<std::size_t>(i) * n + j]; };

  for (int ci = 0; ci < cells; ++ci)
    for (int cj = 0; cj < cells; ++cj) {
      if (!in_domain_cell(ci, cj)) continue;
      const int v00 = node_at(ci, cj), v10 = node_at(ci + 1, cj);
      const int v01 = node_at(ci, cj + 1), v11 = node_at(ci + 1, cj + 1);
      mesh.elements.push_back({v00, v10, v01});  // lower-left
      mesh.elements.push_back({v10, v11, v01});  // upper-right
    }

  // interior node: all four incident cells exist and lie in the domain
  mesh.boundary.assign(coords.size(), true);
  for (int i = 1; i + 1 < n; ++i)
    for (int j = 1; j + 1 < n; ++j) {
      const int v = node_at(i, j);
      if (v < 0) continue;
      bool inner = true;
      for (int di = -1; di <= 0; ++di)
        for (int dj = -1; dj <= 0; ++dj) inner = inner && in_domain_cell(i + di, j + dj);
      mesh.boundary[v] = !inner;
    }
  mesh.interior_index.assign(coords.size(), -1);
  for (int v = 0; v < mesh.node_count(); ++v)
    if (!mesh.boundary[v]) {
      mesh.interior_index[v] = static_cast<int>(mesh.interior.size());
      mesh.interior.push_back(v);
    }
  return mesh;
}

}  // namespace ttchaos
