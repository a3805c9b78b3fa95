#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace haptosim {

// Coordinates are always stored with three components; unused axes are 0.
using Point = std::array<double, 3>;

struct Interval
{
  double lo = 0.0;
  double hi = 1.0;

  double
  length() const
  {
    return hi - lo;
  }

  friend bool operator==(const Interval &, const Interval &) = default;
};

// Axis-aligned box [lo_0,hi_0] x ... in `dim` dimensions.
struct Box
{
  int                     dim = 2;
  std::array<Interval, 3> axes{};

  double volume() const;

  friend bool operator==(const Box &, const Box &) = default;
};

// Uniform quadrilateral (dim = 2) or hexahedral (dim = 3) mesh of a box.
//
// Nodes are numbered lexicographically with x running fastest. Local vertex
// ordering inside an element:
//   2D  0:(0,0) 1:(1,0) 2:(1,1) 3:(0,1)                  counterclockwise
//   3D  vertices 0-3 as in 2D on the bottom face z=0, 4-7 the same on z=1
// This is the VTK_QUAD / VTK_HEXAHEDRON ordering.
class StructuredMesh
{
public:
  int
  dim() const
  {
    return box_.dim;
  }

  const Box &
  box() const
  {
    return box_;
  }

  // Unused axes report 0.
  const std::array<std::size_t, 3> &
  cells_per_axis() const
  {
    return cells_;
  }

  std::size_t
  n_nodes() const
  {
    return coords_.size();
  }

  std::size_t
  n_elements() const
  {
    return n_elements_;
  }

  std::size_t
  nodes_per_element() const
  {
    return std::size_t{1} << dim();
  }

  const Point &
  node(std::size_t i) const
  {
    return coords_[i];
  }

  const std::vector<Point> &
  nodes() const
  {
    return coords_;
  }

  // Global node indices of element e in local vertex order.
  std::span<const std::size_t>
  element(std::size_t e) const
  {
    return {connectivity_.data() + e * nodes_per_element(),
            nodes_per_element()};
  }

  // Lower corner of element e (its local vertex 0).
  const Point &
  element_origin(std::size_t e) const
  {
    return coords_[element(e)[0]];
  }

  // Edge lengths of element e.
  Point element_size(std::size_t e) const;

  double element_volume(std::size_t e) const;

  // Value of the local reference coordinate bit for vertex a along axis d.
  static int
  vertex_bit(std::size_t a, int d)
  {
    static constexpr int bits[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0},
                                       {0, 1, 0}, {0, 0, 1}, {1, 0, 1},
                                       {1, 1, 1}, {0, 1, 1}};
    return bits[a][d];
  }

  friend bool
  operator==(const StructuredMesh &a, const StructuredMesh &b)
  {
    return a.box_ == b.box_ && a.cells_ == b.cells_ &&
           a.coords_ == b.coords_ && a.connectivity_ == b.connectivity_;
  }

private:
  friend StructuredMesh build_structured_mesh(int,
                                              const Box &,
                                              const std::array<std::size_t, 3> &,
                                              int);

  Box                        box_;
  std::array<std::size_t, 3> cells_{1, 1, 1};
  std::size_t                n_elements_ = 0;
  std::vector<Point>         coords_;
  std::vector<std::size_t>   connectivity_;
};

using MeshPtr = std::shared_ptr<const StructuredMesh>;

// Mesh of `extents` with base_cells[d] * 2^refinements cells along axis d.
// Entries of base_cells beyond `dim` are ignored. Throws ConfigError.
StructuredMesh build_structured_mesh(int                               dim,
                                     const Box                        &extents,
                                     const std::array<std::size_t, 3> &base_cells,
                                     int refinements);

MeshPtr make_mesh(int                               dim,
                  const Box                        &extents,
                  const std::array<std::size_t, 3> &base_cells,
                  int                               refinements);

// Nodal coefficient vector of a Q1 function.
class FeField
{
public:
  FeField() = default;

  FeField(MeshPtr mesh, double value = 0.0);

  FeField(MeshPtr mesh, std::vector<double> coeffs);

  const MeshPtr &
  mesh() const
  {
    return mesh_;
  }

  std::size_t
  size() const
  {
    return coeffs_.size();
  }

  double &
  operator[](std::size_t i)
  {
    return coeffs_[i];
  }

  double
  operator[](std::size_t i) const
  {
    return coeffs_[i];
  }

  std::vector<double> &
  coeffs()
  {
    return coeffs_;
  }

  const std::vector<double> &
  coeffs() const
  {
    return coeffs_;
  }

  bool
  same_mesh(const FeField &other) const
  {
    return mesh_ == other.mesh_;
  }

  bool all_finite() const;

  double max() const;
  double min() const;
  double max_abs() const;

  // Set when the coefficients come from a failed (non-finite or blown-up)
  // iterate and are kept only for post-mortem output.
  bool breakdown_artifact = false;

private:
  MeshPtr             mesh_;
  std::vector<double> coeffs_;
};

using PointFunction = std::function<double(const Point &)>;

// Lagrange interpolation: coeffs[i] = f(node i). Throws InterpolationError
// naming the first node where f is not finite.
FeField interpolate(const PointFunction &f, const MeshPtr &mesh);

} // namespace haptosim
