#pragma once

#include "haptosim/linsolve.hpp"
#include "haptosim/mesh.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace haptosim {

// Tensor-product Gauss-Legendre rule on the unit reference cell [0,1]^dim.
struct QuadratureRule
{
  int                 dim = 2;
  std::vector<Point>  points;
  std::vector<double> weights;

  std::size_t
  size() const
  {
    return weights.size();
  }
};

// points_per_axis in [1, 5]. Two points per axis integrate every per-axis
// polynomial of degree <= 3 exactly.
QuadratureRule gauss_rule(int dim, int points_per_axis);

// Axis-aligned box element: lower corner and edge lengths.
struct ElementGeometry
{
  int   dim = 2;
  Point origin{0.0, 0.0, 0.0};
  Point size{1.0, 1.0, 1.0};

  static ElementGeometry unit(int dim);
  static ElementGeometry of(const StructuredMesh &mesh, std::size_t e);

  double volume() const;
};

// Dense (2^dim) x (2^dim) matrix in local vertex order.
struct ElementMatrix
{
  std::size_t            n = 4;
  std::array<double, 64> a{};

  double &
  operator()(std::size_t i, std::size_t j)
  {
    return a[i * n + j];
  }

  double
  operator()(std::size_t i, std::size_t j) const
  {
    return a[i * n + j];
  }
};

struct ElementVector
{
  std::size_t           n = 4;
  std::array<double, 8> a{};

  double &
  operator[](std::size_t i)
  {
    return a[i];
  }

  double
  operator[](std::size_t i) const
  {
    return a[i];
  }
};

// Element integrals of the bilinear forms and loads of the scheme. All of
// them throw AssemblyError for a degenerate element or non-finite nodal data.

// (phi_i, phi_j)
ElementMatrix element_mass(const ElementGeometry &g);

// (grad phi_i, grad phi_j)
ElementMatrix element_stiffness(const ElementGeometry &g);

// (w_h phi_i, phi_j), w_h the Q1 interpolant of the nodal values w.
ElementMatrix element_weighted_mass(const ElementGeometry  &g,
                                    std::span<const double> w);

// Entry (j, i) = (phi_i grad c_h, grad phi_j): row is the test function j,
// column the trial function i.
ElementMatrix element_haptotaxis(const ElementGeometry  &g,
                                 std::span<const double> c);

// Entry j = (a_h b_h, phi_j).
ElementVector element_load_product(const ElementGeometry  &g,
                                   std::span<const double> a,
                                   std::span<const double> b);

enum class FormKind
{
  mass,
  stiffness,
  weighted_mass,
  haptotaxis
};

// Global assembly on one mesh. The sparsity pattern (node pairs sharing an
// element) and the element-to-CSR scatter map are built once; elements are
// always visited in index order so results are bitwise reproducible.
class Assembler
{
public:
  explicit Assembler(MeshPtr mesh);

  const MeshPtr &
  mesh() const
  {
    return mesh_;
  }

  const PatternPtr &
  pattern() const
  {
    return pattern_;
  }

  // `coeff` is required for weighted_mass and haptotaxis and ignored
  // otherwise.
  CsrMatrix assemble(FormKind kind, const FeField *coeff = nullptr) const;

  CsrMatrix
  mass() const
  {
    return assemble(FormKind::mass);
  }

  CsrMatrix
  stiffness() const
  {
    return assemble(FormKind::stiffness);
  }

  CsrMatrix
  weighted_mass(const FeField &w) const
  {
    return assemble(FormKind::weighted_mass, &w);
  }

  CsrMatrix
  haptotaxis(const FeField &c) const
  {
    return assemble(FormKind::haptotaxis, &c);
  }

  // Global vector with entries (a_h b_h, phi_j).
  std::vector<double> load_product(const FeField &a, const FeField &b) const;

private:
  void check_field(const FeField &f) const;

  MeshPtr                  mesh_;
  PatternPtr               pattern_;
  std::vector<std::size_t> scatter_;  // [e][i][j] -> CSR value index
};

} // namespace haptosim
