#include "csol/grid.hpp"

#include "csol/errors.hpp"

namespace csol {

Grid::Grid(const GridSpec& spec) : spec_(spec) {
  if (spec.dim != 1 && spec.dim != 2) throw Error(ErrorCode::DimensionMismatch, "grids support dimension 1 or 2");
  if (spec.n < 4) throw Error(ErrorCode::GridTooCoarse, "grid needs at least 4 cells per axis");
  if (!(spec.half_width > 0.0)) throw Error(ErrorCode::BoxTooSmall, "box half-width must be positive");
  h_ = 2.0 * spec.half_width / spec.n;
  size_ = spec.dim == 1 ? per_axis() : per_axis() * per_axis();
}

std::array<int, 2> Grid::multi_index(int idx) const {
  if (dim() == 1) return {idx, 0};
  return {idx % per_axis(), idx / per_axis()};
}

Vec Grid::coords(int idx) const {
  auto ij = multi_index(idx);
  Vec x(dim());
  for (int d = 0; d < dim(); ++d) x(d) = coord(ij[d]);
  return x;
}

int Grid::center() const {
  int c = spec_.n / 2;
  return index({c, c});
}

NodeKind Grid::kind(int idx) const {
  auto ij = multi_index(idx);
  int on = 0;
  for (int d = 0; d < dim(); ++d)
    if (ij[d] == 0 || ij[d] == spec_.n) ++on;
  if (on == 0) return NodeKind::Interior;
  return on == 1 ? NodeKind::Face : NodeKind::Corner;
}

double Grid::trapezoid_weight(int idx) const {
  auto ij = multi_index(idx);
  double w = 1.0;
  for (int d = 0; d < dim(); ++d) w *= (ij[d] == 0 || ij[d] == spec_.n) ? 0.5 * h_ : h_;
  return w;
}

int Grid::neighbor(int idx, int d, int s) const {
  auto ij = multi_index(idx);
  ij[d] += s;
  if (ij[d] < 0 || ij[d] > spec_.n) return -1;
  return index(ij);
}

std::vector<std::pair<int, int>> Grid::boundary_axes(int idx) const {
  std::vector<std::pair<int, int>> out;
  auto ij = multi_index(idx);
  for (int d = 0; d < dim(); ++d) {
    if (ij[d] == 0) out.emplace_back(d, -1);
    if (ij[d] == spec_.n) out.emplace_back(d, +1);
  }
  return out;
}

}  // namespace csol
