#pragma once

#include <array>
#include <vector>

#include "csol/geom.hpp"

namespace csol {

// Uniform grid on the box [-R, R]^m with n cells per axis.
struct GridSpec {
  int dim = 1;
  int n = 256;
  double half_width = 12.0;
};

enum class NodeKind { Interior, Face, Corner };

class Grid {
 public:
  explicit Grid(const GridSpec& spec);

  const GridSpec& spec() const { return spec_; }
  int dim() const { return spec_.dim; }
  int cells() const { return spec_.n; }
  int per_axis() const { return spec_.n + 1; }
  int size() const { return size_; }
  double spacing() const { return h_; }
  double half_width() const { return spec_.half_width; }

  int index(const std::array<int, 2>& ij) const { return ij[0] + (dim() == 2 ? ij[1] * per_axis() : 0); }
  std::array<int, 2> multi_index(int idx) const;
  Vec coords(int idx) const;
  double coord(int i) const { return -spec_.half_width + i * h_; }
  int center() const;
  NodeKind kind(int idx) const;
  // Trapezoid weight h^m times 1/2 per boundary axis.
  double trapezoid_weight(int idx) const;
  // Neighbour along axis d at offset s, or -1 outside the grid.
  int neighbor(int idx, int d, int s) const;
  // For a boundary node: axes where it sits on the box boundary with the outward sign (+1/-1).
  std::vector<std::pair<int, int>> boundary_axes(int idx) const;

 private:
  GridSpec spec_;
  int size_ = 0;
  double h_ = 0.0;
};

}  // namespace csol
