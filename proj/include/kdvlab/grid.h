#pragma once

#include "kdvlab/common.h"

namespace kdvlab {

/// Values of a real function at the interior nodes x_i = i*h, i = 1..n,
/// h = L/(n+1). The boundary values are zero and not stored.
struct GridFunction {
  double length = 0.0;
  Vec values;

  GridFunction() = default;
  GridFunction(double L, Vec v) : length(L), values(std::move(v)) {}
  static GridFunction zeros(double L, int n) { return {L, Vec::Zero(n)}; }

  int n() const { return static_cast<int>(values.size()); }
  double h() const { return length / (n() + 1); }
  /// Coordinate of stored entry i (0-based).
  double x(int i) const { return (i + 1) * h(); }
  double l2_norm() const { return std::sqrt(h()) * values.norm(); }
};

/// Space-time grid: n_x interior points (even), n_t uniform steps on [0, T].
struct Grid {
  double length = 1.0;
  double horizon = 1.0;
  int n_x = 1600;
  int n_t = 40000;

  double h() const { return length / (n_x + 1); }
  double dt() const { return horizon / n_t; }
  double time(int n) const { return horizon * n / n_t; }
  /// Requires L, T > 0, n_x >= 16 and even, n_t >= 16.
  void validate() const;
  /// Grid with n_t chosen so that dt <= dt_max.
  static Grid make(double L, double T, int n_x, double dt_max);
};

}  // namespace kdvlab
