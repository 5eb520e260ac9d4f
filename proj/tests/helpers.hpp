// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <initializer_list>

#include "sfbf/operators.hpp"
#include "sfbf/rng.hpp"

namespace sfbf::test {

inline Point pt(std::initializer_list<double> v) {
  Point p(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) p[i++] = x;
  return p;
}

inline Point random_point(RngStream& rng, Index d, double scale = 1.0) {
  Point p(d);
  for (Index i = 0; i < d; ++i) p[i] = scale * rng.normal();
  return p;
}

inline Matrix random_matrix(RngStream& rng, Index rows, Index cols) {
  Matrix M(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) M(i, j) = rng.normal();
  return M;
}

}  // namespace sfbf::test
