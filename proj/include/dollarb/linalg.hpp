#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "dollarb/matrix.hpp"

namespace dollarb {

struct SymmetricEigen {
  std::vector<double> values; // values[j] belongs to column j of `vectors`
  Matrix vectors;
  int sweeps = 0;
  bool converged = false;
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Sweeps over all (p, q) pairs, zeroing a(p, q) with one plane rotation each,
/// until the off-diagonal Frobenius norm is at most `tolerance`·‖A‖_F.
/// The lower triangle of `a` is ignored. Results come back unsorted.
inline SymmetricEigen jacobi_eigen(const Matrix& a, double tolerance = 1e-12, int max_sweeps = 100) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("jacobi_eigen: matrix must be square");
  const std::size_t n = a.rows();

  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j)
      m(i, j) = m(j, i) = a(i, j);

  SymmetricEigen out;
  out.vectors = Matrix::identity(n);
  Matrix& v = out.vectors;

  double frob2 = 0.0;
  for (double x : m.values())
    frob2 += x * x;
  const double limit2 = tolerance * tolerance * frob2;

  auto off2 = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        s += 2.0 * m(i, j) * m(i, j);
    return s;
  };

  while (true) {
    if (off2() <= limit2) {
      out.converged = true;
      break;
    }
    if (out.sweeps >= max_sweeps)
      break;
    ++out.sweeps;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = m(p, q);
        if (apq == 0.0)
          continue;
        const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          if (k == p || k == q)
            continue;
          const double mkp = m(k, p);
          const double mkq = m(k, q);
          m(k, p) = m(p, k) = c * mkp - s * mkq;
          m(k, q) = m(q, k) = s * mkp + c * mkq;
        }
        const double app = m(p, p);
        const double aqq = m(q, q);
        m(p, p) = app - t * apq;
        m(q, q) = aqq + t * apq;
        m(p, q) = m(q, p) = 0.0;

        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out.values[i] = m(i, i);
  return out;
}

/// Reorders columns by descending eigenvalue; equal values keep their
/// original column order.
inline void sort_descending(SymmetricEigen& e) {
  const std::size_t n = e.values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return e.values[a] > e.values[b]; });
  std::vector<double> values(n);
  Matrix vectors(e.vectors.rows(), n);
  for (std::size_t j = 0; j < n; ++j) {
    values[j] = e.values[order[j]];
    for (std::size_t i = 0; i < e.vectors.rows(); ++i)
      vectors(i, j) = e.vectors(i, order[j]);
  }
  e.values = std::move(values);
  e.vectors = std::move(vectors);
}

/// Flips each column so its largest-magnitude entry is positive (first such
/// entry on ties).
inline void fix_signs(Matrix& vectors) {
  for (std::size_t j = 0; j < vectors.cols(); ++j) {
    std::size_t best = 0;
    double best_abs = -1.0;
    for (std::size_t i = 0; i < vectors.rows(); ++i)
      if (std::abs(vectors(i, j)) > best_abs) {
        best_abs = std::abs(vectors(i, j));
        best = i;
      }
    if (vectors.rows() > 0 && vectors(best, j) < 0.0)
      for (std::size_t i = 0; i < vectors.rows(); ++i)
        vectors(i, j) = -vectors(i, j);
  }
}

} // namespace dollarb
