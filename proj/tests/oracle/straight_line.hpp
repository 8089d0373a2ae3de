#pragma once

// Independent, deliberately plain reimplementation of resample, normalize,
// PCA and latent L1 matching. Shares no code with the library; the
// eigendecomposition comes from Eigen.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Series = std::vector<double>;
// groups[g][k] = channel k of group g
using Groups = std::vector<std::vector<Series>>;

inline Series resample(const Series& x, int n) {
  const int N = static_cast<int>(x.size());
  Series out(n);
  for (int j = 0; j < n; ++j) {
    const double t = j * double(N - 1) / double(n - 1);
    int i = static_cast<int>(std::floor(t));
    if (i >= N - 1)
      i = N - 2;
    const double w = t - i;
    out[j] = x[i] * (1 - w) + x[i + 1] * w;
  }
  out[0] = x[0];
  out[n - 1] = x[N - 1];
  return out;
}

/// c × n matrix after resampling, per-channel demeaning and per-group
/// population-std scaling.
inline Eigen::MatrixXd preprocess(const Groups& groups, int n) {
  int c = 0;
  for (const auto& g : groups)
    c += static_cast<int>(g.size());
  Eigen::MatrixXd D(c, n);
  int row = 0;
  for (const auto& g : groups) {
    const int first = row;
    for (const auto& ch : g) {
      Series r = resample(ch, n);
      double mean = 0;
      for (double v : r)
        mean += v;
      mean /= n;
      for (int t = 0; t < n; ++t)
        D(row, t) = r[t] - mean;
      ++row;
    }
    const auto block = D.middleRows(first, row - first);
    const double sd = std::sqrt(block.squaredNorm() / double(block.size()));
    if (sd > 0)
      D.middleRows(first, row - first) /= sd;
  }
  return D;
}

struct Latent {
  Eigen::MatrixXd U; // c × nPC
  Series points;     // time-major
};

inline Series flatten_projection(const Eigen::MatrixXd& D, const Eigen::MatrixXd& U) {
  const Eigen::MatrixXd P = D.transpose() * U; // n × nPC
  Series out;
  for (int t = 0; t < P.rows(); ++t)
    for (int k = 0; k < P.cols(); ++k)
      out.push_back(P(t, k));
  return out;
}

inline Latent pca(const Eigen::MatrixXd& D, int nPC) {
  const Eigen::MatrixXd cov = D * D.transpose() / double(D.cols() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  const int c = static_cast<int>(cov.rows());
  std::vector<int> order(c);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return es.eigenvalues()(a) > es.eigenvalues()(b); });
  Latent out;
  out.U.resize(c, nPC);
  for (int k = 0; k < nPC; ++k) {
    Eigen::VectorXd u = es.eigenvectors().col(order[k]);
    int big = 0;
    for (int i = 1; i < c; ++i)
      if (std::abs(u(i)) > std::abs(u(big)))
        big = i;
    if (u(big) < 0)
      u = -u;
    out.U.col(k) = u;
  }
  out.points = flatten_projection(D, out.U);
  return out;
}

inline double l1(const Series& a, const Series& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += std::abs(a[i] - b[i]);
  return s;
}

/// Distances from `candidate` to every template, in template order.
inline Series distances(const std::vector<Groups>& templates, const Groups& candidate, int n, int nPC) {
  const Eigen::MatrixXd Dc = preprocess(candidate, n);
  Series out;
  for (const auto& t : templates) {
    const Latent lt = pca(preprocess(t, n), nPC);
    out.push_back(l1(lt.points, flatten_projection(Dc, lt.U)));
  }
  return out;
}

/// Template indices sorted by distance, first index wins ties.
inline std::vector<int> ranking(const Series& d) {
  std::vector<int> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return d[a] < d[b]; });
  return order;
}

} // namespace oracle
