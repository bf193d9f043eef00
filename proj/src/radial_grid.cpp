#include "diracstar/radial_grid.hpp"

#include <algorithm>
#include <cmath>

#include "diracstar/errors.hpp"

namespace diracstar {

GridPtr RadialGrid::stretched(std::size_t n, double r_max, double p) {
  if (n < 4) throw config_error("grid", "need at least 4 nodes");
  if (!(r_max > 0.0) || !std::isfinite(r_max)) throw config_error("grid", "r_max must be positive");
  if (!(p >= 1.0)) throw config_error("grid", "stretch exponent must be >= 1");
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    double t = double(i) / double(n - 1);
    r[i] = r_max * std::pow(t, p);
  }
  r[0] = 0.0;
  r[n - 1] = r_max;
  return GridPtr(new RadialGrid(std::move(r), p));
}

GridPtr RadialGrid::from_nodes(std::vector<double> nodes) {
  if (nodes.size() < 4) throw config_error("grid", "need at least 4 nodes");
  if (nodes[0] != 0.0) throw config_error("grid", "first node must be exactly 0");
  for (std::size_t i = 1; i < nodes.size(); ++i)
    if (!(nodes[i] > nodes[i - 1]) || !std::isfinite(nodes[i]))
      throw config_error("grid", "nodes must be finite and strictly increasing");
  return GridPtr(new RadialGrid(std::move(nodes), 0.0));
}

GridPtr RadialGrid::scaled(double s) const {
  std::vector<double> r(r_.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = s * r_[i];
  return GridPtr(new RadialGrid(std::move(r), p_));
}

RadialGrid::RadialGrid(std::vector<double> nodes, double p) : r_(std::move(nodes)), p_(p) { build(); }

void RadialGrid::build() {
  const std::size_t n = r_.size();
  w_.assign(n, 0.0);
  std::size_t c = 0;
  for (; c + 2 < n; c += 2) {
    auto w = interp_integral_weights({r_[c], r_[c + 1], r_[c + 2]}, r_[c], r_[c + 2]);
    for (int k = 0; k < 3; ++k) w_[c + k] += w[k];
  }
  if (c + 1 < n) {
    // odd number of cells: last cell from the quadratic through the final three nodes
    auto w = interp_integral_weights({r_[n - 3], r_[n - 2], r_[n - 1]}, r_[n - 2], r_[n - 1]);
    for (int k = 0; k < 3; ++k) w_[n - 3 + k] += w[k];
  }

  mid_.resize(n - 1);
  h_.resize(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    mid_[k] = 0.5 * (r_[k] + r_[k + 1]);
    h_[k] = r_[k + 1] - r_[k];
  }
  vol_.resize(n);
  area_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double a = lower(i), b = upper(i);
    vol_[i] = (b * b * b - a * a * a) / 3.0;
    area_[i] = 0.5 * (b * b - a * a);
  }
}

std::vector<double> fd_weights(double z, const std::vector<double>& x, int m) {
  const int n = int(x.size()) - 1;
  std::vector<std::vector<double>> c(n + 1, std::vector<double>(m + 1, 0.0));
  double c1 = 1.0, c4 = x[0] - z;
  c[0][0] = 1.0;
  for (int i = 1; i <= n; ++i) {
    int mn = std::min(i, m);
    double c2 = 1.0, c5 = c4;
    c4 = x[i] - z;
    for (int j = 0; j < i; ++j) {
      double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n + 1);
  for (int i = 0; i <= n; ++i) w[i] = c[i][m];
  return w;
}

std::vector<double> interp_integral_weights(const std::vector<double>& xs, double a, double b) {
  const std::size_t k = xs.size();
  std::vector<double> w(k, 0.0);
  const double len = b - a;
  for (std::size_t j = 0; j < k; ++j) {
    // basis polynomial in t = x - a, coefficients ascending
    std::vector<double> poly{1.0};
    double denom = 1.0;
    for (std::size_t q = 0; q < k; ++q) {
      if (q == j) continue;
      double root = xs[q] - a;
      std::vector<double> next(poly.size() + 1, 0.0);
      for (std::size_t p = 0; p < poly.size(); ++p) {
        next[p + 1] += poly[p];
        next[p] -= root * poly[p];
      }
      poly.swap(next);
      denom *= xs[j] - xs[q];
    }
    double s = 0.0, pw = len;
    for (std::size_t p = 0; p < poly.size(); ++p) {
      s += poly[p] * pw / double(p + 1);
      pw *= len;
    }
    w[j] = s / denom;
  }
  return w;
}

}  // namespace diracstar
