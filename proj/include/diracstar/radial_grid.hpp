#pragma once

#include <cstddef>
#include <memory>
#include <vector>

namespace diracstar {

class RadialGrid;
using GridPtr = std::shared_ptr<const RadialGrid>;

/// Nodes 0 = r_0 < ... < r_{n-1} = r_max with Simpson weights and the
/// staggered finite-volume geometry (cell midpoints and node control volumes).
class RadialGrid {
public:
  /// r_i = r_max (i/(n-1))^p
  static GridPtr stretched(std::size_t n, double r_max, double p = 2.0);
  static GridPtr from_nodes(std::vector<double> nodes);

  std::size_t size() const { return r_.size(); }
  std::size_t cells() const { return r_.size() - 1; }
  double r(std::size_t i) const { return r_[i]; }
  double r_max() const { return r_.back(); }
  double stretch() const { return p_; }
  const std::vector<double>& nodes() const { return r_; }

  // Simpson weights, integral of f dr ~ sum w_i f_i
  const std::vector<double>& weights() const { return w_; }

  // cell c spans [r_c, r_{c+1}]
  double mid(std::size_t c) const { return mid_[c]; }
  double width(std::size_t c) const { return h_[c]; }
  const std::vector<double>& mids() const { return mid_; }
  const std::vector<double>& widths() const { return h_; }

  // node control volume [lower(i), upper(i)]
  double lower(std::size_t i) const { return i == 0 ? 0.0 : mid_[i - 1]; }
  double upper(std::size_t i) const { return i + 1 == r_.size() ? r_.back() : mid_[i]; }
  double span(std::size_t i) const { return upper(i) - lower(i); }
  // integral of r^2 dr over the control volume
  double volume(std::size_t i) const { return vol_[i]; }
  const std::vector<double>& volumes() const { return vol_; }
  // integral of r dr over the control volume
  double area(std::size_t i) const { return area_[i]; }

  // uniform dilation r -> s r, volumes scale as s^3
  GridPtr scaled(double s) const;

private:
  RadialGrid(std::vector<double> nodes, double p);
  void build();

  std::vector<double> r_, w_, mid_, h_, vol_, area_;
  double p_ = 0.0;
};

/// Finite-difference weights (Fornberg) for derivative `order` at x0 from points xs.
std::vector<double> fd_weights(double x0, const std::vector<double>& xs, int order);

/// Weights w_k with integral_a^b p(x) dx = sum w_k p(xs_k) for the interpolating polynomial.
std::vector<double> interp_integral_weights(const std::vector<double>& xs, double a, double b);

}  // namespace diracstar
