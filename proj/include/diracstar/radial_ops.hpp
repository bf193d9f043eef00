#pragma once

#include <vector>

#include "diracstar/radial_profile.hpp"

namespace diracstar {

// f0(r) = r^2/(1+r)^3
double f0_eval(double r);
double f0_prime(double r);

template <class T>
T f0_of(const T& r) {
  T d = 1.0 + r;
  return r * r / (d * d * d);
}

// Three-point stencils; the origin uses the parity rule.
RadialProfile derivative(const RadialProfile& f);
RadialProfile second_derivative(const RadialProfile& f);
// f'' + 2 f'/r, even parity only (3 f''(0) at the origin)
RadialProfile laplacian(const RadialProfile& f);
// f/r with f/r -> f'(0) at the origin for vanishing parity
RadialProfile over_r(const RadialProfile& f);

// Simpson quadrature of f dr
double integrate(const RadialProfile& f);
double integrate(const GridPtr& g, const std::vector<double>& f);
// C_i = integral_0^{r_i} f dr from local cubic interpolants
std::vector<double> cumulative_integral(const GridPtr& g, const std::vector<double>& f);

struct PoissonControls {
  // relative size of r_max^3 |f(r_max)| against the moment integral
  double tail_threshold = 1e-6;
};

/// u with -Laplace(u) = f and u -> 0 at infinity:
/// u(r) = (1/r) int_0^r s^2 f ds + int_r^inf s f ds.
RadialProfile radial_poisson(const RadialProfile& f, const PoissonControls& ctl = {});

/// W(r) = 8 pi (A - B/r), A = int_0^r s|phi|^2, B = int_0^r s^2|phi|^2, W(0) = 0.
RadialProfile kernel_potential(const RadialProfile& phi);

// linear interpolation of node values to cell midpoints
std::vector<double> nodes_to_cells(const GridPtr& g, const std::vector<double>& f);
// cell values to nodes, linear in r; node 0 gets `origin`, last node is extrapolated
std::vector<double> cells_to_nodes(const GridPtr& g, const std::vector<double>& c, double origin);
// cubic Lagrange interpolation from (xs, ys) to points x (xs increasing)
std::vector<double> cubic_interpolate(const std::vector<double>& xs, const std::vector<double>& ys,
                                      const std::vector<double>& x);

}  // namespace diracstar
