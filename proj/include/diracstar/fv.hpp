#pragma once

#include "diracstar/radial_grid.hpp"

namespace diracstar::fv {

// (r^2 F)'/r^2 over the control volume of node i < n-1, F given at cells
template <class T, class Vec>
T div2(const RadialGrid& g, const Vec& flux, std::size_t i) {
  T s = g.mid(i) * g.mid(i) * flux[i];
  if (i > 0) s = s - g.mid(i - 1) * g.mid(i - 1) * flux[i - 1];
  return s / g.volume(i);
}

// (r F)'/r over the control volume of node i < n-1
template <class T, class Vec>
T div1(const RadialGrid& g, const Vec& flux, std::size_t i) {
  T s = g.mid(i) * flux[i];
  if (i > 0) s = s - g.mid(i - 1) * flux[i - 1];
  return s / g.area(i);
}

// forward difference of node values across cell c
template <class T, class Vec>
T grad(const RadialGrid& g, const Vec& f, std::size_t c) {
  return (f[c + 1] - f[c]) / g.width(c);
}

}  // namespace diracstar::fv
