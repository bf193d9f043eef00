#pragma once
// eta from the dilation derivative of the discrete minimum energy:
// with m(s) the minimum on the grid dilated by s, eta = 3 m(1) + m'(1).

#include <numbers>

#include "diracstar/choquard.hpp"

namespace oracle {

// staggered finite-volume energy T - P for hbar = m = 1, G folded into u
inline double fv_energy(const diracstar::ChoquardSolution& s) {
  const auto& g = *s.grid;
  const double hb = s.units.hbar, m = s.units.m;
  double T = 0.0, P = 0.0;
  for (std::size_t c = 0; c < g.cells(); ++c) T += g.mid(c) * g.mid(c) * g.width(c) * s.dphi[c] * s.dphi[c];
  for (std::size_t i = 0; i < g.size(); ++i) P += g.volume(i) * s.u.f[i] * s.phi.f[i] * s.phi.f[i];
  return 4.0 * std::numbers::pi * (hb * hb / (2.0 * m) * T + 0.5 * m * P);
}

inline double dilation_eta(const diracstar::GridPtr& grid, const diracstar::UnitSystem& units, double ds = 1e-4) {
  auto base = diracstar::solve_choquard(grid, units);
  auto up = diracstar::solve_choquard(grid->scaled(1.0 + ds), units);
  auto dn = diracstar::solve_choquard(grid->scaled(1.0 - ds), units);
  double dm = (fv_energy(up) - fv_energy(dn)) / (2.0 * ds);
  return 3.0 * fv_energy(base) + dm;
}

}  // namespace oracle
