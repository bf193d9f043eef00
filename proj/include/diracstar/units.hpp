#pragma once

#include <numbers>

#include "diracstar/errors.hpp"

namespace diracstar {

struct UnitSystem {
  double hbar = 1.0;
  double m = 1.0;
  double G = 1.0;

  UnitSystem() = default;
  UnitSystem(double hbar_, double m_, double G_) : hbar(hbar_), m(m_), G(G_) { validate(); }

  void validate() const {
    if (!(hbar > 0.0) || !(m > 0.0) || !(G > 0.0))
      throw config_error("units", "hbar, m and G must be strictly positive");
  }

  // coupling in -Laplace(u) = -kappa |psi|^2
  double kappa() const { return 8.0 * std::numbers::pi * G * m; }
  // g = 4 m^3 G / hbar^2, the combination fixing the Choquard length scale
  double scale_constant() const { return 4.0 * m * m * m * G / (hbar * hbar); }
  // speed of light for a given eps = 1/c
  static double light_speed(double eps) { return 1.0 / eps; }
};

}  // namespace diracstar
