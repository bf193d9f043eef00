#pragma once

#include <string>
#include <vector>

#include "diracstar/radial_grid.hpp"

namespace diracstar {

// even: f'(0) = 0.  vanishing: f(0) = 0 with finite f'(0).
enum class Parity { even, vanishing };

struct RadialProfile {
  GridPtr grid;
  std::vector<double> f;
  Parity parity = Parity::even;

  RadialProfile() = default;
  RadialProfile(GridPtr g, std::vector<double> samples, Parity par = Parity::even);
  static RadialProfile zeros(GridPtr g, Parity par = Parity::even);

  std::size_t size() const { return f.size(); }
  double operator[](std::size_t i) const { return f[i]; }
  double r(std::size_t i) const { return grid->r(i); }
};

RadialProfile operator-(const RadialProfile& a, const RadialProfile& b);
RadialProfile operator*(double c, const RadialProfile& a);

double sup_abs(const std::vector<double>& v);

}  // namespace diracstar
