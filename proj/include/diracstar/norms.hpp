#pragma once

#include "diracstar/radial_profile.hpp"

namespace diracstar {

enum class NormKind {
  poly_sup,             // sup (1+r)^delta |f|
  poly_sup_vanishing,   // + sup r^{-delta'} |f|
  c1_weighted,          // BC^{1,delta}, with the vanishing-order terms when delta' > 0
  exp_sobolev           // sum over |m| <= s of || e^{delta r} d^m f ||_{L^2(R^3)}
};

struct NormSpec {
  NormKind kind = NormKind::poly_sup;
  double delta = 0.0;
  double delta_prime = 0.0;
  int s = 0;

  void validate() const;

  static NormSpec bc(double delta) { return {NormKind::poly_sup, delta, 0.0, 0}; }
  static NormSpec bc_vanishing(double delta, double dprime) {
    return {NormKind::poly_sup_vanishing, delta, dprime, 0};
  }
  static NormSpec bc1(double delta, double dprime = 0.0) { return {NormKind::c1_weighted, delta, dprime, 1}; }
  static NormSpec h_exp(int s, double delta) { return {NormKind::exp_sobolev, delta, 0.0, s}; }
};

double weighted_norm(const RadialProfile& f, const NormSpec& spec);

// sup r^{-order}|f| with the origin value from extrapolation over nodes 1..3
double vanishing_factor(const RadialProfile& f, double order);

}  // namespace diracstar
