#include "diracstar/norms.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "diracstar/errors.hpp"
#include "diracstar/radial_ops.hpp"

namespace diracstar {

void NormSpec::validate() const {
  if (delta_prime < 0.0) throw config_error("norm-spec", "delta' must be >= 0");
  if (s < 0 || s > 2) throw config_error("norm-spec", "s must be 0, 1 or 2");
  if (kind == NormKind::exp_sobolev && !(delta > 0.0))
    throw config_error("norm-spec", "exponential weight needs delta > 0");
  if (kind == NormKind::c1_weighted && delta_prime > 0.0 && delta_prime < 1.0)
    throw config_error("norm-spec", "C1 vanishing order must be >= 1");
}

namespace {

double poly_sup(const RadialProfile& f, double delta) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s = std::max(s, std::pow(1.0 + f.r(i), delta) * std::abs(f.f[i]));
  return s;
}

double l2_exp(const GridPtr& g, const std::vector<double>& sq, double delta) {
  std::vector<double> integrand(sq.size());
  for (std::size_t i = 0; i < sq.size(); ++i) {
    double r = g->r(i);
    integrand[i] = 4.0 * std::numbers::pi * std::exp(2.0 * delta * r) * sq[i] * r * r;
  }
  return std::sqrt(std::max(0.0, integrate(g, integrand)));
}

double exp_sobolev(const RadialProfile& f, double delta, int s) {
  const auto& g = f.grid;
  const std::size_t n = f.size();
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = f.f[i] * f.f[i];
  double total = l2_exp(g, sq, delta);
  if (s == 0) return total;
  auto d1 = derivative(f);
  for (std::size_t i = 0; i < n; ++i) sq[i] = d1.f[i] * d1.f[i];
  // each of the three first partials carries a third of |f'|^2
  total += std::sqrt(3.0) * l2_exp(g, sq, delta);
  if (s == 1) return total;
  if (f.parity != Parity::even) throw config_error("parity", "second-order Sobolev weight needs an even profile");
  auto d2 = second_derivative(f);
  // d_i d_j f = a delta_ij + b n_i n_j, a = f'/r, b = f'' - f'/r
  std::vector<double> pure(n), mixed(n);
  for (std::size_t i = 0; i < n; ++i) {
    double a = i == 0 ? d2.f[0] : d1.f[i] / f.r(i);
    double b = i == 0 ? 0.0 : d2.f[i] - a;
    pure[i] = a * a + 2.0 * a * b / 3.0 + b * b / 5.0;
    mixed[i] = b * b / 15.0;
  }
  total += 3.0 * l2_exp(g, pure, delta) + 3.0 * l2_exp(g, mixed, delta);
  return total;
}

}  // namespace

double vanishing_factor(const RadialProfile& f, double order) {
  if (order == 0.0) return sup_abs(f.f);
  double s = 0.0;
  std::vector<double> gvals(3);
  for (std::size_t i = 1; i < f.size(); ++i) {
    double v = std::abs(f.f[i]) / std::pow(f.r(i), order);
    if (i <= 3) gvals[i - 1] = f.f[i] / std::pow(f.r(i), order);
    s = std::max(s, v);
  }
  auto w = fd_weights(0.0, {f.r(1), f.r(2), f.r(3)}, 0);
  double g0 = w[0] * gvals[0] + w[1] * gvals[1] + w[2] * gvals[2];
  return std::max(s, std::abs(g0));
}

double weighted_norm(const RadialProfile& f, const NormSpec& spec) {
  spec.validate();
  double v = 0.0;
  switch (spec.kind) {
    case NormKind::poly_sup:
      v = poly_sup(f, spec.delta);
      break;
    case NormKind::poly_sup_vanishing:
      v = vanishing_factor(f, spec.delta_prime) + poly_sup(f, spec.delta);
      break;
    case NormKind::c1_weighted: {
      auto d = derivative(f);
      v = poly_sup(f, spec.delta) + poly_sup(d, spec.delta + 1.0);
      if (spec.delta_prime > 0.0) {
        v += vanishing_factor(f, spec.delta_prime) + poly_sup(f, spec.delta);
        v += vanishing_factor(d, spec.delta_prime - 1.0) + poly_sup(d, spec.delta + 1.0);
      }
      break;
    }
    case NormKind::exp_sobolev:
      v = exp_sobolev(f, spec.delta, spec.s);
      break;
  }
  if (!std::isfinite(v)) throw numerical_error("overflow", "weighted norm is not finite");
  return v;
}

}  // namespace diracstar
