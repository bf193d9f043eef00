#include "diracstar/radial_ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "diracstar/errors.hpp"

namespace diracstar {

RadialProfile::RadialProfile(GridPtr g, std::vector<double> samples, Parity par)
    : grid(std::move(g)), f(std::move(samples)), parity(par) {
  if (!grid) throw config_error("profile", "missing grid");
  if (f.size() != grid->size()) throw config_error("profile", "sample count differs from node count");
  if (parity == Parity::vanishing && f[0] != 0.0)
    throw config_error("profile", "vanishing parity requires f(0) = 0");
}

RadialProfile RadialProfile::zeros(GridPtr g, Parity par) {
  std::vector<double> z(g->size(), 0.0);
  return RadialProfile(std::move(g), std::move(z), par);
}

RadialProfile operator-(const RadialProfile& a, const RadialProfile& b) {
  if (a.grid != b.grid && a.grid->nodes() != b.grid->nodes())
    throw config_error("grid-mismatch", "profiles live on different grids");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = a.f[i] - b.f[i];
  Parity p = (a.parity == Parity::vanishing && b.parity == Parity::vanishing) ? Parity::vanishing : Parity::even;
  return RadialProfile(a.grid, std::move(d), p);
}

RadialProfile operator*(double c, const RadialProfile& a) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = c * a.f[i];
  return RadialProfile(a.grid, std::move(d), a.parity);
}

double sup_abs(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

double f0_eval(double r) {
  if (r < 0.0) throw config_error("domain", "f0 needs r >= 0");
  return f0_of(r);
}

double f0_prime(double r) {
  double d = 1.0 + r;
  // (2r(1+r) - 3r^2)/(1+r)^4
  return r * (2.0 - r) / (d * d * d * d);
}

namespace {

double stencil_apply(const std::vector<double>& w, const std::vector<double>& f, std::size_t first) {
  double s = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) s += w[k] * f[first + k];
  return s;
}

}  // namespace

RadialProfile derivative(const RadialProfile& p) {
  const auto& g = *p.grid;
  const std::size_t n = g.size();
  std::vector<double> d(n);
  const auto& f = p.f;
  // odd extension for vanishing profiles, even extension otherwise
  d[0] = p.parity == Parity::even ? 0.0 : f[1] / g.r(1);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    auto w = fd_weights(g.r(i), {g.r(i - 1), g.r(i), g.r(i + 1)}, 1);
    d[i] = stencil_apply(w, f, i - 1);
  }
  auto w = fd_weights(g.r(n - 1), {g.r(n - 3), g.r(n - 2), g.r(n - 1)}, 1);
  d[n - 1] = stencil_apply(w, f, n - 3);
  if (p.parity == Parity::even) return RadialProfile(p.grid, std::move(d), Parity::vanishing);
  return RadialProfile(p.grid, std::move(d), Parity::even);
}

RadialProfile second_derivative(const RadialProfile& p) {
  const auto& g = *p.grid;
  const std::size_t n = g.size();
  std::vector<double> d(n);
  const auto& f = p.f;
  double r1 = g.r(1);
  d[0] = p.parity == Parity::even ? 2.0 * (f[1] - f[0]) / (r1 * r1) : 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    auto w = fd_weights(g.r(i), {g.r(i - 1), g.r(i), g.r(i + 1)}, 2);
    d[i] = stencil_apply(w, f, i - 1);
  }
  auto w = fd_weights(g.r(n - 1), {g.r(n - 4), g.r(n - 3), g.r(n - 2), g.r(n - 1)}, 2);
  d[n - 1] = stencil_apply(w, f, n - 4);
  return RadialProfile(p.grid, std::move(d), Parity::even);
}

RadialProfile laplacian(const RadialProfile& p) {
  if (p.parity != Parity::even) throw config_error("parity", "radial Laplacian needs an even profile");
  auto d1 = derivative(p);
  auto d2 = second_derivative(p);
  std::vector<double> out(p.size());
  out[0] = 3.0 * d2.f[0];
  for (std::size_t i = 1; i < out.size(); ++i) out[i] = d2.f[i] + 2.0 * d1.f[i] / p.r(i);
  return RadialProfile(p.grid, std::move(out), Parity::even);
}

RadialProfile over_r(const RadialProfile& p) {
  std::vector<double> out(p.size());
  if (p.f[0] != 0.0) throw config_error("parity", "f/r is singular at the origin");
  for (std::size_t i = 1; i < out.size(); ++i) out[i] = p.f[i] / p.r(i);
  if (p.parity == Parity::vanishing) {
    out[0] = derivative(p).f[0];
    return RadialProfile(p.grid, std::move(out), Parity::even);
  }
  out[0] = 0.0;
  return RadialProfile(p.grid, std::move(out), Parity::vanishing);
}

double integrate(const GridPtr& g, const std::vector<double>& f) {
  const auto& w = g->weights();
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * f[i];
  return s;
}

double integrate(const RadialProfile& f) { return integrate(f.grid, f.f); }

std::vector<double> cumulative_integral(const GridPtr& gp, const std::vector<double>& f) {
  const auto& g = *gp;
  const std::size_t n = g.size();
  std::vector<double> c(n, 0.0);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    std::size_t s = k == 0 ? 0 : k - 1;
    s = std::min(s, n - 4);
    auto w = interp_integral_weights({g.r(s), g.r(s + 1), g.r(s + 2), g.r(s + 3)}, g.r(k), g.r(k + 1));
    c[k + 1] = c[k] + stencil_apply(w, f, s);
  }
  return c;
}

RadialProfile radial_poisson(const RadialProfile& f, const PoissonControls& ctl) {
  const auto& g = *f.grid;
  const std::size_t n = g.size();
  std::vector<double> s2f(n), sf(n), abs2(n);
  for (std::size_t i = 0; i < n; ++i) {
    s2f[i] = g.r(i) * g.r(i) * f.f[i];
    sf[i] = g.r(i) * f.f[i];
    abs2[i] = std::abs(s2f[i]);
  }
  double moment = integrate(f.grid, abs2);
  double rm = g.r_max();
  if (moment > 0.0 && rm * rm * rm * std::abs(f.f[n - 1]) > ctl.tail_threshold * moment)
    throw numerical_error("tail-too-heavy", "source does not decay on the grid");
  auto inner = cumulative_integral(f.grid, s2f);
  auto outer = cumulative_integral(f.grid, sf);
  const double total = outer[n - 1];
  std::vector<double> u(n);
  u[0] = total;
  for (std::size_t i = 1; i < n; ++i) u[i] = inner[i] / g.r(i) + (total - outer[i]);
  return RadialProfile(f.grid, std::move(u), Parity::even);
}

RadialProfile kernel_potential(const RadialProfile& phi) {
  const auto& g = *phi.grid;
  const std::size_t n = g.size();
  std::vector<double> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    double p2 = phi.f[i] * phi.f[i];
    a[i] = g.r(i) * p2;
    b[i] = g.r(i) * g.r(i) * p2;
  }
  auto A = cumulative_integral(phi.grid, a);
  auto B = cumulative_integral(phi.grid, b);
  std::vector<double> w(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) w[i] = 8.0 * std::numbers::pi * (A[i] - B[i] / g.r(i));
  return RadialProfile(phi.grid, std::move(w), Parity::even);
}

std::vector<double> nodes_to_cells(const GridPtr& g, const std::vector<double>& f) {
  std::vector<double> c(g->cells());
  for (std::size_t k = 0; k < c.size(); ++k) c[k] = 0.5 * (f[k] + f[k + 1]);
  return c;
}

std::vector<double> cells_to_nodes(const GridPtr& gp, const std::vector<double>& c, double origin) {
  const auto& g = *gp;
  const std::size_t n = g.size();
  std::vector<double> f(n);
  f[0] = origin;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    double t = (g.r(i) - g.mid(i - 1)) / (g.mid(i) - g.mid(i - 1));
    f[i] = (1.0 - t) * c[i - 1] + t * c[i];
  }
  double t = (g.r(n - 1) - g.mid(n - 3)) / (g.mid(n - 2) - g.mid(n - 3));
  f[n - 1] = (1.0 - t) * c[n - 3] + t * c[n - 2];
  return f;
}

std::vector<double> cubic_interpolate(const std::vector<double>& xs, const std::vector<double>& ys,
                                      const std::vector<double>& x) {
  const std::size_t n = xs.size();
  if (n < 4 || ys.size() != n) throw config_error("interpolate", "need at least 4 matching samples");
  std::vector<double> out(x.size());
  for (std::size_t q = 0; q < x.size(); ++q) {
    std::size_t k = std::upper_bound(xs.begin(), xs.end(), x[q]) - xs.begin();
    std::size_t s = k < 2 ? 0 : k - 2;
    s = std::min(s, n - 4);
    double v = 0.0;
    for (std::size_t j = s; j < s + 4; ++j) {
      double l = 1.0;
      for (std::size_t i = s; i < s + 4; ++i)
        if (i != j) l *= (x[q] - xs[i]) / (xs[j] - xs[i]);
      v += l * ys[j];
    }
    out[q] = v;
  }
  return out;
}

}  // namespace diracstar
