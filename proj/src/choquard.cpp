#include "diracstar/choquard.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "diracstar/errors.hpp"
#include "diracstar/fv.hpp"
#include "diracstar/radial_ops.hpp"

namespace diracstar {

namespace {

constexpr double pi = std::numbers::pi;

struct State {
  double phi, p, A, B;
};

State rhs(double r, const State& y) {
  State d;
  d.phi = y.p;
  if (r > 0.0) {
    double W = 8.0 * pi * (y.A - y.B / r);
    d.p = -2.0 * y.p / r + (W - 1.0) * y.phi;
  } else {
    d.p = -y.phi / 3.0;
  }
  d.A = r * y.phi * y.phi;
  d.B = r * r * y.phi * y.phi;
  return d;
}

State axpy(const State& y, double h, const State& k) {
  return {y.phi + h * k.phi, y.p + h * k.p, y.A + h * k.A, y.B + h * k.B};
}

State rk4(double r, const State& y, double h) {
  State k1 = rhs(r, y);
  State k2 = rhs(r + 0.5 * h, axpy(y, 0.5 * h, k1));
  State k3 = rhs(r + 0.5 * h, axpy(y, 0.5 * h, k2));
  State k4 = rhs(r + h, axpy(y, h, k3));
  return {y.phi + h / 6.0 * (k1.phi + 2.0 * k2.phi + 2.0 * k3.phi + k4.phi),
          y.p + h / 6.0 * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p),
          y.A + h / 6.0 * (k1.A + 2.0 * k2.A + 2.0 * k3.A + k4.A),
          y.B + h / 6.0 * (k1.B + 2.0 * k2.B + 2.0 * k3.B + k4.B)};
}

std::pair<double, double> bisect_bracket(const GridPtr& grid, double lo, double hi, const ShootingControls& ctl) {
  if (!(lo > 0.0) || !(hi > lo)) throw config_error("bracket", "need 0 < lo < hi");
  if (shoot(grid, lo, ctl.substeps).outcome != ShotOutcome::crossing ||
      shoot(grid, hi, ctl.substeps).outcome != ShotOutcome::regrowth)
    throw numerical_error("bracket-not-found", "amplitude range does not straddle the ground state");
  int it = 0;
  while (hi - lo > ctl.bracket_tol && it < ctl.max_bisections) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    auto s = shoot(grid, mid, ctl.substeps);
    if (s.outcome == ShotOutcome::crossing)
      lo = mid;
    else
      hi = mid;
    ++it;
  }
  if (hi - lo > ctl.bracket_tol) throw numerical_error("tolerance-not-met", "bisection did not close the bracket");
  return {lo, hi};
}

using SpMat = Eigen::SparseMatrix<double>;
using Trip = Eigen::Triplet<double>;

SpMat canonical_jacobian(const RadialGrid& g, const std::vector<double>& phi, const std::vector<double>& psi) {
  const std::size_t n = g.size();
  const int ip = int(n), is = int(2 * n - 1);
  std::vector<Trip> t;
  t.reserve(12 * n);
  int row = 0;
  for (std::size_t c = 0; c + 1 < n; ++c, ++row) {
    double h = g.width(c);
    t.emplace_back(row, ip + int(c), 1.0);
    t.emplace_back(row, int(c + 1), -1.0 / h);
    t.emplace_back(row, int(c), 1.0 / h);
  }
  for (std::size_t i = 0; i + 1 < n; ++i, ++row) {
    double V = g.volume(i);
    t.emplace_back(row, ip + int(i), -g.mid(i) * g.mid(i) / V);
    if (i > 0) t.emplace_back(row, ip + int(i - 1), g.mid(i - 1) * g.mid(i - 1) / V);
    t.emplace_back(row, int(i), 2.0 * psi[i] - 1.0);
    t.emplace_back(row, is + int(i), 2.0 * phi[i]);
  }
  t.emplace_back(row++, int(n - 1), 1.0);
  t.emplace_back(row++, is, 1.0);
  for (std::size_t i = 0; i + 1 < n; ++i, ++row) {
    double V = g.volume(i);
    double a = g.mid(i) * g.mid(i) / (g.width(i) * V);
    t.emplace_back(row, is + int(i + 1), a);
    double d = -a;
    if (i > 0) {
      double b = g.mid(i - 1) * g.mid(i - 1) / (g.width(i - 1) * V);
      d -= b;
      t.emplace_back(row, is + int(i - 1), b);
    }
    t.emplace_back(row, is + int(i), d);
    t.emplace_back(row, int(i), -8.0 * pi * phi[i]);
  }
  SpMat J(3 * n - 1, 3 * n - 1);
  J.setFromTriplets(t.begin(), t.end());
  return J;
}

}  // namespace

Shot shoot(const GridPtr& gp, double a, int substeps) {
  const auto& g = *gp;
  const std::size_t n = g.size();
  Shot s;
  s.outcome = ShotOutcome::reached_end;
  s.phi.assign(n, 0.0);
  s.dphi.assign(n, 0.0);
  s.A.assign(n, 0.0);
  s.B.assign(n, 0.0);
  State y{a, 0.0, 0.0, 0.0};
  s.phi[0] = a;
  s.last_node = 0;
  for (std::size_t c = 0; c + 1 < n; ++c) {
    double h = g.width(c) / substeps;
    double r = g.r(c);
    for (int k = 0; k < substeps; ++k) {
      y = rk4(r, y, h);
      r = g.r(c) + (k + 1) * h;
    }
    if (y.phi < 0.0) {
      s.outcome = ShotOutcome::crossing;
      return s;
    }
    if (y.p > 0.0) {
      s.outcome = ShotOutcome::regrowth;
      return s;
    }
    s.phi[c + 1] = y.phi;
    s.dphi[c + 1] = y.p;
    s.A[c + 1] = y.A;
    s.B[c + 1] = y.B;
    s.last_node = c + 1;
  }
  return s;
}

double bisect_amplitude(const GridPtr& grid, double lo, double hi, const ShootingControls& ctl) {
  auto b = bisect_bracket(grid, lo, hi, ctl);
  return 0.5 * (b.first + b.second);
}

std::vector<double> canonical_residual(const GridPtr& gp, const std::vector<double>& phi,
                                       const std::vector<double>& dphi, const std::vector<double>& psi) {
  const auto& g = *gp;
  const std::size_t n = g.size();
  std::vector<double> F;
  F.reserve(3 * n - 1);
  for (std::size_t c = 0; c + 1 < n; ++c) F.push_back(dphi[c] - fv::grad<double>(g, phi, c));
  for (std::size_t i = 0; i + 1 < n; ++i)
    F.push_back(-fv::div2<double>(g, dphi, i) + (2.0 * psi[i] - 1.0) * phi[i]);
  F.push_back(phi[n - 1]);
  F.push_back(psi[0]);
  std::vector<double> gpsi(n - 1);
  for (std::size_t c = 0; c + 1 < n; ++c) gpsi[c] = fv::grad<double>(g, psi, c);
  for (std::size_t i = 0; i + 1 < n; ++i)
    F.push_back(fv::div2<double>(g, gpsi, i) - 4.0 * pi * phi[i] * phi[i]);
  return F;
}

CanonicalSolution polish_canonical(const GridPtr& gp, std::vector<double> phi, std::vector<double> dphi,
                                   std::vector<double> psi, const ShootingControls& ctl) {
  const auto& g = *gp;
  const std::size_t n = g.size();
  auto pack = [&](Eigen::VectorXd& x) {
    x.resize(3 * n - 1);
    for (std::size_t i = 0; i < n; ++i) x[i] = phi[i];
    for (std::size_t c = 0; c + 1 < n; ++c) x[n + c] = dphi[c];
    for (std::size_t i = 0; i < n; ++i) x[2 * n - 1 + i] = psi[i];
  };
  auto unpack = [&](const Eigen::VectorXd& x) {
    for (std::size_t i = 0; i < n; ++i) phi[i] = x[i];
    for (std::size_t c = 0; c + 1 < n; ++c) dphi[c] = x[n + c];
    for (std::size_t i = 0; i < n; ++i) psi[i] = x[2 * n - 1 + i];
  };
  auto resid = [&]() { return canonical_residual(gp, phi, dphi, psi); };

  auto F = resid();
  double norm = sup_abs(F);
  int it = 0;
  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
  for (; it < ctl.max_newton; ++it) {
    SpMat J = canonical_jacobian(g, phi, psi);
    lu.compute(J);
    if (lu.info() != Eigen::Success) throw numerical_error("singular-jacobian", "canonical Newton factorization failed");
    Eigen::VectorXd rhs = Eigen::Map<Eigen::VectorXd>(F.data(), Eigen::Index(F.size()));
    Eigen::VectorXd dx = lu.solve(rhs);
    Eigen::VectorXd x0;
    pack(x0);
    double lambda = 1.0;
    bool accepted = false;
    while (lambda >= 1.0 / 1024.0) {
      unpack(x0 - lambda * dx);
      auto Ft = resid();
      double nt = sup_abs(Ft);
      if (std::isfinite(nt) && nt < (1.0 - 1e-4 * lambda) * norm) {
        F = std::move(Ft);
        norm = nt;
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted) {
      unpack(x0);
      if (norm <= ctl.residual_tol) break;
      throw numerical_error("newton-divergence", "canonical polish stalled at residual " + std::to_string(norm));
    }
    if (lambda == 1.0 && dx.lpNorm<Eigen::Infinity>() < 1e-15) {
      ++it;
      break;
    }
  }
  if (!(norm <= ctl.residual_tol))
    throw numerical_error("tolerance-not-met", "canonical residual " + std::to_string(norm));

  CanonicalSolution s;
  s.residual_sup = norm;
  s.newton_iterations = it;
  s.amplitude = phi[0];
  std::vector<double> gpsi(n - 1);
  for (std::size_t c = 0; c + 1 < n; ++c) gpsi[c] = fv::grad<double>(g, psi, c);
  double rho = g.mid(n - 2);
  s.W_inf = 2.0 * (psi[n - 1] + rho * rho * gpsi[n - 2] / g.r(n - 1));
  double mass = 0.0;
  for (std::size_t i = 0; i < n; ++i) mass += phi[i] * phi[i] * g.volume(i);
  s.mass = 4.0 * pi * mass;
  s.phi = RadialProfile(gp, std::move(phi), Parity::even);
  s.dphi = std::move(dphi);
  s.psi = RadialProfile(gp, std::move(psi), Parity::even);
  s.dpsi = std::move(gpsi);
  return s;
}

CanonicalSolution solve_canonical(const GridPtr& gp, const ShootingControls& ctl) {
  const auto& g = *gp;
  const std::size_t n = g.size();
  auto [lo, hi] = bisect_bracket(gp, ctl.a_lo, ctl.a_hi, ctl);
  Shot slo = shoot(gp, lo, ctl.substeps);
  Shot shi = shoot(gp, hi, ctl.substeps);
  std::size_t last = std::min(slo.last_node, shi.last_node);
  // trust the integration while the two bracketing trajectories agree
  std::size_t k = 1;
  while (k < last && std::abs(slo.phi[k] - shi.phi[k]) <= 1e-3 * std::abs(slo.phi[k])) ++k;
  k = std::max<std::size_t>(k - 1, 2);

  std::vector<double> phi(n), psi(n), dphi(n - 1);
  for (std::size_t i = 0; i <= k; ++i) {
    phi[i] = 0.5 * (slo.phi[i] + shi.phi[i]);
    double A = 0.5 * (slo.A[i] + shi.A[i]), B = 0.5 * (slo.B[i] + shi.B[i]);
    psi[i] = i == 0 ? 0.0 : 4.0 * pi * (A - B / g.r(i));
  }
  double rs = g.r(k), ps = phi[k];
  double Ainf = 0.5 * (slo.A[k] + shi.A[k]), Binf = 0.5 * (slo.B[k] + shi.B[k]);
  double Winf = 8.0 * pi * Ainf;
  if (!(Winf > 1.0)) throw numerical_error("tail-match", "potential limit does not exceed the eigenvalue");
  double kappa = std::sqrt(Winf - 1.0);
  double gamma = 4.0 * pi * Binf / kappa;
  // decaying branch phi ~ r^{gamma-1} e^{-kappa r}
  for (std::size_t i = k + 1; i < n; ++i) {
    double r = g.r(i);
    phi[i] = ps * std::pow(r / rs, gamma - 1.0) * std::exp(-kappa * (r - rs));
    psi[i] = 4.0 * pi * (Ainf - Binf / r);
  }
  phi[n - 1] = 0.0;
  for (std::size_t c = 0; c + 1 < n; ++c) dphi[c] = fv::grad<double>(g, phi, c);
  auto s = polish_canonical(gp, std::move(phi), std::move(dphi), std::move(psi), ctl);
  s.shooting_amplitude = 0.5 * (lo + hi);
  return s;
}

namespace {

ChoquardSolution rescale_onto(const CanonicalSolution& can, const UnitSystem& units, GridPtr target) {
  units.validate();
  if (!(can.mass > 0.0)) throw numerical_error("scaling-degenerate", "canonical mass vanishes");
  const double gc = units.scale_constant();
  const double beta = gc / (2.0 * can.mass);
  const double alpha = std::sqrt(2.0 * beta * beta * beta * beta / gc);
  const double Escale = units.hbar * units.hbar * beta * beta / (2.0 * units.m);
  if (!target) target = can.phi.grid->scaled(1.0 / beta);
  const auto& g = *target;
  const std::size_t n = g.size();
  if (n != can.phi.size()) throw config_error("grid-mismatch", "target grid size differs");

  ChoquardSolution s;
  s.grid = target;
  s.units = units;
  s.alpha = alpha;
  s.beta = beta;
  s.canonical = can;
  std::vector<double> phi(n), u(n), dphi(n - 1), du(n - 1);
  const double c = 2.0 * Escale / units.m;
  const auto& P = can.psi.f;
  double u0 = c * (g.r(n - 2) * P[n - 2] - g.r(n - 1) * P[n - 1]) / (g.r(n - 1) - g.r(n - 2));
  for (std::size_t i = 0; i < n; ++i) {
    phi[i] = alpha * can.phi.f[i];
    u[i] = u0 + c * P[i];
  }
  for (std::size_t k = 0; k + 1 < n; ++k) {
    dphi[k] = alpha * beta * can.dphi[k];
    du[k] = c * beta * can.dpsi[k];
  }
  s.phi = RadialProfile(target, std::move(phi), Parity::even);
  s.u = RadialProfile(target, std::move(u), Parity::even);
  s.dphi = std::move(dphi);
  s.du = std::move(du);
  s.u0 = u0;

  double norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) norm += s.phi.f[i] * s.phi.f[i] * g.volume(i);
  s.normalization = 4.0 * pi * norm;

  auto H = choquard_hamiltonian_phi(s);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    num += g.volume(i) * s.phi.f[i] * H[i];
    den += g.volume(i) * s.phi.f[i] * s.phi.f[i];
  }
  s.eta = num / den;
  s.E = s.eta - units.m * u0;
  double res = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) res = std::max(res, std::abs(H[i] - s.eta * s.phi.f[i]));
  s.ele_residual_sup = res;
  s.energy = choquard_energy(s.phi, units);
  auto [c1, c2] = fit_decay(s.phi);
  s.decay_amplitude = c1;
  s.decay_rate = c2;
  return s;
}

}  // namespace

ChoquardSolution rescale_to_normalized(const CanonicalSolution& canonical, const UnitSystem& units) {
  return rescale_onto(canonical, units, nullptr);
}

ChoquardSolution solve_choquard(const GridPtr& grid, const UnitSystem& units, const ChoquardControls& ctl) {
  units.validate();
  const double gc = units.scale_constant();
  // canonical mass of the ground state is about 1.809
  double beta = gc / (2.0 * 1.809);
  CanonicalSolution can = solve_canonical(grid->scaled(beta), ctl.shoot);
  const double shot = can.shooting_amplitude;
  for (int it = 0;; ++it) {
    double next = gc / (2.0 * can.mass);
    if (std::abs(next - beta) <= ctl.beta_tol * beta) break;
    if (it >= ctl.max_beta_iterations) throw numerical_error("tolerance-not-met", "length scale iteration");
    beta = next;
    can = polish_canonical(grid->scaled(beta), can.phi.f, can.dphi, can.psi.f, ctl.shoot);
    can.shooting_amplitude = shot;
  }
  return rescale_onto(can, units, grid);
}

std::vector<double> choquard_hamiltonian_phi(const ChoquardSolution& s) {
  const auto& g = *s.grid;
  const std::size_t n = g.size();
  const double k = s.units.hbar * s.units.hbar / (2.0 * s.units.m);
  std::vector<double> H(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i)
    H[i] = -k * fv::div2<double>(g, s.dphi, i) + s.units.m * s.u.f[i] * s.phi.f[i];
  return H;
}

double choquard_energy(const RadialProfile& phi, const UnitSystem& units) {
  const std::size_t n = phi.size();
  auto d = derivative(phi);
  std::vector<double> kin(n), rho(n);
  for (std::size_t i = 0; i < n; ++i) {
    double r = phi.r(i);
    kin[i] = 4.0 * pi * d.f[i] * d.f[i] * r * r;
    rho[i] = phi.f[i] * phi.f[i];
  }
  double T = units.hbar * units.hbar / (2.0 * units.m) * integrate(phi.grid, kin);
  // int int |phi(x)|^2 |phi(y)|^2/|x-y| = 4 pi int |phi|^2 [4 pi Green(|phi|^2)] r^2 dr
  PoissonControls pc;
  pc.tail_threshold = 1.0;
  auto green = radial_poisson(RadialProfile(phi.grid, rho, Parity::even), pc);
  std::vector<double> pot(n);
  for (std::size_t i = 0; i < n; ++i) {
    double r = phi.r(i);
    pot[i] = 4.0 * pi * rho[i] * 4.0 * pi * green.f[i] * r * r;
  }
  double D = integrate(phi.grid, pot);
  return T - units.m * units.m * units.G * D;
}

std::pair<double, double> fit_decay(const RadialProfile& phi) {
  const double R = phi.grid->r_max();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t cnt = 0;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    double r = phi.r(i);
    if (r < 0.5 * R || r > 0.9 * R) continue;
    double v = phi.f[i];
    if (!(v > 1e-300) || !std::isfinite(v))
      throw numerical_error("fit-window-underflow", "profile not resolvable in the fit window");
    double y = std::log(v);
    sx += r;
    sy += y;
    sxx += r * r;
    sxy += r * y;
    ++cnt;
  }
  if (cnt < 2) throw numerical_error("fit-window-underflow", "too few nodes in the fit window");
  double nn = double(cnt);
  double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
  double icpt = (sy - slope * sx) / nn;
  return {std::exp(icpt), -slope};
}

double linearized_decay_rate(const ChoquardSolution& s) {
  return std::sqrt(-2.0 * s.units.m * s.eta) / s.units.hbar;
}

}  // namespace diracstar
