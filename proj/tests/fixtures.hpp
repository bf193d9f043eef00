#pragma once
// Cached ground states and random smooth perturbations shared by the tests.

#include <cmath>
#include <map>
#include <random>
#include <tuple>

#include "diracstar/linearized.hpp"

namespace fixture {

using namespace diracstar;

inline const ChoquardSolution& ground_state(std::size_t n, double r_max = 40.0, double p = 2.0) {
  static std::map<std::tuple<std::size_t, double, double>, ChoquardSolution> cache;
  auto key = std::make_tuple(n, r_max, p);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, solve_choquard(RadialGrid::stretched(n, r_max, p))).first;
  return it->second;
}

inline const NewtonianLimitPoint& limit(std::size_t n, double p = 2.0) {
  static std::map<std::pair<std::size_t, double>, NewtonianLimitPoint> cache;
  auto key = std::make_pair(n, p);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, limit_point(ground_state(n, 40.0, p))).first;
  return it->second;
}

// (a + b r + c cos r) e^{-r/2}, times r^k
struct SmoothSampler {
  std::mt19937 rng;
  std::uniform_real_distribution<double> U{-1.0, 1.0};
  explicit SmoothSampler(unsigned seed) : rng(seed) {}

  double uniform() { return U(rng); }

  std::vector<double> at(const std::vector<double>& r, int k) {
    double a = U(rng), b = U(rng), c = U(rng), d = 0.3 + 0.4 * std::abs(U(rng));
    std::vector<double> v(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) v[i] = std::pow(r[i], k) * (a + b * r[i] + c * std::cos(r[i])) * std::exp(-d * r[i]);
    return v;
  }

  TangentState tangent(const GridPtr& g) {
    TangentState xi = TangentState::zeros(g);
    xi.dl = U(rng);
    xi.q = at(g->mids(), 2);
    xi.n = at(g->nodes(), 0);
    xi.chi1 = at(g->nodes(), 0);
    xi.chi1.back() = 0.0;
    xi.chi2 = at(g->mids(), 1);
    return xi;
  }

  // alpha = O(r^2), j1 vanishing at the origin, decaying tails
  ResidualVector residual(const GridPtr& g) {
    ResidualVector y = ResidualVector::zeros(*g);
    y.alpha = at(g->nodes(), 2);
    y.beta = at(g->mids(), 1);
    y.j1 = at(g->mids(), 1);
    auto j2 = at(g->nodes(), 0);
    std::copy(j2.begin(), j2.begin() + y.j2.size(), y.j2.begin());
    y.n_tail = 1e-3 * U(rng);
    y.phi_tail = 1e-3 * U(rng);
    return y;
  }
};

inline double sup_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).cwiseAbs().maxCoeff(); }
inline double sup(const Eigen::VectorXd& a) { return a.cwiseAbs().maxCoeff(); }

}  // namespace fixture
