#include <algorithm>
#include <cstdlib>
#include <set>
#include <stdexcept>

#include "simflow/discretize.hpp"

namespace simflow::disc {

// Fornberg's recurrence, evaluated exactly.
std::vector<Rational> fd_weights(int m, const std::vector<int>& offsets) {
  const int n = static_cast<int>(offsets.size());
  if (m < 0) throw std::invalid_argument("derivative order must be non-negative");
  if (n <= m) throw std::invalid_argument("need more points than the derivative order");
  if (std::set<int>(offsets.begin(), offsets.end()).size() != offsets.size()) {
    throw std::invalid_argument("singular system: duplicate offsets");
  }
  std::vector<std::vector<Rational>> c(n, std::vector<Rational>(m + 1, Rational(0)));
  Rational c1 = 1;
  Rational c4 = offsets[0];
  c[0][0] = 1;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, m);
    Rational c2 = 1;
    const Rational c5 = c4;
    c4 = offsets[i];
    for (int j = 0; j < i; ++j) {
      const Rational c3 = Rational(offsets[i]) - Rational(offsets[j]);
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) {
          c[i][k] = c1 * (Rational(k) * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        }
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) {
        c[j][k] = (c4 * c[j][k] - Rational(k) * c[j][k - 1]) / c3;
      }
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<Rational> w(n);
  for (int j = 0; j < n; ++j) w[j] = c[j][m];
  return w;
}

std::vector<int> centered_offsets(int m, int accuracy) {
  if (m < 0 || accuracy < 2 || accuracy % 2 != 0) {
    throw std::invalid_argument("centered stencils need m >= 0 and even accuracy >= 2");
  }
  if (m == 0) return {0};
  const int points = 2 * ((m + 1) / 2) - 1 + accuracy;
  const int radius = (points - 1) / 2;
  std::vector<int> out;
  for (int k = -radius; k <= radius; ++k) out.push_back(k);
  return out;
}

Stencil make_stencil(int m, std::string axis, std::vector<int> offsets) {
  Stencil s;
  s.order = m;
  s.axis = std::move(axis);
  s.weights = fd_weights(m, offsets);
  s.offsets = std::move(offsets);
  for (const auto& w : s.weights) s.values.push_back(static_cast<double>(w));
  return s;
}

Stencil centered_stencil(int m, std::string axis, int accuracy) {
  return make_stencil(m, std::move(axis), centered_offsets(m, accuracy));
}

Stencil ko_dissipation(int r, double sigma, std::string axis) {
  if (r < 1) throw std::invalid_argument("dissipation order must be >= 1");
  if (sigma < 0.0) throw std::invalid_argument("dissipation strength must be >= 0");
  // (D+D-)^r has coefficients (-1)^k C(2r, k); the sign in front keeps
  // the operator negative semi-definite for every r.
  Stencil s;
  s.order = 1;
  s.axis = std::move(axis);
  Rational binom = 1;
  const Rational scale = Rational(r % 2 == 1 ? 1 : -1) / Rational(boost::multiprecision::cpp_int(1) << (2 * r));
  for (int k = 0; k <= 2 * r; ++k) {
    const Rational sign = k % 2 == 0 ? 1 : -1;
    s.offsets.push_back(k - r);
    s.weights.push_back(scale * sign * binom);
    binom = binom * Rational(2 * r - k) / Rational(k + 1);
  }
  for (const auto& w : s.weights) s.values.push_back(sigma * static_cast<double>(w));
  return s;
}

int Stencil::radius() const {
  int r = 0;
  for (int o : offsets) r = std::max(r, std::abs(o));
  return r;
}

std::string Stencil::label() const {
  return "D" + std::to_string(order) + "_" + axis + "[" + std::to_string(points()) + "pt]";
}

TimeIntegrator TimeIntegrator::ssp_rk3() {
  TimeIntegrator t;
  t.scheme = "ssp_rk3";
  t.stages = {{Rational(0), Rational(1)}, {Rational(3, 4), Rational(1, 4)}, {Rational(1, 3), Rational(2, 3)}};
  return t;
}

void rk3_step(std::vector<double>& u, const Rhs& rhs, double dt, const TimeIntegrator& integrator) {
  const std::size_t n = u.size();
  const std::vector<double> base = u;
  std::vector<double> stage = u;
  std::vector<double> l(n, 0.0);
  for (const auto& s : integrator.stages) {
    const double prev = static_cast<double>(s.prev);
    std::fill(l.begin(), l.end(), 0.0);
    rhs(stage, l);
    for (std::size_t i = 0; i < n; ++i) {
      stage[i] = base[i] + prev * ((stage[i] - base[i]) + dt * l[i]);
    }
  }
  u = std::move(stage);
}

}  // namespace simflow::disc
