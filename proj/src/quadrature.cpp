#include "freeent/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>
#include <stdexcept>

namespace freeent {

void QuadratureRule::append(const QuadratureRule& other) {
  nodes.insert(nodes.end(), other.nodes.begin(), other.nodes.end());
  weights.insert(weights.end(), other.weights.begin(), other.weights.end());
}

namespace {

// P_n(x) and P_n'(x) by the three-term recurrence.
std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0, p1 = x;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  if (n == 1) p0 = 1.0;
  return {p1, n * (x * p1 - p0) / (x * x - 1.0)};
}

QuadratureRule reference_rule(int n) {
  QuadratureRule r;
  r.nodes.resize(static_cast<std::size_t>(n));
  r.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = legendre(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre(n, x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[static_cast<std::size_t>(i)] = -x;
    r.weights[static_cast<std::size_t>(i)] = w;
    r.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
    r.weights[static_cast<std::size_t>(n - 1 - i)] = w;
  }
  return r;
}

const QuadratureRule& cached_rule(int n) {
  static std::mutex mutex;
  static std::map<int, QuadratureRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, reference_rule(n)).first;
  return it->second;
}

}  // namespace

QuadratureRule gauss_legendre(int order, double a, double b) {
  if (order < 1) throw std::invalid_argument("gauss_legendre: order must be positive");
  const QuadratureRule& ref = cached_rule(order);
  QuadratureRule r;
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  r.nodes.reserve(ref.size());
  r.weights.reserve(ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    r.nodes.push_back(mid + half * ref.nodes[i]);
    r.weights.push_back(half * ref.weights[i]);
  }
  return r;
}

QuadratureRule composite_gauss_legendre(int order, int panels, double a, double b) {
  QuadratureRule r;
  const double step = (b - a) / panels;
  for (int p = 0; p < panels; ++p) r.append(gauss_legendre(order, a + p * step, p + 1 == panels ? b : a + (p + 1) * step));
  return r;
}

QuadratureRule graded_gauss_legendre(int order, int levels, double a, double b) {
  QuadratureRule r;
  if (!(b > a)) return r;
  const double d = 0.5 * (b - a);
  const double tiny = d * std::ldexp(1.0, -levels);
  r.append(gauss_legendre(order, a, a + tiny));
  for (int j = levels - 1; j >= 0; --j) r.append(gauss_legendre(order, a + d * std::ldexp(1.0, -j - 1), a + d * std::ldexp(1.0, -j)));
  for (int j = 0; j < levels; ++j) r.append(gauss_legendre(order, b - d * std::ldexp(1.0, -j), b - d * std::ldexp(1.0, -j - 1)));
  r.append(gauss_legendre(order, b - tiny, b));
  return r;
}

}  // namespace freeent
