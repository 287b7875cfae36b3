#pragma once

#include <vector>

namespace freeent {

/// Nodes and weights of a one-dimensional quadrature rule.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
  void append(const QuadratureRule& other);

  template <typename F>
  double integrate(F&& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
    return s;
  }
};

/// Gauss-Legendre rule of the given order on [a, b].
QuadratureRule gauss_legendre(int order, double a = -1.0, double b = 1.0);

/// `panels` equal Gauss-Legendre panels on [a, b].
QuadratureRule composite_gauss_legendre(int order, int panels, double a, double b);

/// Gauss-Legendre panels refined geometrically toward both ends of [a, b]:
/// halves [a, a + d/2^levels], [a + d/2^(j+1), a + d/2^j], ... where d = (b-a)/2.
QuadratureRule graded_gauss_legendre(int order, int levels, double a, double b);

}  // namespace freeent
