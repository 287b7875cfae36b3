#pragma once

#include <functional>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "freeent/matcore.hpp"

namespace freeent {

struct Atomic {
  std::vector<std::pair<double, double>> atoms;  // (location, weight), sorted by location
};

/// Density sampled on a uniform grid including both endpoints, linearly interpolated.
struct GriddedDensity {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> values;
};

struct Semicircle {
  double variance = 1.0;
  double mean = 0.0;
};

struct Uniform {
  double lo = 0.0;
  double hi = 1.0;
};

/// Density 1 / (pi sqrt((hi - x)(x - lo))).
struct Arcsine {
  double lo = -1.0;
  double hi = 1.0;
};

/// A probability measure on the real line. Construction validates
/// nonnegativity and unit mass (1e-10 for atoms, 1e-6 trapezoid for grids).
class SpectralMeasure {
 public:
  using Kind = std::variant<Atomic, GriddedDensity, Semicircle, Uniform, Arcsine>;

  SpectralMeasure(Kind kind);
  template <typename T>
    requires(!std::is_same_v<std::decay_t<T>, Kind> && std::is_constructible_v<Kind, T>)
  SpectralMeasure(T&& alternative)
      : SpectralMeasure(Kind(std::forward<T>(alternative))) {}

  /// Normalizes a grid by its trapezoid mass instead of rejecting it.
  static SpectralMeasure normalized_grid(double lo, double hi, std::vector<double> values);

  const Kind& kind() const { return kind_; }
  bool is_atomic() const { return std::holds_alternative<Atomic>(kind_); }
  std::string kind_name() const;

  /// Smallest interval containing the support.
  std::pair<double, double> support() const;
  /// Density at x; throws for atomic measures.
  double density(double x) const;
  double cdf(double x) const;
  /// Integral of x^p.
  double moment(int p) const;

  /// Integral of g against the measure (exact sums for atoms, quadrature otherwise).
  double integrate(const std::function<double(double)>& g) const;

 private:
  Kind kind_;
};

/// Spectral distribution of a Hermitian matrix: eigenvalues with weight 1/k,
/// coincident eigenvalues merged.
SpectralMeasure esd(const Hermitian& m);

double kolmogorov_distance(const SpectralMeasure& a, const SpectralMeasure& b);

/// I(mu) = double integral of log|s - t|; -infinity for any measure with atoms.
double log_energy(const SpectralMeasure& mu);

/// I(mu) + 3/4 + (1/2) log(2 pi).
double chi_single(const SpectralMeasure& mu);

/// A real function on [lo, hi] sampled with derivatives on a sorted grid and
/// evaluated by cubic Hermite interpolation.
class ScalarField {
 public:
  ScalarField(std::vector<double> xs, std::vector<double> values, std::vector<double> derivs,
              bool require_monotone = false);

  static ScalarField from_function(const std::function<double(double)>& f, const std::function<double(double)>& df,
                                   double lo, double hi, int points = 2048, bool require_monotone = true);
  static ScalarField identity(double lo, double hi);
  static ScalarField affine(double a, double b, double lo, double hi);
  /// c[0] + c[1] x + c[2] x^2 + ...
  static ScalarField polynomial(const std::vector<double>& c, double lo, double hi, bool require_monotone = true);
  static ScalarField arctan(double scale, double lo, double hi);

  double lo() const { return xs_.front(); }
  double hi() const { return xs_.back(); }
  const std::vector<double>& xs() const { return xs_; }
  const std::vector<double>& values() const { return values_; }

  /// Throws std::domain_error outside [lo, hi].
  double operator()(double x) const;
  double derivative(double x) const;
  /// (f(s) - f(t)) / (s - t), with f'((s+t)/2) when s and t nearly coincide.
  double divided_difference(double s, double t) const;
  /// +1 increasing, -1 decreasing, 0 otherwise.
  int monotonicity() const;

 private:
  std::size_t cell(double x) const;

  std::vector<double> xs_;
  std::vector<double> values_;
  std::vector<double> derivs_;
};

/// Double integral of log(|f(s) - f(t)| / |s - t|); the diagonal uses log|f'|.
double cov_correction(const SpectralMeasure& mu, const ScalarField& f);

/// Law of f(X) for X ~ mu. Densities are transported onto a grid of
/// `points` values on the image interval and renormalized.
SpectralMeasure pushforward(const SpectralMeasure& mu, const ScalarField& f, int points = 2048);

/// J(x) = 2 PV integral p(t) / (x - t) dt at `points` interior nodes of the support.
ScalarField conjugate_variable(const SpectralMeasure& mu, int points = 2048);

/// J at a single interior point of the support.
double conjugate_value(const SpectralMeasure& mu, double x);

/// lhs = integral J(x) P(x) dmu, rhs = integral x P(x) dmu, for P = sum c_j x^j.
std::pair<double, double> inner_product_stationarity(const SpectralMeasure& mu, const std::vector<double>& p);

/// Variance-one members of the standard families.
SpectralMeasure unit_semicircle();
SpectralMeasure unit_uniform();
SpectralMeasure unit_arcsine();
SpectralMeasure unit_two_atom();

}  // namespace freeent
