#include "freeent/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "freeent/quadrature.hpp"

namespace freeent {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double trapezoid_mass(const GriddedDensity& g) {
  const double step = (g.hi - g.lo) / static_cast<double>(g.values.size() - 1);
  double s = 0.5 * (g.values.front() + g.values.back());
  for (std::size_t i = 1; i + 1 < g.values.size(); ++i) s += g.values[i];
  return s * step;
}

void validate(SpectralMeasure::Kind& kind) {
  std::visit(Overloaded{
                 [](Atomic& a) {
                   if (a.atoms.empty()) throw std::invalid_argument("atomic measure needs at least one atom");
                   double mass = 0.0;
                   for (const auto& [x, w] : a.atoms) {
                     if (!std::isfinite(x) || !std::isfinite(w) || w < 0.0)
                       throw std::invalid_argument("atoms need finite locations and nonnegative weights");
                     mass += w;
                   }
                   if (std::abs(mass - 1.0) > 1e-10) throw std::invalid_argument("atom weights must sum to 1");
                   std::sort(a.atoms.begin(), a.atoms.end());
                 },
                 [](GriddedDensity& g) {
                   if (g.values.size() < 2 || !(g.hi > g.lo) || !std::isfinite(g.lo) || !std::isfinite(g.hi))
                     throw std::invalid_argument("gridded density needs lo < hi and at least two values");
                   for (const double v : g.values)
                     if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("density values must be finite and nonnegative");
                   if (std::abs(trapezoid_mass(g) - 1.0) > 1e-6)
                     throw std::invalid_argument("gridded density must integrate to 1 under the trapezoid rule");
                 },
                 [](Semicircle& s) {
                   if (!(s.variance > 0.0) || !std::isfinite(s.variance) || !std::isfinite(s.mean))
                     throw std::invalid_argument("semicircle variance must be positive");
                 },
                 [](Uniform& u) {
                   if (!(u.hi > u.lo) || !std::isfinite(u.lo) || !std::isfinite(u.hi))
                     throw std::invalid_argument("uniform measure needs lo < hi");
                 },
                 [](Arcsine& a) {
                   if (!(a.hi > a.lo) || !std::isfinite(a.lo) || !std::isfinite(a.hi))
                     throw std::invalid_argument("arcsine measure needs lo < hi");
                 },
             },
             kind);
}

// A density written in the angle variable: t = m - h cos(theta), theta in [0, pi],
// w(theta) = p(t) h sin(theta), so that integral g dmu = integral g(t(theta)) w(theta) dtheta.
struct AngleForm {
  double m;
  double h;
  std::function<double(double)> w;

  double t(double theta) const { return m - h * std::cos(theta); }
  double theta(double x) const { return std::acos(std::clamp((m - x) / h, -1.0, 1.0)); }
};

AngleForm angle_form(const SpectralMeasure& mu) {
  return std::visit(
      Overloaded{
          [](const Atomic&) -> AngleForm { throw std::invalid_argument("atomic measures have no density"); },
          [](const Semicircle& s) -> AngleForm {
            return {s.mean, 2.0 * std::sqrt(s.variance), [](double th) {
                      const double sn = std::sin(th);
                      return 2.0 / kPi * sn * sn;
                    }};
          },
          [](const Uniform& u) -> AngleForm {
            return {0.5 * (u.lo + u.hi), 0.5 * (u.hi - u.lo), [](double th) { return 0.5 * std::sin(th); }};
          },
          [](const Arcsine& a) -> AngleForm {
            return {0.5 * (a.lo + a.hi), 0.5 * (a.hi - a.lo), [](double) { return 1.0 / kPi; }};
          },
          [&mu](const GriddedDensity& g) -> AngleForm {
            const double m = 0.5 * (g.lo + g.hi), h = 0.5 * (g.hi - g.lo);
            return {m, h, [&mu, m, h](double th) { return mu.density(m - h * std::cos(th)) * h * std::sin(th); }};
          },
      },
      mu.kind());
}

const QuadratureRule& outer_rule() {
  static const QuadratureRule rule = graded_gauss_legendre(24, 12, 0.0, kPi);
  return rule;
}

// Panels graded toward 0, pivot and pi.
QuadratureRule split_rule(double pivot) {
  QuadratureRule r = graded_gauss_legendre(16, 20, 0.0, pivot);
  r.append(graded_gauss_legendre(16, 20, pivot, kPi));
  return r;
}

struct MassRule {
  std::vector<double> t;
  std::vector<double> w;
};

// Nodes and density-weighted weights for integrals against a non-atomic measure.
// Grids get two Gauss points per cell, so narrow features of the density are resolved.
MassRule mass_rule(const SpectralMeasure& mu) {
  MassRule r;
  if (const auto* g = std::get_if<GriddedDensity>(&mu.kind())) {
    const std::size_t cells = g->values.size() - 1;
    const double step = (g->hi - g->lo) / static_cast<double>(cells);
    const double off = 0.5 * step / std::sqrt(3.0);
    for (std::size_t j = 0; j < cells; ++j) {
      const double mid = g->lo + (static_cast<double>(j) + 0.5) * step;
      for (const double x : {mid - off, mid + off}) {
        const double w = 0.5 * step * mu.density(x);
        if (w == 0.0) continue;
        r.t.push_back(x);
        r.w.push_back(w);
      }
    }
    return r;
  }
  const AngleForm form = angle_form(mu);
  const QuadratureRule& rule = outer_rule();
  for (std::size_t a = 0; a < rule.size(); ++a) {
    const double w = rule.weights[a] * form.w(rule.nodes[a]);
    if (w == 0.0) continue;
    r.t.push_back(form.t(rule.nodes[a]));
    r.w.push_back(w);
  }
  return r;
}

double grid_node(const GriddedDensity& g, std::size_t j) {
  const std::size_t cells = g.values.size() - 1;
  return j == cells ? g.hi : g.lo + (g.hi - g.lo) * static_cast<double>(j) / static_cast<double>(cells);
}

// Integral of p(t) log|x - t| for a piecewise-linear density, exact cell by cell:
// with u = t - x and p = c0 + c1 u on a cell, the antiderivatives are
// u log|u| - u and u^2/2 log|u| - u^2/4.
double grid_log_potential(const GriddedDensity& g, double x) {
  auto f0 = [](double u) { return u == 0.0 ? 0.0 : u * std::log(std::abs(u)) - u; };
  auto f1 = [](double u) { return u == 0.0 ? 0.0 : 0.5 * u * u * std::log(std::abs(u)) - 0.25 * u * u; };
  double s = 0.0;
  double a = grid_node(g, 0);
  double f0a = f0(a - x), f1a = f1(a - x);
  for (std::size_t j = 0; j + 1 < g.values.size(); ++j) {
    const double b = grid_node(g, j + 1);
    const double f0b = f0(b - x), f1b = f1(b - x);
    const double c1 = (g.values[j + 1] - g.values[j]) / (b - a);
    const double c0 = g.values[j] + c1 * (x - a);
    s += c0 * (f0b - f0a) + c1 * (f1b - f1a);
    a = b;
    f0a = f0b;
    f1a = f1b;
  }
  return s;
}

// PV integral of p(t) / (x - t) for a piecewise-linear density, exact cell by cell.
// The log|0| terms of the two cells meeting at x cancel in the principal value.
double grid_hilbert(const GriddedDensity& g, double x) {
  auto lg = [](double u) { return u == 0.0 ? 0.0 : std::log(std::abs(u)); };
  double s = 0.0;
  for (std::size_t j = 0; j + 1 < g.values.size(); ++j) {
    const double a = grid_node(g, j), b = grid_node(g, j + 1);
    const double c1 = (g.values[j + 1] - g.values[j]) / (b - a);
    const double c0 = g.values[j] + c1 * (x - a);
    s -= c0 * (lg(b - x) - lg(a - x)) + c1 * (b - a);
  }
  return s;
}

// log|cos a - cos b| without cancellation near a = b.
double log_cos_gap(double a, double b) {
  return std::log(2.0) + std::log(std::abs(std::sin(0.5 * (a + b)))) + std::log(std::abs(std::sin(0.5 * (a - b))));
}

double atomic_cdf(const Atomic& a, double x, bool left) {
  double s = 0.0;
  for (const auto& [loc, w] : a.atoms)
    if (left ? loc < x : loc <= x) s += w;
  return std::min(s, 1.0);
}

double cdf_left(const SpectralMeasure& mu, double x) {
  if (const auto* a = std::get_if<Atomic>(&mu.kind())) return atomic_cdf(*a, x, true);
  return mu.cdf(x);
}

}  // namespace

// -- SpectralMeasure -------------------------------------------------------------

SpectralMeasure::SpectralMeasure(Kind kind) : kind_(std::move(kind)) { validate(kind_); }

SpectralMeasure SpectralMeasure::normalized_grid(double lo, double hi, std::vector<double> values) {
  GriddedDensity g{lo, hi, std::move(values)};
  if (g.values.size() < 2 || !(hi > lo)) throw std::invalid_argument("gridded density needs lo < hi and two values");
  for (const double v : g.values)
    if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("density values must be finite and nonnegative");
  const double mass = trapezoid_mass(g);
  if (!(mass > 0.0)) throw std::invalid_argument("gridded density has zero mass");
  for (double& v : g.values) v /= mass;
  return SpectralMeasure(std::move(g));
}

std::string SpectralMeasure::kind_name() const {
  static const char* names[] = {"atomic", "gridded", "semicircle", "uniform", "arcsine"};
  return names[kind_.index()];
}

std::pair<double, double> SpectralMeasure::support() const {
  return std::visit(Overloaded{
                        [](const Atomic& a) { return std::make_pair(a.atoms.front().first, a.atoms.back().first); },
                        [](const GriddedDensity& g) { return std::make_pair(g.lo, g.hi); },
                        [](const Semicircle& s) {
                          const double r = 2.0 * std::sqrt(s.variance);
                          return std::make_pair(s.mean - r, s.mean + r);
                        },
                        [](const Uniform& u) { return std::make_pair(u.lo, u.hi); },
                        [](const Arcsine& a) { return std::make_pair(a.lo, a.hi); },
                    },
                    kind_);
}

double SpectralMeasure::density(double x) const {
  return std::visit(Overloaded{
                        [](const Atomic&) -> double { throw std::invalid_argument("atomic measures have no density"); },
                        [x](const GriddedDensity& g) {
                          if (x < g.lo || x > g.hi) return 0.0;
                          const double pos = (x - g.lo) / (g.hi - g.lo) * static_cast<double>(g.values.size() - 1);
                          const std::size_t i = std::min(static_cast<std::size_t>(pos), g.values.size() - 2);
                          const double f = pos - static_cast<double>(i);
                          return (1.0 - f) * g.values[i] + f * g.values[i + 1];
                        },
                        [x](const Semicircle& s) {
                          const double r2 = 4.0 * s.variance, d = x - s.mean;
                          return d * d >= r2 ? 0.0 : 2.0 / (kPi * r2) * std::sqrt(r2 - d * d);
                        },
                        [x](const Uniform& u) { return x < u.lo || x > u.hi ? 0.0 : 1.0 / (u.hi - u.lo); },
                        [x](const Arcsine& a) {
                          if (x <= a.lo || x >= a.hi) return x == a.lo || x == a.hi ? kInf : 0.0;
                          return 1.0 / (kPi * std::sqrt((a.hi - x) * (x - a.lo)));
                        },
                    },
                    kind_);
}

double SpectralMeasure::cdf(double x) const {
  return std::visit(Overloaded{
                        [x](const Atomic& a) { return atomic_cdf(a, x, false); },
                        [x](const GriddedDensity& g) {
                          if (x <= g.lo) return 0.0;
                          if (x >= g.hi) return 1.0;
                          const double step = (g.hi - g.lo) / static_cast<double>(g.values.size() - 1);
                          const double pos = (x - g.lo) / step;
                          const std::size_t i = std::min(static_cast<std::size_t>(pos), g.values.size() - 2);
                          double s = 0.0;
                          for (std::size_t j = 0; j < i; ++j) s += 0.5 * (g.values[j] + g.values[j + 1]) * step;
                          const double f = pos - static_cast<double>(i);
                          const double vx = (1.0 - f) * g.values[i] + f * g.values[i + 1];
                          return std::clamp(s + 0.5 * (g.values[i] + vx) * f * step, 0.0, 1.0);
                        },
                        [x](const Semicircle& s) {
                          const double u = std::clamp((x - s.mean) / (2.0 * std::sqrt(s.variance)), -1.0, 1.0);
                          return 0.5 + (u * std::sqrt(1.0 - u * u) + std::asin(u)) / kPi;
                        },
                        [x](const Uniform& u) { return std::clamp((x - u.lo) / (u.hi - u.lo), 0.0, 1.0); },
                        [x](const Arcsine& a) {
                          const double u = std::clamp((2.0 * x - a.lo - a.hi) / (a.hi - a.lo), -1.0, 1.0);
                          return 0.5 + std::asin(u) / kPi;
                        },
                    },
                    kind_);
}

double SpectralMeasure::integrate(const std::function<double(double)>& g) const {
  if (const auto* a = std::get_if<Atomic>(&kind_)) {
    double s = 0.0;
    for (const auto& [x, w] : a->atoms) s += w * g(x);
    return s;
  }
  const MassRule r = mass_rule(*this);
  double s = 0.0;
  for (std::size_t a = 0; a < r.t.size(); ++a) s += r.w[a] * g(r.t[a]);
  return s;
}

double SpectralMeasure::moment(int p) const {
  return integrate([p](double x) { return std::pow(x, p); });
}

SpectralMeasure esd(const Hermitian& m) {
  const auto ev = eigenvalues(m);
  const double k = static_cast<double>(ev.size());
  if (ev.empty()) throw std::invalid_argument("esd of an empty matrix");
  const double scale = 1.0 + std::max(std::abs(ev.front()), std::abs(ev.back()));
  Atomic a;
  for (const double x : ev) {
    if (!a.atoms.empty() && std::abs(x - a.atoms.back().first) <= 1e-13 * scale)
      a.atoms.back().second += 1.0 / k;
    else
      a.atoms.emplace_back(x, 1.0 / k);
  }
  double total = 0.0;
  for (const auto& [x, w] : a.atoms) total += w;
  for (auto& [x, w] : a.atoms) w /= total;
  return SpectralMeasure(std::move(a));
}

double kolmogorov_distance(const SpectralMeasure& a, const SpectralMeasure& b) {
  std::vector<double> points;
  for (const SpectralMeasure* mu : {&a, &b})
    if (const auto* at = std::get_if<Atomic>(&mu->kind()))
      for (const auto& [x, w] : at->atoms) points.push_back(x);
  const auto [alo, ahi] = a.support();
  const auto [blo, bhi] = b.support();
  const double lo = std::min(alo, blo), hi = std::max(ahi, bhi);
  const int grid = 8192;
  for (int i = 0; i <= grid; ++i) points.push_back(lo + (hi - lo) * i / grid);
  double d = 0.0;
  for (const double x : points) {
    d = std::max(d, std::abs(a.cdf(x) - b.cdf(x)));
    d = std::max(d, std::abs(cdf_left(a, x) - cdf_left(b, x)));
  }
  return d;
}

// -- log-energy --------------------------------------------------------------------

double log_energy(const SpectralMeasure& mu) {
  if (mu.is_atomic()) return -kInf;
  if (const auto* g = std::get_if<GriddedDensity>(&mu.kind())) {
    // Simpson on each cell of p times its exact log-potential
    double s = 0.0;
    double ua = grid_log_potential(*g, grid_node(*g, 0));
    for (std::size_t j = 0; j + 1 < g->values.size(); ++j) {
      const double a = grid_node(*g, j), b = grid_node(*g, j + 1);
      const double mid = 0.5 * (a + b);
      const double ub = grid_log_potential(*g, b);
      const double um = grid_log_potential(*g, mid);
      const double pm = 0.5 * (g->values[j] + g->values[j + 1]);
      s += (b - a) / 6.0 * (g->values[j] * ua + 4.0 * pm * um + g->values[j + 1] * ub);
      ua = ub;
    }
    return s;
  }
  const AngleForm form = angle_form(mu);
  const QuadratureRule& outer = outer_rule();
  const double log2pi = kPi * std::log(2.0);
  double mass = 0.0, interaction = 0.0;
  for (std::size_t a = 0; a < outer.size(); ++a) {
    const double phi = outer.nodes[a];
    const double wphi = form.w(phi);
    if (wphi == 0.0) continue;
    mass += outer.weights[a] * wphi;
    // integral of log|cos theta - cos phi| over [0, pi] is -pi log 2
    const QuadratureRule inner = split_rule(phi);
    double u = -log2pi * wphi;
    for (std::size_t b = 0; b < inner.size(); ++b) {
      const double th = inner.nodes[b];
      u += inner.weights[b] * (form.w(th) - wphi) * log_cos_gap(th, phi);
    }
    interaction += outer.weights[a] * wphi * u;
  }
  return mass * mass * std::log(form.h) + interaction;
}

double chi_single(const SpectralMeasure& mu) {
  const double i = log_energy(mu);
  if (!std::isfinite(i)) return i;
  return i + 0.75 + 0.5 * std::log(2.0 * kPi);
}

// -- ScalarField -------------------------------------------------------------------

ScalarField::ScalarField(std::vector<double> xs, std::vector<double> values, std::vector<double> derivs,
                         bool require_monotone)
    : xs_(std::move(xs)), values_(std::move(values)), derivs_(std::move(derivs)) {
  if (xs_.size() < 2 || values_.size() != xs_.size() || derivs_.size() != xs_.size())
    throw std::invalid_argument("scalar field needs at least two samples with values and derivatives");
  for (std::size_t i = 0; i < xs_.size(); ++i) {
    if (!std::isfinite(xs_[i]) || !std::isfinite(values_[i]) || !std::isfinite(derivs_[i]))
      throw std::invalid_argument("scalar field samples must be finite");
    if (i > 0 && !(xs_[i] > xs_[i - 1])) throw std::invalid_argument("scalar field grid must be strictly increasing");
  }
  if (require_monotone && monotonicity() == 0) throw std::invalid_argument("scalar field is not strictly monotone");
}

ScalarField ScalarField::from_function(const std::function<double(double)>& f, const std::function<double(double)>& df,
                                       double lo, double hi, int points, bool require_monotone) {
  if (!(hi > lo) || points < 2) throw std::invalid_argument("scalar field needs lo < hi and two points");
  std::vector<double> xs(static_cast<std::size_t>(points)), v(xs.size()), d(xs.size());
  for (int i = 0; i < points; ++i) {
    const double x = i + 1 == points ? hi : lo + (hi - lo) * i / (points - 1);
    xs[static_cast<std::size_t>(i)] = x;
    v[static_cast<std::size_t>(i)] = f(x);
    d[static_cast<std::size_t>(i)] = df(x);
  }
  return ScalarField(std::move(xs), std::move(v), std::move(d), require_monotone);
}

ScalarField ScalarField::identity(double lo, double hi) { return affine(1.0, 0.0, lo, hi); }

ScalarField ScalarField::affine(double a, double b, double lo, double hi) {
  return from_function([a, b](double x) { return a * x + b; }, [a](double) { return a; }, lo, hi, 2);
}

ScalarField ScalarField::polynomial(const std::vector<double>& c, double lo, double hi, bool require_monotone) {
  auto f = [c](double x) {
    double s = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) s = s * x + *it;
    return s;
  };
  auto df = [c](double x) {
    double s = 0.0;
    for (std::size_t j = c.size(); j-- > 1;) s = s * x + static_cast<double>(j) * c[j];
    return s;
  };
  return from_function(f, df, lo, hi, 2048, require_monotone);
}

ScalarField ScalarField::arctan(double scale, double lo, double hi) {
  return from_function([scale](double x) { return std::atan(scale * x); },
                       [scale](double x) { return scale / (1.0 + scale * scale * x * x); }, lo, hi);
}

std::size_t ScalarField::cell(double x) const {
  const double tol = 1e-12 * (1.0 + std::max(std::abs(xs_.front()), std::abs(xs_.back())));
  if (x < xs_.front() - tol || x > xs_.back() + tol || std::isnan(x))
    throw std::domain_error("scalar field evaluated outside [" + std::to_string(xs_.front()) + ", " +
                            std::to_string(xs_.back()) + "]");
  const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
  const std::size_t i = it == xs_.begin() ? 0 : static_cast<std::size_t>(it - xs_.begin()) - 1;
  return std::min(i, xs_.size() - 2);
}

double ScalarField::operator()(double x) const {
  const std::size_t i = cell(x);
  const double h = xs_[i + 1] - xs_[i];
  const double s = (x - xs_[i]) / h;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * values_[i] + (s3 - 2 * s2 + s) * h * derivs_[i] + (-2 * s3 + 3 * s2) * values_[i + 1] +
         (s3 - s2) * h * derivs_[i + 1];
}

double ScalarField::derivative(double x) const {
  const std::size_t i = cell(x);
  const double h = xs_[i + 1] - xs_[i];
  const double s = (x - xs_[i]) / h;
  const double s2 = s * s;
  return (6 * s2 - 6 * s) / h * values_[i] + (3 * s2 - 4 * s + 1) * derivs_[i] + (-6 * s2 + 6 * s) / h * values_[i + 1] +
         (3 * s2 - 2 * s) * derivs_[i + 1];
}

double ScalarField::divided_difference(double s, double t) const {
  if (std::abs(s - t) <= 1e-7 * (1.0 + std::abs(s) + std::abs(t))) return derivative(0.5 * (s + t));
  return ((*this)(s) - (*this)(t)) / (s - t);
}

int ScalarField::monotonicity() const {
  bool up = true, down = true;
  for (std::size_t i = 1; i < values_.size(); ++i) {
    up = up && values_[i] > values_[i - 1];
    down = down && values_[i] < values_[i - 1];
  }
  return up ? 1 : (down ? -1 : 0);
}

// -- change of variables -----------------------------------------------------------

double cov_correction(const SpectralMeasure& mu, const ScalarField& f) {
  if (f.monotonicity() == 0) throw std::invalid_argument("cov_correction: f is not strictly monotone");
  if (const auto* a = std::get_if<Atomic>(&mu.kind())) {
    double s = 0.0;
    for (const auto& [x, wx] : a->atoms)
      for (const auto& [y, wy] : a->atoms) s += wx * wy * std::log(std::abs(f.divided_difference(x, y)));
    return s;
  }
  const MassRule r = mass_rule(mu);
  const std::size_t n = r.t.size();
  std::vector<double> fv(n), dv(n);
  for (std::size_t a = 0; a < n; ++a) {
    fv[a] = f(r.t[a]);
    dv[a] = f.derivative(r.t[a]);
  }
  double s = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    double row = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      const double gap = r.t[a] - r.t[b];
      const double dd = std::abs(gap) <= 1e-7 * (1.0 + std::abs(r.t[a]) + std::abs(r.t[b]))
                            ? f.divided_difference(r.t[a], r.t[b])
                            : (fv[a] - fv[b]) / gap;
      row += r.w[b] * std::log(std::abs(dd));
    }
    s += r.w[a] * row;
  }
  return s;
}

SpectralMeasure pushforward(const SpectralMeasure& mu, const ScalarField& f, int points) {
  const int dir = f.monotonicity();
  if (dir == 0) throw std::invalid_argument("pushforward: f is not strictly monotone");
  if (const auto* a = std::get_if<Atomic>(&mu.kind())) {
    std::vector<std::pair<double, double>> mapped;
    for (const auto& [x, w] : a->atoms) mapped.emplace_back(f(x), w);
    std::sort(mapped.begin(), mapped.end());
    Atomic out;
    for (const auto& [y, w] : mapped) {
      if (!out.atoms.empty() && out.atoms.back().first == y)
        out.atoms.back().second += w;
      else
        out.atoms.emplace_back(y, w);
    }
    return SpectralMeasure(std::move(out));
  }
  if (points < 2) throw std::invalid_argument("pushforward needs at least two grid points");
  const auto [lo, hi] = mu.support();
  const double flo = f(lo), fhi = f(hi);
  const double ylo = std::min(flo, fhi), yhi = std::max(flo, fhi);
  std::vector<double> values(static_cast<std::size_t>(points));
  for (int j = 0; j < points; ++j) {
    const double y = j + 1 == points ? yhi : ylo + (yhi - ylo) * j / (points - 1);
    double a = lo, b = hi;
    for (int it = 0; it < 200 && b - a > 1e-15 * (1.0 + std::abs(a)); ++it) {
      const double mid = 0.5 * (a + b);
      if ((f(mid) - y) * dir < 0.0)
        a = mid;
      else
        b = mid;
    }
    const double x = 0.5 * (a + b);
    const double slope = std::abs(f.derivative(x));
    if (slope < 1e-10) throw std::domain_error("pushforward: derivative of f vanishes on the support");
    values[static_cast<std::size_t>(j)] = mu.density(x) / slope;
  }
  return SpectralMeasure::normalized_grid(ylo, yhi, std::move(values));
}

// -- conjugate variables ------------------------------------------------------------

double conjugate_value(const SpectralMeasure& mu, double x) {
  const AngleForm form = angle_form(mu);
  const auto [lo, hi] = mu.support();
  if (!(x > lo && x < hi)) throw std::domain_error("conjugate variable evaluated outside the interior of the support");
  if (const auto* g = std::get_if<GriddedDensity>(&mu.kind())) return 2.0 * grid_hilbert(*g, x);
  const double tx = form.theta(x);
  const double px = mu.density(x);
  const QuadratureRule rule = split_rule(tx);
  double s = 0.0;
  for (std::size_t b = 0; b < rule.size(); ++b) {
    const double th = rule.nodes[b];
    // x - t(theta) = h (cos theta - cos theta_x)
    const double gap = -2.0 * form.h * std::sin(0.5 * (th + tx)) * std::sin(0.5 * (th - tx));
    s += rule.weights[b] * (form.w(th) / gap - px / (tx - th));
  }
  return 2.0 * (s + px * std::log(tx / (kPi - tx)));
}

ScalarField conjugate_variable(const SpectralMeasure& mu, int points) {
  if (points < 3) throw std::invalid_argument("conjugate_variable needs at least three points");
  const AngleForm form = angle_form(mu);
  std::vector<double> xs(static_cast<std::size_t>(points)), js(xs.size()), ds(xs.size());
  for (int i = 0; i < points; ++i) {
    xs[static_cast<std::size_t>(i)] = form.t(kPi * (i + 0.5) / points);
    js[static_cast<std::size_t>(i)] = conjugate_value(mu, xs[static_cast<std::size_t>(i)]);
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const std::size_t l = i == 0 ? 0 : i - 1, r = i + 1 == xs.size() ? i : i + 1;
    ds[i] = (js[r] - js[l]) / (xs[r] - xs[l]);
  }
  return ScalarField(std::move(xs), std::move(js), std::move(ds));
}

std::pair<double, double> inner_product_stationarity(const SpectralMeasure& mu, const std::vector<double>& p) {
  auto poly = [&p](double x) {
    double s = 0.0;
    for (auto it = p.rbegin(); it != p.rend(); ++it) s = s * x + *it;
    return s;
  };
  const MassRule r = mass_rule(mu);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t a = 0; a < r.t.size(); ++a) {
    const double x = r.t[a];
    lhs += r.w[a] * conjugate_value(mu, x) * poly(x);
    rhs += r.w[a] * x * poly(x);
  }
  return {lhs, rhs};
}

SpectralMeasure unit_semicircle() { return Semicircle{1.0, 0.0}; }
SpectralMeasure unit_uniform() { return Uniform{-std::sqrt(3.0), std::sqrt(3.0)}; }
SpectralMeasure unit_arcsine() { return Arcsine{-std::sqrt(2.0), std::sqrt(2.0)}; }
SpectralMeasure unit_two_atom() { return Atomic{{{-1.0, 0.5}, {1.0, 0.5}}}; }

}  // namespace freeent
